//! Finite discrete distributions over power values and their 24-hour
//! periodic (cyclostationary) bundles.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{TimeGrid, HOURS_PER_DAY};

/// Tolerance on the total probability mass.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A finite distribution with strictly increasing support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution", into = "RawDistribution")]
pub struct EmpiricalDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawDistribution {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawDistribution> for EmpiricalDistribution {
    type Error = Error;

    fn try_from(raw: RawDistribution) -> Result<Self> {
        Self::new(raw.support, raw.probs)
    }
}

impl From<EmpiricalDistribution> for RawDistribution {
    fn from(d: EmpiricalDistribution) -> Self {
        Self {
            support: d.support,
            probs: d.probs,
        }
    }
}

impl EmpiricalDistribution {
    /// Validates and wraps an explicit support/probability pair.
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "support has {} values but probs has {}",
                support.len(),
                probs.len()
            )));
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidDistribution(
                "non-finite support value".into(),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDistribution(
                "support must be strictly increasing".into(),
            ));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(Self { support, probs })
    }

    /// Point mass at `value`.
    pub fn singleton(value: f64) -> Self {
        Self {
            support: vec![value],
            probs: vec![1.0],
        }
    }

    /// Builds a distribution from unnormalized `(value, weight)` pairs.
    /// Equal values are merged and the total weight is normalized to one.
    pub fn from_weighted<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut pairs: Vec<(f64, f64)> = pairs.into_iter().filter(|(_, w)| *w > 0.0).collect();
        if pairs.is_empty() {
            return Err(Error::InvalidDistribution("no positive weight".into()));
        }
        if pairs.iter().any(|(x, w)| !x.is_finite() || !w.is_finite()) {
            return Err(Error::InvalidDistribution(
                "non-finite value or weight".into(),
            ));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut weights: Vec<f64> = Vec::with_capacity(pairs.len());
        for (x, w) in pairs {
            match support.last() {
                Some(last) if *last == x => *weights.last_mut().unwrap() += w,
                _ => {
                    support.push(x);
                    weights.push(w);
                }
            }
        }
        let total: f64 = weights.iter().sum();
        let probs = weights.into_iter().map(|w| w / total).collect();
        Self::new(support, probs)
    }

    /// Empirical frequencies of a sample list.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyDataset("no samples".into()));
        }
        Self::from_weighted(samples.iter().map(|&x| (x, 1.0)))
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn expectation(&self) -> f64 {
        self.iter().map(|(x, p)| x * p).sum()
    }

    pub fn min(&self) -> f64 {
        self.support[0]
    }

    pub fn max(&self) -> f64 {
        *self.support.last().unwrap()
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.min(), self.max())
    }

    /// Maps every support value through `f`, merging collisions.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::from_weighted(self.iter().map(|(x, p)| (f(x), p)))
    }

    /// Draws one value by inverse-CDF lookup of a uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Smallest support value whose cumulative probability exceeds `u`.
    pub fn quantile(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for (x, p) in self.iter() {
            acc += p;
            if u < acc {
                return x;
            }
        }
        self.max()
    }
}

/// Quantile-bins `samples` into at most `n_states` states.
///
/// Equal sample values always share a bin. A value group whose first
/// occurrence sits at cumulative fraction `c` goes to bin
/// `floor(c * n_states)`. Support values are per-bin means and
/// probabilities are per-bin frequencies; empty bins are dropped.
pub fn discretize(samples: &[f64], n_states: usize) -> Result<EmpiricalDistribution> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("no samples to discretize".into()));
    }
    discretize_distribution(&EmpiricalDistribution::from_samples(samples)?, n_states)
}

/// Weighted variant of [`discretize`] operating on an existing distribution.
pub fn discretize_distribution(
    dist: &EmpiricalDistribution,
    n_states: usize,
) -> Result<EmpiricalDistribution> {
    if n_states == 0 {
        return Err(Error::Config(
            "discretization needs at least one state".into(),
        ));
    }
    let mut bins: Vec<Vec<(f64, f64)>> = vec![Vec::new(); n_states];
    let mut cum = 0.0;
    for (x, p) in dist.iter() {
        let bin = ((cum * n_states as f64).floor() as usize).min(n_states - 1);
        bins[bin].push((x, p));
        cum += p;
    }
    let mut support = Vec::new();
    let mut probs = Vec::new();
    for bin in bins.into_iter().filter(|b| !b.is_empty()) {
        let mass: f64 = bin.iter().map(|(_, p)| p).sum();
        let mean = if bin.len() == 1 {
            bin[0].0
        } else {
            bin.iter().map(|(x, p)| x * p).sum::<f64>() / mass
        };
        support.push(mean);
        probs.push(mass);
    }
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    EmpiricalDistribution::new(support, probs)
}

/// 24 hour-indexed distributions of a process that repeats every day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct CyclostationaryModel {
    by_hour: Vec<EmpiricalDistribution>,
}

#[derive(Deserialize)]
struct RawModel {
    by_hour: Vec<EmpiricalDistribution>,
}

impl TryFrom<RawModel> for CyclostationaryModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        Self::new(raw.by_hour)
    }
}

impl CyclostationaryModel {
    pub fn new(by_hour: Vec<EmpiricalDistribution>) -> Result<Self> {
        if by_hour.len() != HOURS_PER_DAY {
            return Err(Error::InvalidDistribution(format!(
                "cyclostationary model needs {HOURS_PER_DAY} hourly distributions, got {}",
                by_hour.len()
            )));
        }
        Ok(Self { by_hour })
    }

    /// The same distribution for every hour.
    pub fn constant(dist: EmpiricalDistribution) -> Self {
        Self {
            by_hour: vec![dist; HOURS_PER_DAY],
        }
    }

    pub fn hour(&self, hour: usize) -> &EmpiricalDistribution {
        &self.by_hour[hour % HOURS_PER_DAY]
    }

    pub fn by_hour(&self) -> &[EmpiricalDistribution] {
        &self.by_hour
    }

    /// Distribution governing stage `k` of `grid`.
    pub fn at(&self, grid: &TimeGrid, k: usize) -> &EmpiricalDistribution {
        self.hour(grid.hour_of_day(k))
    }

    pub fn sample<R: Rng + ?Sized>(&self, grid: &TimeGrid, k: usize, rng: &mut R) -> f64 {
        self.at(grid, k).sample(rng)
    }

    pub fn expectation(&self, grid: &TimeGrid, k: usize) -> f64 {
        self.at(grid, k).expectation()
    }

    pub fn bounds(&self, grid: &TimeGrid, k: usize) -> (f64, f64) {
        self.at(grid, k).bounds()
    }

    pub fn min_support(&self) -> f64 {
        self.by_hour
            .iter()
            .map(|d| d.min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_support(&self) -> f64 {
        self.by_hour
            .iter()
            .map(|d| d.max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dist(pairs: &[(f64, f64)]) -> EmpiricalDistribution {
        EmpiricalDistribution::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_malformed() {
        assert!(EmpiricalDistribution::new(vec![], vec![]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(EmpiricalDistribution::new(vec![2.0, 1.0], vec![0.5, 0.5]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0, 2.0], vec![0.5, 0.6]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0, 2.0], vec![1.5, -0.5]).is_err());
        assert!(EmpiricalDistribution::new(vec![1.0], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn singleton_stats() {
        let d = EmpiricalDistribution::singleton(-2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), -2.0);
        }
        assert_eq!(d.expectation(), -2.0);
        assert_eq!(d.bounds(), (-2.0, -2.0));
    }

    #[test]
    fn expectation_and_bounds() {
        assert_eq!(dist(&[(0.0, 0.5), (4.0, 0.5)]).expectation(), 2.0);
        assert_eq!(
            dist(&[(1.0, 0.25), (2.0, 0.5), (3.0, 0.25)]).bounds(),
            (1.0, 3.0)
        );
    }

    #[test]
    fn weighted_merges_duplicates() {
        let d = EmpiricalDistribution::from_weighted([(3.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).unwrap();
        assert_eq!(d.support(), &[1.0, 3.0]);
        assert_eq!(d.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn discretize_degenerate() {
        let d = discretize(&[1.0, 1.0, 1.0], 5).unwrap();
        assert_eq!(d.support(), &[1.0]);
        assert_eq!(d.probs(), &[1.0]);
    }

    /// Expected values come from explicitly sorting the samples and
    /// averaging each consecutive block of 20.
    #[test]
    fn discretize_uniform_hundred() {
        let samples: Vec<f64> = (0..100).map(f64::from).collect();
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let oracle: Vec<f64> = sorted
            .chunks(20)
            .map(|c| c.iter().sum::<f64>() / c.len() as f64)
            .collect();
        assert_eq!(oracle, vec![9.5, 29.5, 49.5, 69.5, 89.5]);

        let d = discretize(&samples, 5).unwrap();
        assert_eq!(d.len(), 5);
        for (got, want) in d.support().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        for p in d.probs() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn discretize_keeps_ties_together() {
        let d = discretize(&[0.0, 0.0, 0.0, 10.0], 2).unwrap();
        assert_eq!(d.support(), &[0.0, 10.0]);
        assert_eq!(d.probs(), &[0.75, 0.25]);
    }

    #[test]
    fn discretize_rejects_empty() {
        assert!(discretize(&[], 3).is_err());
        assert!(discretize(&[1.0], 0).is_err());
    }

    #[test]
    fn discretize_preserves_mean() {
        let samples: Vec<f64> = (0..997).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let exact_mean = samples.iter().sum::<f64>() / samples.len() as f64;
        for n in 1..8 {
            let d = discretize(&samples, n).unwrap();
            assert!((d.expectation() - exact_mean).abs() < 1e-9);
            assert!(d.len() <= n);
        }
    }

    #[test]
    fn quantile_walks_cdf() {
        let d = dist(&[(1.0, 0.25), (2.0, 0.5), (3.0, 0.25)]);
        assert_eq!(d.quantile(0.0), 1.0);
        assert_eq!(d.quantile(0.2499), 1.0);
        assert_eq!(d.quantile(0.25), 2.0);
        assert_eq!(d.quantile(0.9999), 3.0);
    }

    #[test]
    fn sample_frequencies_match_probs() {
        let d = dist(&[(0.0, 0.1), (1.0, 0.2), (2.0, 0.3), (5.0, 0.4)]);
        let n = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..n {
            let x = d.sample(&mut rng);
            let i = d.support().iter().position(|s| *s == x).unwrap();
            counts[i] += 1;
        }
        for (c, p) in counts.iter().zip(d.probs()) {
            let freq = *c as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 3.0 * se, "freq {freq} vs p {p}");
        }
    }

    #[test]
    fn model_requires_24_hours() {
        assert!(
            CyclostationaryModel::new(vec![EmpiricalDistribution::singleton(0.0); 23]).is_err()
        );
        let m = CyclostationaryModel::constant(EmpiricalDistribution::singleton(1.0));
        assert_eq!(m.by_hour().len(), 24);
    }

    #[test]
    fn model_is_periodic_over_stages() {
        let by_hour = (0..24)
            .map(|h| EmpiricalDistribution::singleton(h as f64))
            .collect();
        let m = CyclostationaryModel::new(by_hour).unwrap();
        let g = TimeGrid::new(3 * 3600, 3 * 3600 + 3 * 86_400, 3600).unwrap();
        for k in 0..=(g.n_stages() - 24) {
            assert_eq!(m.at(&g, k), m.at(&g, k + 24));
        }
        assert_eq!(m.expectation(&g, 0), 3.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let by_hour = (0..24)
            .map(|h| {
                EmpiricalDistribution::from_weighted([
                    (0.1 * h as f64, 1.0 / 3.0),
                    (std::f64::consts::PI * h as f64 + 0.7, 2.0 / 3.0),
                ])
                .unwrap()
            })
            .collect();
        let m = CyclostationaryModel::new(by_hour).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        let back: CyclostationaryModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn json_rejects_bad_probs() {
        let bad = r#"{"support":[0.0,1.0],"probs":[0.4,0.4]}"#;
        assert!(serde_json::from_str::<EmpiricalDistribution>(bad).is_err());
    }
}
