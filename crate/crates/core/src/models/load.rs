//! Demand model fitted from hourly consumption history.

use crate::distribution::{discretize, CyclostationaryModel};
use crate::error::{Error, Result};
use crate::time::{hour_of_epoch, HOURS_PER_DAY};

/// Fits a cyclostationary load model from `(timestamp, consumption kW)`.
///
/// Consumption is negated so every support value is `<= 0`.
pub fn fit_load_model(
    hourly_load: &[(i64, f64)],
    n_states: usize,
    utc_offset_s: i64,
) -> Result<CyclostationaryModel> {
    let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); HOURS_PER_DAY];
    for &(t, kw) in hourly_load {
        if !(kw >= 0.0 && kw.is_finite()) {
            return Err(Error::Config(format!(
                "load consumption must be finite and non-negative, got {kw} at {t}"
            )));
        }
        buckets[hour_of_epoch(t + utc_offset_s)].push(0.0 - kw);
    }
    let by_hour = buckets
        .iter()
        .enumerate()
        .map(|(hour, samples)| {
            if samples.is_empty() {
                Err(Error::MissingHour { hour })
            } else {
                discretize(samples, n_states)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CyclostationaryModel::new(by_hour)
}

/// Per-hour bucket sizes, for ingestion reports.
pub fn load_bucket_sizes(hourly_load: &[(i64, f64)], utc_offset_s: i64) -> Vec<usize> {
    let mut sizes = vec![0; HOURS_PER_DAY];
    for &(t, _) in hourly_load {
        sizes[hour_of_epoch(t + utc_offset_s)] += 1;
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::EmpiricalDistribution;

    #[test]
    fn constant_load_is_singleton() {
        let data: Vec<(i64, f64)> = (0..48).map(|h| (h * 3600, 2.0)).collect();
        let m = fit_load_model(&data, 5, 0).unwrap();
        for h in 0..24 {
            assert_eq!(m.hour(h), &EmpiricalDistribution::singleton(-2.0));
        }
    }

    #[test]
    fn alternating_hours() {
        let data: Vec<(i64, f64)> = (0..240)
            .map(|h| (h * 3600, if h % 2 == 0 { 1.0 } else { 3.0 }))
            .collect();
        let m = fit_load_model(&data, 5, 0).unwrap();
        assert_eq!(m.hour(0), &EmpiricalDistribution::singleton(-1.0));
        assert_eq!(m.hour(1), &EmpiricalDistribution::singleton(-3.0));
    }

    #[test]
    fn noisy_month_has_bounded_states() {
        let data: Vec<(i64, f64)> = (0..720)
            .map(|h| (h * 3600, 1.0 + ((h * 7919) % 113) as f64 / 50.0))
            .collect();
        let m = fit_load_model(&data, 5, 0).unwrap();
        for d in m.by_hour() {
            assert!(d.len() <= 5);
            assert!((d.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(d.max() <= 0.0);
        }
    }

    #[test]
    fn missing_hour_is_named() {
        let data: Vec<(i64, f64)> = (0..24)
            .filter(|h| *h != 7)
            .map(|h| (h * 3600, 1.0))
            .collect();
        match fit_load_model(&data, 3, 0) {
            Err(Error::MissingHour { hour }) => assert_eq!(hour, 7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_consumption_is_not_negative_zero() {
        let data: Vec<(i64, f64)> = (0..24).map(|h| (h * 3600, 0.0)).collect();
        let m = fit_load_model(&data, 3, 0).unwrap();
        assert!(m.hour(0).support()[0].is_sign_positive());
    }

    #[test]
    fn rejects_negative_consumption() {
        let data = vec![(0, -1.0)];
        assert!(fit_load_model(&data, 3, 0).is_err());
    }
}
