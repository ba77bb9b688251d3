//! Battery dynamics and the admissible grid-decision intervals.
//!
//! Sign convention: power into the decision unit is positive. PV `e >= 0`,
//! load `l <= 0`, grid purchase `u > 0`, battery discharge `v > 0`, with
//! the balance `e + u + v + l = 0`. Every interval here is an interval for
//! the grid decision `u`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floating-point slack on state updates (kWh).
pub const STATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatterySpec {
    pub capacity_kwh: f64,
    pub p_min_kw: f64,
    pub p_max_kw: f64,
    pub eta_s: f64,
    pub xi_charge: f64,
    pub xi_discharge: f64,
}

impl BatterySpec {
    pub fn new(
        capacity_kwh: f64,
        p_min_kw: f64,
        p_max_kw: f64,
        eta_s: f64,
        xi_charge: f64,
        xi_discharge: f64,
    ) -> Result<Self> {
        let spec = Self {
            capacity_kwh,
            p_min_kw,
            p_max_kw,
            eta_s,
            xi_charge,
            xi_discharge,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Lossless battery with symmetric power limits.
    pub fn ideal(capacity_kwh: f64, p_max_kw: f64) -> Result<Self> {
        Self::new(capacity_kwh, -p_max_kw, p_max_kw, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.capacity_kwh,
            self.p_min_kw,
            self.p_max_kw,
            self.eta_s,
            self.xi_charge,
            self.xi_discharge,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::Config("battery parameters must be finite".into()));
        }
        if self.capacity_kwh <= 0.0 {
            return Err(Error::Config(format!(
                "battery capacity must be positive, got {}",
                self.capacity_kwh
            )));
        }
        if !(self.p_min_kw <= 0.0 && 0.0 <= self.p_max_kw) {
            return Err(Error::Config(format!(
                "battery power limits must satisfy p_min <= 0 <= p_max, got [{}, {}]",
                self.p_min_kw, self.p_max_kw
            )));
        }
        if !(self.eta_s > 0.0 && self.eta_s <= 1.0) {
            return Err(Error::Config(format!(
                "eta_s must be in (0, 1], got {}",
                self.eta_s
            )));
        }
        if !(self.xi_charge > 0.0 && self.xi_charge <= 1.0) {
            return Err(Error::Config(format!(
                "xi_charge must be in (0, 1], got {}",
                self.xi_charge
            )));
        }
        if self.xi_discharge < 1.0 {
            return Err(Error::Config(format!(
                "xi_discharge must be >= 1, got {}",
                self.xi_discharge
            )));
        }
        Ok(())
    }

    /// Power efficiency applied to battery output `v`.
    pub fn xi(&self, v: f64) -> f64 {
        if v > 0.0 {
            self.xi_discharge
        } else {
            self.xi_charge
        }
    }

    /// Largest discharge (kW) keeping the next state >= 0 and within `p_max`.
    pub fn max_discharge_kw(&self, s: f64, dt: f64) -> f64 {
        self.p_max_kw.min(self.eta_s * s / (self.xi_discharge * dt))
    }

    /// Most negative battery power (kW, charging) keeping the next state
    /// <= capacity and within `p_min`.
    pub fn max_charge_kw(&self, s: f64, dt: f64) -> f64 {
        self.p_min_kw
            .max(-(self.capacity_kwh - self.eta_s * s) / (self.xi_charge * dt))
    }
}

/// Closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn measure(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }

    /// Nearest point of a non-empty interval.
    pub fn project(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }
}

/// Next stored energy `eta_s * s - xi(v) * v * dt`.
pub fn step_battery(s: f64, v: f64, dt: f64, spec: &BatterySpec) -> Result<f64> {
    let cap = spec.capacity_kwh;
    let next = spec.eta_s * s - spec.xi(v) * v * dt;
    if next < -STATE_TOL || next > cap + STATE_TOL || !next.is_finite() {
        return Err(Error::InfeasibleTransition {
            s,
            v,
            next,
            capacity: cap,
        });
    }
    Ok(next.clamp(0.0, cap))
}

/// Grid decisions keeping the next state inside `[0, capacity]` for the
/// realization `(e, l)`.
pub fn state_constraint_interval(s: f64, e: f64, l: f64, dt: f64, spec: &BatterySpec) -> Interval {
    let lower = -spec.eta_s * s / (spec.xi_discharge * dt);
    let upper = (spec.capacity_kwh - spec.eta_s * s) / (spec.xi_charge * dt);
    Interval::new(lower - l - e, upper - l - e)
}

/// Grid decisions keeping battery power `v = -(u + e + l)` inside
/// `[p_min, p_max]`.
pub fn power_constraint_interval(e: f64, l: f64, spec: &BatterySpec) -> Interval {
    Interval::new(-spec.p_max_kw - l - e, -spec.p_min_kw - l - e)
}

/// Intersection of the state and power intervals for one realization.
pub fn feasible_decision_space(
    s: f64,
    e: f64,
    l: f64,
    dt: f64,
    spec: &BatterySpec,
) -> Result<Interval> {
    let space = state_constraint_interval(s, e, l, dt, spec)
        .intersect(&power_constraint_interval(e, l, spec));
    if space.is_empty() {
        return Err(Error::EmptyFeasibleSpace {
            s,
            e,
            l,
            lo: space.lo,
            hi: space.hi,
        });
    }
    Ok(space)
}

/// Decisions feasible for every realization with `e in [e_min, e_max]`
/// and `l in [l_min, l_max]`. May be empty.
#[allow(clippy::too_many_arguments)]
pub fn determinable_feasible_space(
    s: f64,
    e_min: f64,
    e_max: f64,
    l_min: f64,
    l_max: f64,
    dt: f64,
    spec: &BatterySpec,
) -> Interval {
    Interval::new(
        -spec.max_discharge_kw(s, dt) - l_min - e_min,
        -spec.max_charge_kw(s, dt) - l_max - e_max,
    )
}

/// PV and load support bounds at one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageBounds {
    pub e_min: f64,
    pub e_max: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl StageBounds {
    /// Largest demand-supply sum `e_max - l_min`.
    pub fn sum(&self) -> f64 {
        self.e_max - self.l_min
    }

    /// Largest demand-supply offset gap `(l_max + e_max) - (e_min + l_min)`.
    pub fn gap(&self) -> f64 {
        (self.l_max + self.e_max) - (self.e_min + self.l_min)
    }
}

/// Strongest sufficiency tier a configuration satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    /// `max_k e_max - min_k l_min <= bound` over the whole horizon.
    HorizonSum,
    /// `e_max_k - l_min_k <= bound` at every stage.
    StageSum,
    /// `gap_k <= bound` at every stage.
    StageGap,
    InfeasibleConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// `min(p_max, -p_min, capacity / (xi_discharge * dt))`.
    pub bound_kw: f64,
    /// Power limits are symmetric, so `bound_kw` reduces to
    /// `min(p_max, capacity / (xi * dt))`.
    pub symmetric_limits: bool,
    pub horizon_sum_kw: f64,
    pub stage_sum_kw: Vec<f64>,
    pub stage_gap_kw: Vec<f64>,
    pub horizon_sum_passes: bool,
    pub stage_sum_passes: bool,
    pub stage_gap_passes: bool,
    pub verdict: Verdict,
    /// Stage with the largest gap and its margin `bound - gap`.
    pub worst_stage: usize,
    pub worst_margin_kw: f64,
    pub violating_stage: Option<usize>,
    /// The determinable space is non-empty for every state in `[0, capacity]`.
    pub guarantee: bool,
}

impl FeasibilityReport {
    pub fn passes(&self) -> bool {
        self.verdict != Verdict::InfeasibleConfig
    }
}

/// Evaluates the three progressively weaker sufficiency conditions for a
/// non-empty determinable decision space.
///
/// The bound uses `min(p_max, -p_min)` and `xi_discharge` so that each
/// tier stays sufficient for asymmetric limits and split efficiencies.
pub fn check_configuration_feasibility(
    bounds: &[StageBounds],
    dt: f64,
    spec: &BatterySpec,
) -> FeasibilityReport {
    let bound = spec
        .p_max_kw
        .min(-spec.p_min_kw)
        .min(spec.capacity_kwh / (spec.xi_discharge * dt));
    let stage_sum: Vec<f64> = bounds.iter().map(StageBounds::sum).collect();
    let stage_gap: Vec<f64> = bounds.iter().map(StageBounds::gap).collect();
    let e_max = bounds
        .iter()
        .map(|b| b.e_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let l_min = bounds.iter().map(|b| b.l_min).fold(f64::INFINITY, f64::min);
    let horizon_sum = e_max - l_min;

    let horizon_sum_passes = horizon_sum <= bound;
    let stage_sum_passes = stage_sum.iter().all(|x| *x <= bound);
    let stage_gap_passes = stage_gap.iter().all(|x| *x <= bound);
    let verdict = if horizon_sum_passes {
        Verdict::HorizonSum
    } else if stage_sum_passes {
        Verdict::StageSum
    } else if stage_gap_passes {
        Verdict::StageGap
    } else {
        Verdict::InfeasibleConfig
    };

    let (worst_stage, worst_gap) =
        stage_gap
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (k, g)| if g > acc.1 { (k, g) } else { acc },
            );
    let violating_stage = stage_gap.iter().position(|g| *g > bound);

    FeasibilityReport {
        bound_kw: bound,
        symmetric_limits: spec.p_min_kw == -spec.p_max_kw,
        horizon_sum_kw: horizon_sum,
        stage_sum_kw: stage_sum,
        stage_gap_kw: stage_gap,
        horizon_sum_passes,
        stage_sum_passes,
        stage_gap_passes,
        verdict,
        worst_stage,
        worst_margin_kw: bound - worst_gap,
        violating_stage,
        guarantee: verdict != Verdict::InfeasibleConfig,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running() -> BatterySpec {
        BatterySpec::ideal(6.4, 5.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(BatterySpec::new(0.0, -1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(BatterySpec::new(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(BatterySpec::new(1.0, -1.0, -0.5, 1.0, 1.0, 1.0).is_err());
        assert!(BatterySpec::new(1.0, -1.0, 1.0, 1.1, 1.0, 1.0).is_err());
        assert!(BatterySpec::new(1.0, -1.0, 1.0, 1.0, 1.1, 1.0).is_err());
        assert!(BatterySpec::new(1.0, -1.0, 1.0, 1.0, 1.0, 0.9).is_err());
        assert!(BatterySpec::new(1.0, -1.0, 1.0, 0.99, 0.9, 1.1).is_ok());
    }

    #[test]
    fn step_examples() {
        let spec = running();
        assert!((step_battery(3.8, 1.0, 1.0, &spec).unwrap() - 2.8).abs() < 1e-12);
        assert_eq!(step_battery(2.0, 0.0, 1.0, &spec).unwrap(), 2.0);
        let lossy = BatterySpec::new(6.4, -5.0, 5.0, 1.0, 0.9, 1.0).unwrap();
        assert!((step_battery(2.0, -1.0, 1.0, &lossy).unwrap() - 2.9).abs() < 1e-12);
    }

    #[test]
    fn step_rejects_real_violations_and_clamps_dust() {
        let spec = running();
        assert!(matches!(
            step_battery(1.0, 2.0, 1.0, &spec),
            Err(Error::InfeasibleTransition { .. })
        ));
        assert!(step_battery(6.0, -1.0, 1.0, &spec).is_err());
        assert_eq!(step_battery(1.0, 1.0 + 1e-12, 1.0, &spec).unwrap(), 0.0);
        assert_eq!(step_battery(6.4, -1e-12, 1.0, &spec).unwrap(), 6.4);
    }

    #[test]
    fn theta_examples() {
        let spec = running();
        let th = state_constraint_interval(3.8, 2.0, -3.0, 1.0, &spec);
        assert!((th.lo - -2.8).abs() < 1e-12 && (th.hi - 3.6).abs() < 1e-12);
        let th = state_constraint_interval(0.0, 2.0, -3.0, 1.0, &spec);
        assert_eq!(th.lo, 1.0);
        let th = state_constraint_interval(6.4, 2.0, -3.0, 1.0, &spec);
        assert_eq!(th.hi, 1.0);
    }

    #[test]
    fn gamma_examples() {
        let spec = running();
        assert_eq!(
            power_constraint_interval(2.0, -3.0, &spec),
            Interval::new(-4.0, 6.0)
        );
        assert_eq!(
            power_constraint_interval(0.0, 0.0, &spec),
            Interval::new(-5.0, 5.0)
        );
        let asym = BatterySpec::new(6.4, -2.0, 5.0, 1.0, 1.0, 1.0).unwrap();
        let g = power_constraint_interval(2.0, -3.0, &asym);
        assert_eq!(-(g.lo + 2.0 - 3.0), 5.0);
        assert_eq!(-(g.hi + 2.0 - 3.0), -2.0);
    }

    #[test]
    fn feasible_examples() {
        let spec = running();
        let f = feasible_decision_space(3.8, 2.0, -3.0, 1.0, &spec).unwrap();
        assert!((f.lo - -2.8).abs() < 1e-12 && (f.hi - 3.6).abs() < 1e-12);

        let big = BatterySpec::ideal(6.4, 100.0).unwrap();
        let f = feasible_decision_space(0.0, 1.0, -2.0, 1.0, &big).unwrap();
        assert_eq!(f, Interval::new(1.0, 6.4 + 1.0));
    }

    #[test]
    fn zero_power_battery_has_empty_measure_only_when_limits_vanish() {
        let dead = BatterySpec::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
        let f = feasible_decision_space(0.5, 1.0, -1.0, 1.0, &dead).unwrap();
        assert_eq!(f.measure(), 0.0);
    }

    /// Corner-realization intersection, computed independently of the
    /// closed form.
    fn corner_oracle(s: f64, b: StageBounds, dt: f64, spec: &BatterySpec) -> Interval {
        let mut acc = Interval::new(f64::NEG_INFINITY, f64::INFINITY);
        for e in [b.e_min, b.e_max] {
            for l in [b.l_min, b.l_max] {
                let th = state_constraint_interval(s, e, l, dt, spec);
                let ga = power_constraint_interval(e, l, spec);
                acc = acc.intersect(&th).intersect(&ga);
            }
        }
        acc
    }

    #[test]
    fn determinable_example_matches_corner_oracle() {
        let spec = running();
        let b = StageBounds {
            e_min: 0.0,
            e_max: 2.0,
            l_min: -3.0,
            l_max: -1.0,
        };
        let d = determinable_feasible_space(3.8, b.e_min, b.e_max, b.l_min, b.l_max, 1.0, &spec);
        let oracle = corner_oracle(3.8, b, 1.0, &spec);
        assert!((d.lo - oracle.lo).abs() < 1e-12 && (d.hi - oracle.hi).abs() < 1e-12);
        assert!((d.lo - -0.8).abs() < 1e-12);
        assert!((d.hi - 1.6).abs() < 1e-12);
    }

    #[test]
    fn determinable_reduces_to_feasible_for_point_bounds() {
        let spec = running();
        let d = determinable_feasible_space(3.8, 2.0, 2.0, -3.0, -3.0, 1.0, &spec);
        assert_eq!(
            d,
            feasible_decision_space(3.8, 2.0, -3.0, 1.0, &spec).unwrap()
        );
    }

    #[test]
    fn determinable_empty_for_wide_spread() {
        let spec = running();
        let d = determinable_feasible_space(3.2, 0.0, 4.0, -4.0, 0.0, 1.0, &spec);
        assert!(d.is_empty());
    }

    #[test]
    fn tier_one_passes_at_equality() {
        let spec = running();
        let b = vec![StageBounds {
            e_min: 0.0,
            e_max: 2.0,
            l_min: -3.0,
            l_max: 0.0,
        }];
        let r = check_configuration_feasibility(&b, 1.0, &spec);
        assert_eq!(r.bound_kw, 5.0);
        assert_eq!(r.verdict, Verdict::HorizonSum);
        assert!(r.guarantee && r.symmetric_limits);
        for i in 0..=1000 {
            let s = 6.4 * i as f64 / 1000.0;
            assert!(!determinable_feasible_space(s, 0.0, 2.0, -3.0, 0.0, 1.0, &spec).is_empty());
        }
    }

    #[test]
    fn tiers_are_ordered() {
        let spec = BatterySpec::ideal(6.4, 4.0).unwrap();
        let narrow = vec![StageBounds {
            e_min: 1.5,
            e_max: 2.0,
            l_min: -3.0,
            l_max: -2.5,
        }];
        let r = check_configuration_feasibility(&narrow, 1.0, &spec);
        assert!(!r.horizon_sum_passes && !r.stage_sum_passes);
        assert_eq!(r.verdict, Verdict::StageGap);

        let spread = vec![
            StageBounds {
                e_min: 0.0,
                e_max: 2.0,
                l_min: -1.0,
                l_max: 0.0,
            },
            StageBounds {
                e_min: 0.0,
                e_max: 0.5,
                l_min: -3.0,
                l_max: -1.0,
            },
        ];
        let r = check_configuration_feasibility(&spread, 1.0, &spec);
        assert!(!r.horizon_sum_passes && r.stage_sum_passes);
        assert_eq!(r.verdict, Verdict::StageSum);
    }

    #[test]
    fn infeasible_names_stage() {
        let spec = BatterySpec::ideal(6.4, 0.1).unwrap();
        let b = vec![
            StageBounds {
                e_min: 0.0,
                e_max: 0.0,
                l_min: -0.5,
                l_max: -0.45,
            },
            StageBounds {
                e_min: 0.0,
                e_max: 0.0,
                l_min: -5.0,
                l_max: 0.0,
            },
        ];
        let r = check_configuration_feasibility(&b, 1.0, &spec);
        assert_eq!(r.verdict, Verdict::InfeasibleConfig);
        assert_eq!(r.violating_stage, Some(1));
        assert!(!r.passes());
    }
}
