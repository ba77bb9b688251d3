//! Decision rules mapping `(stage, stored energy, realized PV, realized
//! load)` to a grid/battery power pair.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scenario::Scenario;
use crate::storage::feasible_decision_space;

/// Grid power `u` and battery power `v` (kW) for one stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub u: f64,
    pub v: f64,
}

impl Decision {
    /// Completes a grid decision with the battery power that balances
    /// `e + u + v + l = 0`.
    pub fn from_grid(u: f64, e: f64, l: f64) -> Self {
        // adding zero turns a negative zero into +0
        let u = u + 0.0;
        Self {
            u,
            v: 0.0 - (u + e + l),
        }
    }

    pub fn balance_residual(&self, e: f64, l: f64) -> f64 {
        e + self.u + self.v + l
    }
}

pub trait Policy: Send + Sync {
    fn name(&self) -> &str;

    fn decide(&self, k: usize, s: f64, e: f64, l: f64, scenario: &Scenario) -> Result<Decision>;
}

/// Projects `u_raw` onto the realization's feasible decision space.
pub fn clamp_decision_to_feasible(
    u_raw: f64,
    s: f64,
    e: f64,
    l: f64,
    scenario: &Scenario,
) -> Result<Decision> {
    let space = feasible_decision_space(s, e, l, scenario.dt(), &scenario.battery)?;
    Ok(Decision::from_grid(space.project(u_raw), e, l))
}

/// Battery power that bridges the gap `e + l` as far as the battery's
/// state and power limits allow.
fn battery_first(s: f64, e: f64, l: f64, scenario: &Scenario) -> f64 {
    let dt = scenario.dt();
    let b = &scenario.battery;
    (-(e + l)).clamp(b.max_charge_kw(s, dt), b.max_discharge_kw(s, dt))
}

/// Exhaustive storage dependence: the battery absorbs surplus and covers
/// deficit until it hits a limit; the grid takes the remainder.
#[derive(Debug, Clone, Copy, Default)]
pub struct StorageFirstPolicy;

impl Policy for StorageFirstPolicy {
    fn name(&self) -> &str {
        "policy1"
    }

    fn decide(&self, _k: usize, s: f64, e: f64, l: f64, scenario: &Scenario) -> Result<Decision> {
        let v = battery_first(s, e, l, scenario);
        clamp_decision_to_feasible(-(e + l + v), s, e, l, scenario)
    }
}

/// Finite lookahead: compares the present imbalance with the expected
/// imbalance over the next `lookahead_h` hours.
///
/// Branch order:
/// 1. present surplus (`e + l >= 0`) and expected future surplus: charge
///    battery-first, export the rest;
/// 2. present deficit and expected future deficit: discharge
///    `min(deficit, max_discharge / 2)`, import the rest;
/// 3. otherwise (signs differ, or zero expected future): battery idle.
#[derive(Debug, Clone, Copy)]
pub struct LookaheadPolicy {
    pub lookahead_h: f64,
}

pub const DEFAULT_LOOKAHEAD_H: f64 = 3.0;

impl Default for LookaheadPolicy {
    fn default() -> Self {
        Self {
            lookahead_h: DEFAULT_LOOKAHEAD_H,
        }
    }
}

impl LookaheadPolicy {
    pub fn new(lookahead_h: f64) -> Self {
        Self { lookahead_h }
    }

    /// Expected `e + l` summed over stages `k+1 ..= min(k+H, N)`.
    pub fn expected_future(&self, k: usize, scenario: &Scenario) -> f64 {
        let steps = (self.lookahead_h / scenario.dt()).round() as usize;
        let last = (k + steps).min(scenario.n_stages());
        (k + 1..=last)
            .map(|i| scenario.pv_at(i).expectation() + scenario.load_at(i).expectation())
            .sum()
    }
}

impl Policy for LookaheadPolicy {
    fn name(&self) -> &str {
        "policy2"
    }

    fn decide(&self, k: usize, s: f64, e: f64, l: f64, scenario: &Scenario) -> Result<Decision> {
        let present = e + l;
        let future = self.expected_future(k, scenario);
        let v = if present >= 0.0 && future > 0.0 {
            battery_first(s, e, l, scenario)
        } else if present < 0.0 && future < 0.0 {
            let half = 0.5 * scenario.battery.max_discharge_kw(s, scenario.dt());
            (-present).min(half).max(0.0)
        } else {
            0.0
        };
        clamp_decision_to_feasible(-(e + l + v), s, e, l, scenario)
    }
}
