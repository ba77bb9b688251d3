//! Time-of-use prices and the cost functionals built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::storage::BatterySpec;
use crate::time::{TimeGrid, HOURS_PER_DAY};

/// Hourly buy (`c_p`) and sell (`c_s`) prices in $/kWh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingSchedule {
    #[serde(rename = "buy_per_hour")]
    buy: Vec<f64>,
    #[serde(rename = "sell_per_hour")]
    sell: Vec<f64>,
}

impl PricingSchedule {
    pub fn new(buy: Vec<f64>, sell: Vec<f64>) -> Result<Self> {
        let s = Self { buy, sell };
        s.validate()?;
        Ok(s)
    }

    pub fn flat(buy: f64, sell: f64) -> Result<Self> {
        Self::new(vec![buy; HOURS_PER_DAY], vec![sell; HOURS_PER_DAY])
    }

    pub fn validate(&self) -> Result<()> {
        if self.buy.len() != HOURS_PER_DAY || self.sell.len() != HOURS_PER_DAY {
            return Err(Error::Config(format!(
                "pricing needs {HOURS_PER_DAY} buy and sell prices, got {} and {}",
                self.buy.len(),
                self.sell.len()
            )));
        }
        if self.buy.iter().chain(&self.sell).any(|p| !p.is_finite()) {
            return Err(Error::Config("prices must be finite".into()));
        }
        if let Some(h) = self.sell.iter().position(|p| *p < 0.0) {
            return Err(Error::Config(format!("sell price at hour {h} is negative")));
        }
        Ok(())
    }

    pub fn buy(&self, hour: usize) -> f64 {
        self.buy[hour % HOURS_PER_DAY]
    }

    pub fn sell(&self, hour: usize) -> f64 {
        self.sell[hour % HOURS_PER_DAY]
    }

    pub fn buy_per_hour(&self) -> &[f64] {
        &self.buy
    }

    pub fn sell_per_hour(&self) -> &[f64] {
        &self.sell
    }
}

/// Cost of grid power `u` over one stage: purchases at `c_p`, sales
/// (including `u = 0`) at `c_s`.
pub fn stage_cost(u: f64, k: usize, sched: &PricingSchedule, grid: &TimeGrid) -> f64 {
    let h = grid.hour_of_day(k);
    let price = if u > 0.0 { sched.buy(h) } else { sched.sell(h) };
    price * u * grid.dt_hours()
}

/// Sum of stage costs for a decision sequence starting at stage 0.
pub fn transaction_cost(u_seq: &[f64], sched: &PricingSchedule, grid: &TimeGrid) -> f64 {
    u_seq
        .iter()
        .enumerate()
        .map(|(k, &u)| stage_cost(u, k, sched, grid))
        .sum()
}

/// Objective terminal penalty `m * (capacity - s_N) * c_s(t_N)`.
pub fn terminal_cost(
    expected_s_n: f64,
    multiplier: f64,
    spec: &BatterySpec,
    sched: &PricingSchedule,
    grid: &TimeGrid,
) -> f64 {
    multiplier * (spec.capacity_kwh - expected_s_n) * sched.sell(grid.hour_of_day(grid.n_stages()))
}

/// Monetary terminal term: leftover energy valued at the sell price.
pub fn monetary_terminal(s_n: f64, sched: &PricingSchedule, grid: &TimeGrid) -> f64 {
    -s_n * sched.sell(grid.hour_of_day(grid.n_stages()))
}
