//! Reference scenarios: a residential nanogrid built through the real
//! ingestion pipeline from seeded synthetic data, and small hand-built
//! scenarios exercising specific behaviours.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distribution::{CyclostationaryModel, EmpiricalDistribution};
use crate::economics::PricingSchedule;
use crate::error::Result;
use crate::models::weather::mean_forecast_by_hour;
use crate::models::{build_pv_model, fit_load_model, PvPlant, WeatherRecord};
use crate::scenario::{
    BatteryConfig, HorizonConfig, ModelPaths, Scenario, ScenarioConfig, SolverConfig,
};
use crate::storage::BatterySpec;
use crate::synth::{synth_load, synth_weather, WeatherShape, RESIDENTIAL_PROFILE};
use crate::time::{TimeGrid, HOURS_PER_DAY, SECONDS_PER_HOUR};

pub const CAPACITY_KWH: f64 = 6.4;
pub const POWER_LIMIT_KW: f64 = 5.0;
pub const INITIAL_SOC_KWH: f64 = 3.8;
pub const TERMINAL_MULTIPLIER: f64 = 100.0;
pub const HISTORY_DAYS: usize = 30;
/// Discrete states per hour in the fitted PV and load models.
pub const MODEL_STATES: usize = 5;
pub const SEED: u64 = 2024;

pub fn plant() -> PvPlant {
    PvPlant {
        capacity_kw: 2.5,
        derate: 0.8,
    }
}

/// Time-of-use tariff: afternoon/evening purchase peak, midday sell peak.
pub fn pricing() -> PricingSchedule {
    let buy = (0..HOURS_PER_DAY)
        .map(|h| if (12..20).contains(&h) { 0.35 } else { 0.12 })
        .collect();
    let sell = (0..HOURS_PER_DAY)
        .map(|h| if (12..17).contains(&h) { 0.30 } else { 0.05 })
        .collect();
    PricingSchedule::new(buy, sell).expect("reference tariff is valid")
}

/// Synthetic weather and load history, one record per hour.
pub fn history(seed: u64) -> (Vec<WeatherRecord>, Vec<(i64, f64)>) {
    let weather = synth_weather(HISTORY_DAYS, 0, 0, &WeatherShape::default(), seed);
    let load = synth_load(
        HISTORY_DAYS,
        0,
        0,
        &RESIDENTIAL_PROFILE,
        seed.wrapping_add(1),
    );
    (weather, load)
}

/// PV and load models fitted from [`history`].
pub fn models(seed: u64) -> Result<(CyclostationaryModel, CyclostationaryModel)> {
    let (weather, load) = history(seed);
    let reference = mean_forecast_by_hour(&weather, 0);
    let pv = build_pv_model(&weather, &plant(), MODEL_STATES, &reference, 0)?.model;
    let load = fit_load_model(&load, MODEL_STATES, 0)?;
    Ok((pv, load))
}

pub fn battery() -> BatterySpec {
    BatterySpec::ideal(CAPACITY_KWH, POWER_LIMIT_KW).expect("reference battery is valid")
}

/// One day, hourly stages, starting at local midnight.
pub fn scenario() -> Result<Scenario> {
    let (pv, load) = models(SEED)?;
    Scenario::new(
        TimeGrid::new(0, HOURS_PER_DAY as i64 * SECONDS_PER_HOUR, SECONDS_PER_HOUR)?,
        battery(),
        pricing(),
        pv,
        load,
        TERMINAL_MULTIPLIER,
        INITIAL_SOC_KWH,
    )
}

/// Configuration equivalent to [`scenario`], with model files expected
/// next to the config.
pub fn config() -> ScenarioConfig {
    ScenarioConfig {
        terminal_multiplier: TERMINAL_MULTIPLIER,
        initial_soc_kwh: INITIAL_SOC_KWH,
        utc_offset_h: 0,
        horizon: HorizonConfig {
            start_epoch_s: 0,
            end_epoch_s: HOURS_PER_DAY as i64 * SECONDS_PER_HOUR,
            dt_s: SECONDS_PER_HOUR,
        },
        battery: BatteryConfig {
            capacity_kwh: CAPACITY_KWH,
            p_min_kw: -POWER_LIMIT_KW,
            p_max_kw: POWER_LIMIT_KW,
            eta_s: 1.0,
            xi_charge: 1.0,
            xi_discharge: 1.0,
        },
        pricing: pricing(),
        models: ModelPaths {
            pv: PathBuf::from("pv_model.json"),
            load: PathBuf::from("load_model.json"),
        },
        solver: SolverConfig::default(),
    }
}

/// Hours with the raised sell price in [`sell_peak_scenario`].
pub const SELL_PEAK_HOURS: std::ops::Range<usize> = 14..18;

/// No PV or load, a large battery that takes the whole peak to drain, and
/// a single 4-hour sell-price peak.
pub fn sell_peak_scenario() -> Scenario {
    let buy = (0..HOURS_PER_DAY)
        .map(|h| {
            if SELL_PEAK_HOURS.contains(&h) {
                0.60
            } else {
                0.10
            }
        })
        .collect();
    let sell = (0..HOURS_PER_DAY)
        .map(|h| {
            if SELL_PEAK_HOURS.contains(&h) {
                0.50
            } else {
                0.05
            }
        })
        .collect();
    Scenario::new(
        TimeGrid::new(0, HOURS_PER_DAY as i64 * SECONDS_PER_HOUR, SECONDS_PER_HOUR).unwrap(),
        BatterySpec::ideal(20.0, 5.0).unwrap(),
        PricingSchedule::new(buy, sell).unwrap(),
        CyclostationaryModel::constant(EmpiricalDistribution::singleton(0.0)),
        CyclostationaryModel::constant(EmpiricalDistribution::singleton(0.0)),
        2.0,
        10.0,
    )
    .expect("sell-peak scenario is valid")
}

/// A randomly drawn small instance together with its solver resolution.
#[derive(Debug, Clone)]
pub struct SmallInstance {
    pub scenario: Scenario,
    pub n_states: usize,
    pub n_decisions: usize,
}

fn random_distribution(
    rng: &mut ChaCha8Rng,
    lo: f64,
    width: f64,
    max_support: usize,
) -> EmpiricalDistribution {
    let n = rng.random_range(1..=max_support);
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|_| (lo + width * rng.random::<f64>(), rng.random_range(0.1..1.0)))
        .collect();
    EmpiricalDistribution::from_weighted(pairs).expect("positive weights")
}

/// Small random instance (at most 4 hourly stages, 6 grid states, 7
/// decisions and 3 support points per distribution) that passes the
/// configuration feasibility check.
pub fn random_small_instance(seed: u64) -> SmallInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_stages = rng.random_range(1..=4i64);
        let capacity = rng.random_range(1.0..8.0);
        let p_max = rng.random_range(1.0..5.0);
        let p_min = -p_max * rng.random_range(0.5..1.5);
        let battery = BatterySpec::new(
            capacity,
            p_min,
            p_max,
            rng.random_range(0.9..=1.0),
            rng.random_range(0.9..=1.0),
            rng.random_range(1.0..=1.1),
        )
        .expect("valid battery");
        let pv_width = rng.random_range(0.0..1.0);
        let load_width = rng.random_range(0.0..1.0);
        let mut pv = Vec::with_capacity(HOURS_PER_DAY);
        let mut load = Vec::with_capacity(HOURS_PER_DAY);
        for _ in 0..HOURS_PER_DAY {
            let e_lo = rng.random_range(0.0..2.0);
            pv.push(random_distribution(&mut rng, e_lo, pv_width, 3));
            let l_lo = -rng.random_range(load_width..3.0);
            load.push(random_distribution(&mut rng, l_lo, load_width, 3));
        }
        let mut buy = Vec::with_capacity(HOURS_PER_DAY);
        let mut sell = Vec::with_capacity(HOURS_PER_DAY);
        for _ in 0..HOURS_PER_DAY {
            let b = rng.random_range(0.05..0.5);
            buy.push(b);
            sell.push(b * rng.random::<f64>());
        }
        let scenario = Scenario::new(
            TimeGrid::new(0, n_stages * SECONDS_PER_HOUR, SECONDS_PER_HOUR).expect("valid horizon"),
            battery,
            PricingSchedule::new(buy, sell).expect("valid prices"),
            CyclostationaryModel::new(pv).expect("24 hours"),
            CyclostationaryModel::new(load).expect("24 hours"),
            rng.random_range(0.0..3.0),
            capacity * rng.random::<f64>(),
        )
        .expect("valid scenario");
        let n_states = rng.random_range(2..=6);
        let n_decisions = rng.random_range(2..=7);
        if scenario.feasibility().passes() {
            return SmallInstance {
                scenario,
                n_states,
                n_decisions,
            };
        }
    }
}
