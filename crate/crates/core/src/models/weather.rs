//! PV supply model: forecast errors, signal-noise prediction of measured
//! irradiance, and the irradiance-to-power map.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::distribution::{discretize_distribution, CyclostationaryModel, EmpiricalDistribution};
use crate::error::{Error, Result};
use crate::time::{hour_of_epoch, HOURS_PER_DAY, SECONDS_PER_HOUR};

/// One timestamped pair of measured and forecast irradiance (W/m²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub timestamp: i64,
    pub measured: Option<f64>,
    pub forecast: Option<f64>,
    pub horizon_h: f64,
}

/// Linear PV plant: `capacity_kw * derate * irradiance / 1000`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvPlant {
    pub capacity_kw: f64,
    pub derate: f64,
}

impl PvPlant {
    pub fn new(capacity_kw: f64, derate: f64) -> Result<Self> {
        if !(capacity_kw > 0.0 && capacity_kw.is_finite()) {
            return Err(Error::Config(format!(
                "pv capacity must be positive, got {capacity_kw}"
            )));
        }
        if !(derate > 0.0 && derate <= 1.0) {
            return Err(Error::Config(format!(
                "pv derate must be in (0, 1], got {derate}"
            )));
        }
        Ok(Self {
            capacity_kw,
            derate,
        })
    }

    pub fn power_kw(&self, irradiance_wm2: f64) -> f64 {
        self.capacity_kw * self.derate * irradiance_wm2 / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastErrors {
    pub errors: Vec<(i64, f64)>,
    pub skipped: usize,
}

/// `measured - forecast` for every record carrying both values.
pub fn compute_forecast_errors(records: &[WeatherRecord]) -> Result<ForecastErrors> {
    let errors: Vec<(i64, f64)> = records
        .iter()
        .filter_map(|r| match (r.measured, r.forecast) {
            (Some(m), Some(f)) => Some((r.timestamp, m - f)),
            _ => None,
        })
        .collect();
    if errors.is_empty() {
        return Err(Error::EmptyDataset(
            "no record has both a measurement and a forecast".into(),
        ));
    }
    let skipped = records.len() - errors.len();
    Ok(ForecastErrors { errors, skipped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilledErrors {
    pub values: Vec<(i64, f64)>,
    /// Grid points before the first observation that took its value.
    pub backfilled: usize,
}

/// Holds each error constant until the next observation.
///
/// `sparse` must be sorted by timestamp. Grid points preceding the first
/// observation take the first observed value.
pub fn fill_piecewise_constant(sparse: &[(i64, f64)], grid: &[i64]) -> Result<FilledErrors> {
    let first = sparse
        .first()
        .ok_or_else(|| Error::EmptyDataset("no forecast errors to fill".into()))?;
    if sparse.windows(2).any(|w| w[0].0 > w[1].0) {
        return Err(Error::Config(
            "forecast errors must be sorted by timestamp".into(),
        ));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut backfilled = 0;
    let mut next = 0;
    let mut current: Option<f64> = None;
    for &t in grid {
        while next < sparse.len() && sparse[next].0 <= t {
            current = Some(sparse[next].1);
            next += 1;
        }
        let v = match current {
            Some(v) => v,
            None => {
                backfilled += 1;
                first.1
            }
        };
        values.push((t, v));
    }
    Ok(FilledErrors { values, backfilled })
}

/// Partitions errors into 24 buckets by hour of day.
pub fn group_errors_by_hour(dense: &[(i64, f64)], utc_offset_s: i64) -> Vec<Vec<f64>> {
    let mut buckets = vec![Vec::new(); HOURS_PER_DAY];
    for &(t, e) in dense {
        buckets[hour_of_epoch(t + utc_offset_s)].push(e);
    }
    buckets
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub distribution: EmpiricalDistribution,
    /// The error dataset was empty and the forecast was taken as truth.
    pub used_fallback: bool,
}

/// Distribution of measured irradiance as `forecast + error`, with
/// negative irradiance moved to zero.
pub fn predict_measurement_distribution(
    forecast: f64,
    error_dataset: &[f64],
) -> Result<Prediction> {
    if error_dataset.is_empty() {
        warn!("empty forecast-error dataset; using the forecast {forecast} W/m² as truth");
        return Ok(Prediction {
            distribution: EmpiricalDistribution::singleton(forecast.max(0.0)),
            used_fallback: true,
        });
    }
    let distribution = EmpiricalDistribution::from_weighted(
        error_dataset
            .iter()
            .map(|&e| ((forecast + e).max(0.0), 1.0)),
    )?;
    Ok(Prediction {
        distribution,
        used_fallback: false,
    })
}

pub fn irradiance_to_pv_power(
    dist: &EmpiricalDistribution,
    plant: &PvPlant,
) -> Result<EmpiricalDistribution> {
    dist.map(|g| plant.power_kw(g))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PvModelFit {
    #[serde(skip)]
    pub model: CyclostationaryModel,
    pub records: usize,
    pub skipped: usize,
    pub backfilled: usize,
    pub bucket_sizes: Vec<usize>,
    pub fallback_hours: Vec<usize>,
}

/// Full PV pipeline: errors → hourly fill → hour buckets → predicted
/// irradiance around `reference_forecast_by_hour[h]` → PV power →
/// discretization to at most `n_states` states.
pub fn build_pv_model(
    records: &[WeatherRecord],
    plant: &PvPlant,
    n_states: usize,
    reference_forecast_by_hour: &[f64],
    utc_offset_s: i64,
) -> Result<PvModelFit> {
    if reference_forecast_by_hour.len() != HOURS_PER_DAY {
        return Err(Error::Config(format!(
            "reference forecast needs {HOURS_PER_DAY} values, got {}",
            reference_forecast_by_hour.len()
        )));
    }
    let ForecastErrors {
        mut errors,
        skipped,
    } = compute_forecast_errors(records)?;
    errors.sort_by_key(|(t, _)| *t);

    let start = errors[0].0.div_euclid(SECONDS_PER_HOUR) * SECONDS_PER_HOUR;
    let end = errors.last().unwrap().0;
    let grid: Vec<i64> = (start..=end).step_by(SECONDS_PER_HOUR as usize).collect();
    let filled = fill_piecewise_constant(&errors, &grid)?;
    let buckets = group_errors_by_hour(&filled.values, utc_offset_s);

    let mut by_hour = Vec::with_capacity(HOURS_PER_DAY);
    let mut fallback_hours = Vec::new();
    for (h, bucket) in buckets.iter().enumerate() {
        let pred = predict_measurement_distribution(reference_forecast_by_hour[h], bucket)?;
        if pred.used_fallback {
            fallback_hours.push(h);
        }
        let power = irradiance_to_pv_power(&pred.distribution, plant)?;
        by_hour.push(discretize_distribution(&power, n_states)?);
    }
    Ok(PvModelFit {
        model: CyclostationaryModel::new(by_hour)?,
        records: records.len(),
        skipped,
        backfilled: filled.backfilled,
        bucket_sizes: buckets.iter().map(Vec::len).collect(),
        fallback_hours,
    })
}

/// Mean forecast per hour of day; hours without forecasts get zero.
pub fn mean_forecast_by_hour(records: &[WeatherRecord], utc_offset_s: i64) -> Vec<f64> {
    let mut sum = [0.0; HOURS_PER_DAY];
    let mut count = [0usize; HOURS_PER_DAY];
    for r in records {
        if let Some(f) = r.forecast {
            let h = hour_of_epoch(r.timestamp + utc_offset_s);
            sum[h] += f;
            count[h] += 1;
        }
    }
    sum.iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect()
}
