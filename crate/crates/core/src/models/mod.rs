//! Stochastic supply and demand models built from historical data.

pub mod io;
pub mod load;
pub mod weather;

pub use load::fit_load_model;
pub use weather::{
    build_pv_model, compute_forecast_errors, fill_piecewise_constant, group_errors_by_hour,
    irradiance_to_pv_power, predict_measurement_distribution, FilledErrors, ForecastErrors,
    Prediction, PvModelFit, PvPlant, WeatherRecord,
};

use crate::error::{Error, Result};

/// RMS error of `series_b` against reference `series_a`, and the
/// percentage accuracy `100 * (1 - rms_error / rms(a))`.
pub fn rms_accuracy(series_a: &[f64], series_b: &[f64]) -> Result<(f64, f64)> {
    if series_a.is_empty() || series_a.len() != series_b.len() {
        return Err(Error::Config(format!(
            "rms accuracy needs equal non-empty series, got {} and {}",
            series_a.len(),
            series_b.len()
        )));
    }
    let n = series_a.len() as f64;
    let rms_ref = (series_a.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    if rms_ref == 0.0 {
        return Err(Error::UndefinedAccuracy);
    }
    let rms_err = (series_a
        .iter()
        .zip(series_b)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((rms_err, 100.0 * (1.0 - rms_err / rms_ref)))
}
