//! Seeded synthetic weather and load histories.
//!
//! Used for the reference scenarios, demos and tests in place of
//! proprietary sensor data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::models::WeatherRecord;
use crate::time::{hour_of_epoch, SECONDS_PER_HOUR};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeatherShape {
    /// Clear-sky peak irradiance at solar noon (W/m²).
    pub peak_wm2: f64,
    pub sunrise_h: f64,
    pub sunset_h: f64,
    /// Half-width of the uniform forecast error (W/m²).
    pub error_wm2: f64,
    /// Daily forecast cloudiness factor drawn from `[min_clearness, 1]`.
    pub min_clearness: f64,
}

impl Default for WeatherShape {
    fn default() -> Self {
        Self {
            peak_wm2: 850.0,
            sunrise_h: 6.0,
            sunset_h: 18.0,
            error_wm2: 80.0,
            min_clearness: 0.8,
        }
    }
}

/// Bell-shaped clear-sky irradiance at local hour `h`.
pub fn clear_sky_wm2(h: f64, shape: &WeatherShape) -> f64 {
    if h <= shape.sunrise_h || h >= shape.sunset_h {
        return 0.0;
    }
    let x = (h - shape.sunrise_h) / (shape.sunset_h - shape.sunrise_h);
    shape.peak_wm2 * (std::f64::consts::PI * x).sin()
}

/// Hourly forecast/measurement pairs for `days` days from `start_epoch_s`.
pub fn synth_weather(
    days: usize,
    start_epoch_s: i64,
    utc_offset_s: i64,
    shape: &WeatherShape,
    seed: u64,
) -> Vec<WeatherRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(days * 24);
    for _ in 0..days {
        let clearness = rng.random_range(shape.min_clearness..=1.0);
        for _ in 0..24 {
            let t = start_epoch_s + (out.len() as i64) * SECONDS_PER_HOUR;
            // centre of the hour, in local time
            let h = hour_of_epoch(t + utc_offset_s) as f64 + 0.5;
            let forecast = clearness * clear_sky_wm2(h, shape);
            let measured = if forecast > 0.0 {
                (forecast + rng.random_range(-shape.error_wm2..=shape.error_wm2)).max(0.0)
            } else {
                0.0
            };
            out.push(WeatherRecord {
                timestamp: t,
                measured: Some(measured),
                forecast: Some(forecast),
                horizon_h: 24.0,
            });
        }
    }
    out
}

/// Typical residential consumption profile (kW) by local hour and the
/// half-width of its uniform day-to-day variation.
pub const RESIDENTIAL_PROFILE: [(f64, f64); 24] = [
    (0.40, 0.05),
    (0.35, 0.05),
    (0.32, 0.04),
    (0.30, 0.04),
    (0.32, 0.04),
    (0.45, 0.08),
    (0.90, 0.20),
    (1.40, 0.30),
    (1.10, 0.30),
    (0.80, 0.25),
    (0.70, 0.25),
    (0.70, 0.25),
    (0.80, 0.25),
    (0.75, 0.25),
    (0.70, 0.25),
    (0.80, 0.25),
    (1.10, 0.30),
    (1.60, 0.35),
    (2.10, 0.40),
    (2.10, 0.40),
    (1.80, 0.35),
    (1.30, 0.25),
    (0.80, 0.12),
    (0.50, 0.06),
];

/// Hourly `(timestamp, consumption kW)` for `days` days.
pub fn synth_load(
    days: usize,
    start_epoch_s: i64,
    utc_offset_s: i64,
    profile: &[(f64, f64); 24],
    seed: u64,
) -> Vec<(i64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..days * 24)
        .map(|i| {
            let t = start_epoch_s + i as i64 * SECONDS_PER_HOUR;
            let (mean, spread) = profile[hour_of_epoch(t + utc_offset_s)];
            (t, (mean + rng.random_range(-spread..=spread)).max(0.0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weather_is_dark_at_night_and_seeded() {
        let shape = WeatherShape::default();
        let a = synth_weather(3, 0, 0, &shape, 1);
        assert_eq!(a.len(), 72);
        for r in &a {
            let h = hour_of_epoch(r.timestamp);
            if !(6..18).contains(&h) {
                assert_eq!(r.forecast, Some(0.0));
                assert_eq!(r.measured, Some(0.0));
            } else {
                assert!(r.forecast.unwrap() > 0.0);
            }
        }
        assert_eq!(a, synth_weather(3, 0, 0, &shape, 1));
        assert_ne!(a, synth_weather(3, 0, 0, &shape, 2));
    }

    #[test]
    fn load_stays_in_profile_band() {
        let l = synth_load(10, 0, 0, &RESIDENTIAL_PROFILE, 4);
        assert_eq!(l.len(), 240);
        for &(t, kw) in &l {
            let (m, s) = RESIDENTIAL_PROFILE[hour_of_epoch(t)];
            assert!(kw >= m - s && kw <= m + s);
        }
    }
}
