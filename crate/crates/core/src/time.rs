//! Uniform decision-epoch grids.
//!
//! Internally every duration is in hours so that energy is simply
//! `power * dt`. Config files carry seconds; conversion happens once, in
//! [`TimeGrid::new`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_HOUR: i64 = 3600;
pub const HOURS_PER_DAY: usize = 24;

/// Decision epochs `t_k = t0 + k * dt` for `k = 0..=n_stages`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    start_epoch_s: i64,
    n_stages: usize,
    dt_s: i64,
    utc_offset_s: i64,
}

impl TimeGrid {
    /// Builds the grid spanning `[t_start, t_end]` with stage length `dt_seconds`.
    pub fn new(t_start: i64, t_end: i64, dt_seconds: i64) -> Result<Self> {
        if dt_seconds <= 0 {
            return Err(Error::Config(format!(
                "stage duration must be positive, got {dt_seconds} s"
            )));
        }
        if t_end <= t_start {
            return Err(Error::Config(format!(
                "horizon end {t_end} must be after start {t_start}"
            )));
        }
        let span = t_end - t_start;
        if span % dt_seconds != 0 {
            return Err(Error::Config(format!(
                "horizon span {span} s is not divisible by stage duration {dt_seconds} s"
            )));
        }
        Ok(Self {
            start_epoch_s: t_start,
            n_stages: (span / dt_seconds) as usize,
            dt_s: dt_seconds,
            utc_offset_s: 0,
        })
    }

    /// Shifts hour-of-day resolution by a fixed UTC offset.
    pub fn with_utc_offset_hours(mut self, hours: i64) -> Self {
        self.utc_offset_s = hours * SECONDS_PER_HOUR;
        self
    }

    pub fn start_epoch_s(&self) -> i64 {
        self.start_epoch_s
    }

    /// Number of decision stages `N`; the terminal epoch is `t_N`.
    pub fn n_stages(&self) -> usize {
        self.n_stages
    }

    pub fn dt_seconds(&self) -> i64 {
        self.dt_s
    }

    /// Stage length in hours.
    pub fn dt_hours(&self) -> f64 {
        self.dt_s as f64 / SECONDS_PER_HOUR as f64
    }

    pub fn utc_offset_s(&self) -> i64 {
        self.utc_offset_s
    }

    /// Epoch seconds of `t_k`.
    pub fn epoch_of(&self, k: usize) -> i64 {
        self.start_epoch_s + k as i64 * self.dt_s
    }

    /// Hour of day (0..24) at the start of stage `k`.
    pub fn hour_of_day(&self, k: usize) -> usize {
        hour_of_epoch(self.epoch_of(k) + self.utc_offset_s)
    }

    /// Number of stages per 24 h, when a day is a whole number of stages.
    pub fn stages_per_day(&self) -> Option<usize> {
        let day = HOURS_PER_DAY as i64 * SECONDS_PER_HOUR;
        (day % self.dt_s == 0).then(|| (day / self.dt_s) as usize)
    }
}

/// Hour of day (0..24) of an epoch timestamp.
pub fn hour_of_epoch(epoch_s: i64) -> usize {
    epoch_s
        .div_euclid(SECONDS_PER_HOUR)
        .rem_euclid(HOURS_PER_DAY as i64) as usize
}
