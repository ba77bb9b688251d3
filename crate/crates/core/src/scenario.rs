//! The system-parameter bundle shared by solver, policies and simulator,
//! and its on-disk configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distribution::{CyclostationaryModel, EmpiricalDistribution};
use crate::economics::PricingSchedule;
use crate::error::{Error, Result};
use crate::storage::{
    check_configuration_feasibility, BatterySpec, FeasibilityReport, StageBounds,
};
use crate::time::TimeGrid;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: TimeGrid,
    pub battery: BatterySpec,
    pub pricing: PricingSchedule,
    pub pv: CyclostationaryModel,
    pub load: CyclostationaryModel,
    pub terminal_multiplier: f64,
    pub initial_soc_kwh: f64,
}

impl Scenario {
    pub fn new(
        grid: TimeGrid,
        battery: BatterySpec,
        pricing: PricingSchedule,
        pv: CyclostationaryModel,
        load: CyclostationaryModel,
        terminal_multiplier: f64,
        initial_soc_kwh: f64,
    ) -> Result<Self> {
        let s = Self {
            grid,
            battery,
            pricing,
            pv,
            load,
            terminal_multiplier,
            initial_soc_kwh,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        self.pricing.validate()?;
        if !(self.terminal_multiplier >= 0.0 && self.terminal_multiplier.is_finite()) {
            return Err(Error::Config(format!(
                "terminal multiplier must be finite and >= 0, got {}",
                self.terminal_multiplier
            )));
        }
        if !(0.0..=self.battery.capacity_kwh).contains(&self.initial_soc_kwh) {
            return Err(Error::Config(format!(
                "initial state {} kWh outside [0, {}]",
                self.initial_soc_kwh, self.battery.capacity_kwh
            )));
        }
        if let Some(h) = self.pv.by_hour().iter().position(|d| d.min() < 0.0) {
            return Err(Error::Config(format!(
                "pv model has negative support at hour {h}"
            )));
        }
        if let Some(h) = self.load.by_hour().iter().position(|d| d.max() > 0.0) {
            return Err(Error::Config(format!(
                "load model has positive support at hour {h}"
            )));
        }
        Ok(())
    }

    pub fn n_stages(&self) -> usize {
        self.grid.n_stages()
    }

    pub fn dt(&self) -> f64 {
        self.grid.dt_hours()
    }

    pub fn capacity(&self) -> f64 {
        self.battery.capacity_kwh
    }

    pub fn pv_at(&self, k: usize) -> &EmpiricalDistribution {
        self.pv.at(&self.grid, k)
    }

    pub fn load_at(&self, k: usize) -> &EmpiricalDistribution {
        self.load.at(&self.grid, k)
    }

    pub fn stage_bounds(&self, k: usize) -> StageBounds {
        let (e_min, e_max) = self.pv_at(k).bounds();
        let (l_min, l_max) = self.load_at(k).bounds();
        StageBounds {
            e_min,
            e_max,
            l_min,
            l_max,
        }
    }

    /// Sufficiency-tier report over the decision stages `0..N`.
    pub fn feasibility(&self) -> FeasibilityReport {
        let bounds: Vec<StageBounds> = (0..self.n_stages()).map(|k| self.stage_bounds(k)).collect();
        check_configuration_feasibility(&bounds, self.dt(), &self.battery)
    }

    /// Same system over a different horizon.
    pub fn with_grid(&self, grid: TimeGrid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HorizonConfig {
    pub start_epoch_s: i64,
    pub end_epoch_s: i64,
    pub dt_s: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryConfig {
    pub capacity_kwh: f64,
    pub p_min_kw: f64,
    pub p_max_kw: f64,
    #[serde(default = "one")]
    pub eta_s: f64,
    #[serde(default = "one")]
    pub xi_charge: f64,
    #[serde(default = "one")]
    pub xi_discharge: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelPaths {
    pub pv: PathBuf,
    pub load: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_resolution")]
    pub n_states: usize,
    #[serde(default = "default_resolution")]
    pub n_decisions: usize,
}

fn default_resolution() -> usize {
    101
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            n_states: default_resolution(),
            n_decisions: default_resolution(),
        }
    }
}

/// Scenario configuration file (TOML). Model paths are relative to the
/// config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub terminal_multiplier: f64,
    pub initial_soc_kwh: f64,
    #[serde(default)]
    pub utc_offset_h: i64,
    pub horizon: HorizonConfig,
    pub battery: BatteryConfig,
    pub pricing: PricingSchedule,
    pub models: ModelPaths,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        Ok(TimeGrid::new(
            self.horizon.start_epoch_s,
            self.horizon.end_epoch_s,
            self.horizon.dt_s,
        )?
        .with_utc_offset_hours(self.utc_offset_h))
    }

    pub fn battery_spec(&self) -> Result<BatterySpec> {
        let b = &self.battery;
        BatterySpec::new(
            b.capacity_kwh,
            b.p_min_kw,
            b.p_max_kw,
            b.eta_s,
            b.xi_charge,
            b.xi_discharge,
        )
    }

    /// Builds the scenario with already-loaded models.
    pub fn build(&self, pv: CyclostationaryModel, load: CyclostationaryModel) -> Result<Scenario> {
        self.pricing.validate()?;
        Scenario::new(
            self.grid()?,
            self.battery_spec()?,
            self.pricing.clone(),
            pv,
            load,
            self.terminal_multiplier,
            self.initial_soc_kwh,
        )
    }

    /// Loads the model files relative to `base_dir` and builds the scenario.
    pub fn load_scenario(&self, base_dir: &Path) -> Result<Scenario> {
        let pv = read_model(&base_dir.join(&self.models.pv))?;
        let load = read_model(&base_dir.join(&self.models.load))?;
        self.build(pv, load)
    }
}

pub fn read_model(path: &Path) -> Result<CyclostationaryModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read model file {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn model_to_json(model: &CyclostationaryModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("model serializes");
    s.push('\n');
    s
}
