//! Stochastic battery energy management for a PV + storage nanogrid.
//!
//! Hour-of-day PV and load distributions are fitted from weather and
//! consumption history; a finite-horizon MDP over the battery state is
//! solved by quantized backward induction and evaluated against
//! rule-based policies by Monte Carlo simulation.

pub mod distribution;
pub mod economics;
pub mod error;
pub mod models;
pub mod oracle;
pub mod policy;
pub mod reference;
pub mod scenario;
pub mod simulator;
pub mod solver;
pub mod storage;
pub mod synth;
pub mod time;

pub use distribution::{discretize, CyclostationaryModel, EmpiricalDistribution};
pub use economics::PricingSchedule;
pub use error::{Error, Result};
pub use models::{PvPlant, WeatherRecord};
pub use oracle::brute_force_oracle;
pub use policy::{Decision, LookaheadPolicy, Policy, StorageFirstPolicy};
pub use scenario::{Scenario, ScenarioConfig};
pub use simulator::{compare_policies, monte_carlo, rollout, Comparison, CostReport, Trajectory};
pub use solver::{solve, solve_backward, NearOptimalPolicy, SolverSettings, StateGrid, ValueTable};
pub use storage::{BatterySpec, FeasibilityReport, Interval, Verdict};
pub use time::TimeGrid;
