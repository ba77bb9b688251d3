//! Monte Carlo evaluation of policies against sampled PV/load paths.
//!
//! Every rollout draws its whole `(e, l)` path up front from a ChaCha8
//! stream keyed by the rollout seed, so policies compared under the same
//! seed see identical realizations (common random numbers).

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{monetary_terminal, stage_cost, terminal_cost};
use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::scenario::Scenario;
use crate::storage::{step_battery, STATE_TOL};

/// Largest accepted `|e + u + v + l|` in kW.
pub const BALANCE_TOL: f64 = 1e-9;

/// z-value of a two-sided 95% normal interval.
const Z95: f64 = 1.96;

pub const TRAJECTORY_HEADER: &str = "k,s_kwh,e_kw,l_kw,u_kw,v_kw,stage_cost_usd";

/// Sampled realizations for one rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationPath {
    pub e: Vec<f64>,
    pub l: Vec<f64>,
}

/// Seed of rollout `index` in a batch started from `seed`.
pub fn rollout_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add(index as u64)
}

pub fn sample_path(scenario: &Scenario, seed: u64) -> RealizationPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scenario.n_stages();
    let mut path = RealizationPath {
        e: Vec::with_capacity(n),
        l: Vec::with_capacity(n),
    };
    for k in 0..n {
        path.e.push(scenario.pv_at(k).sample(&mut rng));
        path.l.push(scenario.load_at(k).sample(&mut rng));
    }
    path
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub k: usize,
    pub s_kwh: f64,
    pub e_kw: f64,
    pub l_kw: f64,
    pub u_kw: f64,
    pub v_kw: f64,
    pub stage_cost_usd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub policy: String,
    pub seed: u64,
    pub stages: Vec<StageRecord>,
    pub terminal_soc_kwh: f64,
    /// Leftover charge valued at the sell price (negative is revenue).
    pub g1: f64,
    /// Objective terminal penalty.
    pub g: f64,
}

impl Trajectory {
    pub fn transaction_cost(&self) -> f64 {
        self.stages.iter().map(|r| r.stage_cost_usd).sum()
    }

    /// Actual money: stage costs plus `g1`.
    pub fn j1(&self) -> f64 {
        self.transaction_cost() + self.g1
    }

    /// Optimization objective: stage costs plus `g`.
    pub fn j(&self) -> f64 {
        self.transaction_cost() + self.g
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        w.write_record(TRAJECTORY_HEADER.split(','))?;
        for r in &self.stages {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn dump(k: usize, s: f64, e: f64, l: f64, u: f64, v: f64) -> String {
    format!("k={k} s={s} e={e} l={l} u={u} v={v}")
}

/// Runs `policy` over a given realization path, checking power balance,
/// battery power limits and state bounds at every stage.
pub fn rollout_on_path(
    policy: &dyn Policy,
    scenario: &Scenario,
    path: &RealizationPath,
    seed: u64,
) -> Result<Trajectory> {
    let n = scenario.n_stages();
    let dt = scenario.dt();
    let b = &scenario.battery;
    let fail = |stage: usize, reason: String, dump: String| Error::Rollout {
        policy: policy.name().to_string(),
        stage,
        reason,
        dump,
    };
    let mut s = scenario.initial_soc_kwh;
    let mut stages = Vec::with_capacity(n);
    for k in 0..n {
        let (e, l) = (path.e[k], path.l[k]);
        let d = policy
            .decide(k, s, e, l, scenario)
            .map_err(|err| fail(k, err.to_string(), dump(k, s, e, l, f64::NAN, f64::NAN)))?;
        let residual = d.balance_residual(e, l);
        if !(residual.abs() <= BALANCE_TOL) {
            return Err(fail(
                k,
                format!("power balance residual {residual} kW"),
                dump(k, s, e, l, d.u, d.v),
            ));
        }
        if !(d.v >= b.p_min_kw - BALANCE_TOL && d.v <= b.p_max_kw + BALANCE_TOL) {
            return Err(fail(
                k,
                format!("battery power outside [{}, {}] kW", b.p_min_kw, b.p_max_kw),
                dump(k, s, e, l, d.u, d.v),
            ));
        }
        let next = step_battery(s, d.v, dt, b)
            .map_err(|err| fail(k, err.to_string(), dump(k, s, e, l, d.u, d.v)))?;
        if !(0.0..=b.capacity_kwh + STATE_TOL).contains(&next) {
            return Err(fail(
                k,
                format!("state {next} kWh out of range"),
                dump(k, s, e, l, d.u, d.v),
            ));
        }
        stages.push(StageRecord {
            k,
            s_kwh: s,
            e_kw: e,
            l_kw: l,
            u_kw: d.u,
            v_kw: d.v,
            stage_cost_usd: stage_cost(d.u, k, &scenario.pricing, &scenario.grid),
        });
        s = next;
    }
    Ok(Trajectory {
        policy: policy.name().to_string(),
        seed,
        stages,
        terminal_soc_kwh: s,
        g1: monetary_terminal(s, &scenario.pricing, &scenario.grid),
        g: terminal_cost(
            s,
            scenario.terminal_multiplier,
            b,
            &scenario.pricing,
            &scenario.grid,
        ),
    })
}

pub fn rollout(policy: &dyn Policy, scenario: &Scenario, seed: u64) -> Result<Trajectory> {
    rollout_on_path(policy, scenario, &sample_path(scenario, seed), seed)
}

/// Suffix sums of stage costs plus `g1`; element 0 is `J1` and the last
/// element (index `N`) is `g1` alone.
pub fn realized_cost_to_go(trajectory: &Trajectory) -> Vec<f64> {
    let mut out = vec![0.0; trajectory.stages.len() + 1];
    let mut acc = trajectory.g1;
    out[trajectory.stages.len()] = acc;
    for (k, r) in trajectory.stages.iter().enumerate().rev() {
        acc += r.stage_cost_usd;
        out[k] = acc;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub policy: String,
    pub n: usize,
    pub mean_j1: f64,
    pub std_j1: f64,
    pub ci95: f64,
    pub mean_j: f64,
    pub mean_terminal_soc: f64,
    pub violations: usize,
    /// Mean realized cost-to-go per stage, `N + 1` entries.
    pub mean_cost_to_go: Vec<f64>,
}

impl CostReport {
    fn from_trajectories(policy: &str, trajectories: &[Trajectory]) -> Self {
        let n = trajectories.len();
        let nf = n as f64;
        let j1: Vec<f64> = trajectories.iter().map(Trajectory::j1).collect();
        let mean_j1 = j1.iter().sum::<f64>() / nf;
        let std_j1 = if n > 1 {
            (j1.iter().map(|x| (x - mean_j1).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut ctg = vec![0.0; trajectories.first().map_or(0, |t| t.stages.len() + 1)];
        for t in trajectories {
            for (acc, x) in ctg.iter_mut().zip(realized_cost_to_go(t)) {
                *acc += x;
            }
        }
        ctg.iter_mut().for_each(|x| *x /= nf);
        Self {
            policy: policy.to_string(),
            n,
            mean_j1,
            std_j1,
            ci95: Z95 * std_j1 / nf.sqrt(),
            mean_j: trajectories.iter().map(Trajectory::j).sum::<f64>() / nf,
            mean_terminal_soc: trajectories.iter().map(|t| t.terminal_soc_kwh).sum::<f64>() / nf,
            violations: 0,
            mean_cost_to_go: ctg,
        }
    }
}

fn check_rollouts(n_rollouts: usize) -> Result<()> {
    if n_rollouts == 0 {
        return Err(Error::Config("need at least one rollout".into()));
    }
    Ok(())
}

fn run_batch(
    policy: &dyn Policy,
    scenario: &Scenario,
    paths: &[RealizationPath],
    seed: u64,
) -> Result<Vec<Trajectory>> {
    paths
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let rs = rollout_seed(seed, i);
            rollout_on_path(policy, scenario, p, rs).map_err(|e| Error::MonteCarlo {
                index: i,
                seed: rs,
                source: Box::new(e),
            })
        })
        .collect()
}

fn sample_paths(scenario: &Scenario, n_rollouts: usize, seed: u64) -> Vec<RealizationPath> {
    (0..n_rollouts)
        .into_par_iter()
        .map(|i| sample_path(scenario, rollout_seed(seed, i)))
        .collect()
}

/// `n_rollouts` independent rollouts; rollout `i` uses seed
/// [`rollout_seed`]`(seed, i)`.
pub fn monte_carlo(
    policy: &dyn Policy,
    scenario: &Scenario,
    n_rollouts: usize,
    seed: u64,
) -> Result<CostReport> {
    check_rollouts(n_rollouts)?;
    let paths = sample_paths(scenario, n_rollouts, seed);
    let trajectories = run_batch(policy, scenario, &paths, seed)?;
    Ok(CostReport::from_trajectories(policy.name(), &trajectories))
}

/// Reports for several policies evaluated on the same realization paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub seed: u64,
    pub reports: Vec<CostReport>,
}

impl Comparison {
    pub fn report(&self, policy: &str) -> Option<&CostReport> {
        self.reports.iter().find(|r| r.policy == policy)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("comparison serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One summary row per policy.
    pub fn write_summary_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "policy",
            "n",
            "mean_j1",
            "std_j1",
            "ci95",
            "mean_j",
            "mean_terminal_soc",
            "violations",
        ])?;
        for r in &self.reports {
            w.write_record([
                r.policy.clone(),
                r.n.to_string(),
                r.mean_j1.to_string(),
                r.std_j1.to_string(),
                r.ci95.to_string(),
                r.mean_j.to_string(),
                r.mean_terminal_soc.to_string(),
                r.violations.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Stage index followed by one mean cost-to-go column per policy.
    pub fn write_cost_to_go_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["k".to_string()];
        header.extend(self.reports.iter().map(|r| r.policy.clone()));
        w.write_record(&header)?;
        let rows = self.reports.first().map_or(0, |r| r.mean_cost_to_go.len());
        for k in 0..rows {
            let mut row = vec![k.to_string()];
            row.extend(
                self.reports
                    .iter()
                    .map(|r| r.mean_cost_to_go[k].to_string()),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluates every policy on one shared set of sampled paths.
pub fn compare_policies(
    policies: &[&dyn Policy],
    scenario: &Scenario,
    n_rollouts: usize,
    seed: u64,
) -> Result<Comparison> {
    if policies.len() < 2 {
        return Err(Error::Config(
            "comparison needs at least two policies".into(),
        ));
    }
    check_rollouts(n_rollouts)?;
    let paths = sample_paths(scenario, n_rollouts, seed);
    let reports = policies
        .iter()
        .map(|p| {
            Ok(CostReport::from_trajectories(
                p.name(),
                &run_batch(*p, scenario, &paths, seed)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(Comparison { seed, reports })
}
