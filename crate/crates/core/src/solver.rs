//! Backward induction over a quantized battery state.
//!
//! Each stage minimizes `L(u) + E[V_{k+1}(s')]` over a finite candidate
//! set spanning the determinable feasible decision space, so every
//! candidate is safe for every in-support PV/load realization. Successor
//! states between grid points are valued by linear interpolation.

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::economics::{stage_cost, terminal_cost};
use crate::error::{Error, Result};
use crate::policy::{clamp_decision_to_feasible, Decision, Policy};
use crate::scenario::Scenario;
use crate::storage::{determinable_feasible_space, step_battery, Interval};

/// An admissible interval inverted by less than this (kW) is treated as
/// the single point at its midpoint.
pub const ADMISSIBLE_TOL: f64 = 1e-9;

/// Relative tolerance under which two candidate values count as tied.
const TIE_EPS: f64 = 1e-12;

/// Uniform grid `0 = s_1 < ... < s_n = capacity`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateGrid {
    points: Vec<f64>,
}

impl StateGrid {
    pub fn new(capacity: f64, n_states: usize) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::Config(format!(
                "state grid needs at least 2 points, got {n_states}"
            )));
        }
        if !(capacity > 0.0) {
            return Err(Error::Config(format!(
                "capacity must be positive, got {capacity}"
            )));
        }
        let last = (n_states - 1) as f64;
        let mut points: Vec<f64> = (0..n_states).map(|j| capacity * j as f64 / last).collect();
        points[n_states - 1] = capacity;
        Ok(Self { points })
    }

    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 || points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(
                "state grid must start at 0 and increase strictly".into(),
            ));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn capacity(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn spacing(&self) -> f64 {
        self.capacity() / (self.len() - 1) as f64
    }

    /// Index of the nearest grid point; midpoints go to the lower index.
    pub fn nearest_index(&self, s: f64) -> usize {
        let x = s / self.spacing();
        let i = (x - 0.5).ceil();
        (i.max(0.0) as usize).min(self.len() - 1)
    }

    /// Lower bracketing index `i` and the weight on point `i + 1`.
    fn bracket(&self, s: f64) -> (usize, f64) {
        let n = self.len();
        let s = s.clamp(0.0, self.capacity());
        let mut i = ((s / self.spacing()).floor() as usize).min(n - 2);
        // guard against rounding in s / spacing
        while i > 0 && self.points[i] > s {
            i -= 1;
        }
        while i + 2 < n && self.points[i + 1] <= s {
            i += 1;
        }
        let (a, b) = (self.points[i], self.points[i + 1]);
        (i, (s - a) / (b - a))
    }
}

/// Piecewise-linear value at `s`, exact at grid points; `s` is clamped
/// into `[0, capacity]`.
pub fn interpolate_value(v_row: &[f64], grid: &StateGrid, s: f64) -> f64 {
    let (i, w) = grid.bracket(s);
    if w == 0.0 {
        v_row[i]
    } else if w == 1.0 {
        v_row[i + 1]
    } else {
        (1.0 - w) * v_row[i] + w * v_row[i + 1]
    }
}

/// Solved cost-to-go `v[k][j]` and argmin grid decision `u_star[k][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTable {
    pub state_grid: Vec<f64>,
    pub n_decisions: usize,
    /// `n_stages + 1` rows of `$`.
    pub v: Vec<Vec<f64>>,
    /// `n_stages` rows of kW.
    pub u_star: Vec<Vec<f64>>,
}

impl ValueTable {
    pub fn n_stages(&self) -> usize {
        self.u_star.len()
    }

    pub fn grid(&self) -> Result<StateGrid> {
        StateGrid::from_points(self.state_grid.clone())
    }

    /// Cost-to-go at stage `k` interpolated at `s`.
    pub fn value_at(&self, k: usize, s: f64) -> Result<f64> {
        Ok(interpolate_value(&self.v[k], &self.grid()?, s))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("value table serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: Self = serde_json::from_str(text)?;
        if t.v.len() != t.u_star.len() + 1
            || t.v.iter().any(|r| r.len() != t.state_grid.len())
            || t.u_star.iter().any(|r| r.len() != t.state_grid.len())
        {
            return Err(Error::Config(
                "value table has inconsistent dimensions".into(),
            ));
        }
        t.grid()?;
        Ok(t)
    }
}

/// Admissible decisions at `(k, s)` from the stage's model bounds.
pub fn admissible_space(k: usize, s: f64, scenario: &Scenario) -> Option<Interval> {
    let b = scenario.stage_bounds(k);
    let space = determinable_feasible_space(
        s,
        b.e_min,
        b.e_max,
        b.l_min,
        b.l_max,
        scenario.dt(),
        &scenario.battery,
    );
    if !space.is_empty() {
        Some(space)
    } else if space.lo - space.hi <= ADMISSIBLE_TOL {
        let mid = 0.5 * (space.lo + space.hi);
        Some(Interval::new(mid, mid))
    } else {
        None
    }
}

/// `n_decisions` uniform points over `space` plus both endpoints and zero
/// when it is interior; sorted and deduplicated.
pub fn candidate_decisions(space: Interval, n_decisions: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n_decisions + 3);
    if n_decisions > 2 {
        // interior points only; the exact endpoints are pushed below
        let last = (n_decisions - 1) as f64;
        c.extend(
            (1..n_decisions - 1)
                .map(|i| (space.lo + (space.hi - space.lo) * i as f64 / last).min(space.hi)),
        );
    }
    c.push(space.lo);
    c.push(space.hi);
    if space.lo < 0.0 && 0.0 < space.hi {
        c.push(0.0);
    }
    c.sort_by(f64::total_cmp);
    c.dedup();
    c
}

/// `E[V_{k+1}(s')]` over the product of the stage's PV and load
/// distributions.
pub fn expected_next_value(
    k: usize,
    s: f64,
    u: f64,
    v_next: &[f64],
    scenario: &Scenario,
    grid: &StateGrid,
) -> Result<f64> {
    let dt = scenario.dt();
    let mut acc = 0.0;
    for (e, pe) in scenario.pv_at(k).iter() {
        for (l, pl) in scenario.load_at(k).iter() {
            let next = step_battery(s, -(u + e + l), dt, &scenario.battery)?;
            acc += pe * pl * interpolate_value(v_next, grid, next);
        }
    }
    Ok(acc)
}

fn prefer(q: f64, u: f64, best_q: f64, best_u: f64) -> bool {
    let tol = TIE_EPS * (1.0 + best_q.abs());
    if q < best_q - tol {
        return true;
    }
    if q > best_q + tol {
        return false;
    }
    (u.abs(), u) < (best_u.abs(), best_u)
}

/// Minimizes over one grid state; returns `(value, argmin)`.
fn backup_state(
    k: usize,
    s: f64,
    v_next: &[f64],
    scenario: &Scenario,
    grid: &StateGrid,
    n_decisions: usize,
) -> Result<(f64, f64)> {
    let space = admissible_space(k, s, scenario).ok_or(Error::EmptyAdmissibleSet {
        stage: k,
        state_kwh: s,
    })?;
    let mut best = (f64::INFINITY, 0.0);
    for u in candidate_decisions(space, n_decisions) {
        let q = stage_cost(u, k, &scenario.pricing, &scenario.grid)
            + expected_next_value(k, s, u, v_next, scenario, grid)?;
        if best.0.is_infinite() || prefer(q, u, best.0, best.1) {
            best = (q, u);
        }
    }
    Ok(best)
}

/// One Bellman backup at stage `k`: `(V_k row, U*_k row)`.
pub fn bellman_backup(
    k: usize,
    v_next: &[f64],
    scenario: &Scenario,
    grid: &StateGrid,
    n_decisions: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Vec<(f64, f64)> = grid
        .points()
        .par_iter()
        .map(|&s| backup_state(k, s, v_next, scenario, grid, n_decisions))
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().unzip())
}

/// Terminal row `V_N(s_j) = m (capacity - s_j) c_s(t_N)`.
pub fn terminal_row(scenario: &Scenario, grid: &StateGrid) -> Vec<f64> {
    grid.points()
        .iter()
        .map(|&s| {
            terminal_cost(
                s,
                scenario.terminal_multiplier,
                &scenario.battery,
                &scenario.pricing,
                &scenario.grid,
            )
        })
        .collect()
}

/// Fills `V_N` from the terminal cost and rows `N-1 .. 0` by backups.
pub fn solve_backward(
    scenario: &Scenario,
    grid: &StateGrid,
    n_decisions: usize,
) -> Result<ValueTable> {
    let n = scenario.n_stages();
    let mut v = vec![Vec::new(); n + 1];
    let mut u_star = vec![Vec::new(); n];
    v[n] = terminal_row(scenario, grid);
    for k in (0..n).rev() {
        let (row, arg) = bellman_backup(k, &v[k + 1], scenario, grid, n_decisions)?;
        v[k] = row;
        u_star[k] = arg;
        debug!("stage {k} backed up");
    }
    Ok(ValueTable {
        state_grid: grid.points().to_vec(),
        n_decisions,
        v,
        u_star,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub n_states: usize,
    pub n_decisions: usize,
    pub force_infeasible: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_states: 101,
            n_decisions: 101,
            force_infeasible: false,
        }
    }
}

/// Checks the sufficiency tiers, then solves. Refuses configurations that
/// fail every tier unless `force_infeasible` is set.
pub fn solve(scenario: &Scenario, settings: &SolverSettings) -> Result<ValueTable> {
    let report = scenario.feasibility();
    if !report.passes() && !settings.force_infeasible {
        return Err(Error::InfeasibleConfiguration {
            stage: report.violating_stage.unwrap_or(report.worst_stage),
        });
    }
    let grid = StateGrid::new(scenario.capacity(), settings.n_states)?;
    solve_backward(scenario, &grid, settings.n_decisions)
}

/// Closed-loop decision: the table's grid decision at the nearest grid
/// state, projected onto the realization's feasible space. The battery
/// absorbs the realized imbalance.
pub fn near_optimal_decide(
    k: usize,
    s: f64,
    e: f64,
    l: f64,
    table: &ValueTable,
    scenario: &Scenario,
) -> Result<Decision> {
    let grid = StateGrid::from_points(table.state_grid.clone())?;
    let row = &table.u_star[k % table.n_stages()];
    clamp_decision_to_feasible(row[grid.nearest_index(s)], s, e, l, scenario)
}

/// The solved table wrapped as a [`Policy`]. A table shorter than the
/// scenario horizon (one day) is applied periodically.
#[derive(Debug, Clone)]
pub struct NearOptimalPolicy {
    table: ValueTable,
    grid: StateGrid,
}

impl NearOptimalPolicy {
    pub fn new(table: ValueTable, scenario: &Scenario) -> Result<Self> {
        let grid = table.grid()?;
        if (grid.capacity() - scenario.capacity()).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "value table capacity {} kWh does not match scenario capacity {} kWh",
                grid.capacity(),
                scenario.capacity()
            )));
        }
        let n = table.n_stages();
        if n == 0 || !scenario.n_stages().is_multiple_of(n) {
            return Err(Error::Config(format!(
                "value table covers {n} stages, which does not tile the {}-stage horizon",
                scenario.n_stages()
            )));
        }
        Ok(Self { table, grid })
    }

    pub fn table(&self) -> &ValueTable {
        &self.table
    }
}

impl Policy for NearOptimalPolicy {
    fn name(&self) -> &str {
        "optimal"
    }

    fn decide(&self, k: usize, s: f64, e: f64, l: f64, scenario: &Scenario) -> Result<Decision> {
        let row = &self.table.u_star[k % self.table.n_stages()];
        clamp_decision_to_feasible(row[self.grid.nearest_index(s)], s, e, l, scenario)
    }
}
