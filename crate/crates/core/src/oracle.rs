//! Exhaustive expectimin reference for small instances.
//!
//! Walks the full decision/outcome tree without memoization. It shares
//! only the definition of the candidate decision sets with the solver;
//! successor states are mapped back onto grid points with its own
//! bracketing so the two evaluations are computed independently.

use crate::economics::{stage_cost, terminal_cost};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::solver::{admissible_space, candidate_decisions, StateGrid};
use crate::storage::step_battery;

/// Largest tree the oracle will enumerate.
pub const ORACLE_PATH_LIMIT: f64 = 1e7;

/// Upper bound on enumerated paths from stage `k`: the product over the
/// remaining stages of (candidates per node) x (distinct successor grid
/// points per candidate).
pub fn oracle_path_count(
    scenario: &Scenario,
    n_states: usize,
    n_decisions: usize,
    k: usize,
) -> f64 {
    // linspace already contains both endpoints, so at most zero is added
    let n_cand = if n_decisions >= 2 { n_decisions + 1 } else { 3 };
    (k..scenario.n_stages())
        .map(|i| {
            let outcomes = 2 * scenario.pv_at(i).len() * scenario.load_at(i).len();
            (n_cand * outcomes.min(n_states)) as f64
        })
        .product()
}

/// Grid lottery for a successor state: `(index, weight)` pairs with
/// positive weight.
fn lottery(points: &[f64], s: f64) -> Vec<(usize, f64)> {
    let s = s.clamp(points[0], points[points.len() - 1]);
    if let Some(j) = points.iter().position(|&p| p == s) {
        return vec![(j, 1.0)];
    }
    let hi = points
        .iter()
        .position(|&p| p > s)
        .expect("s is inside the grid");
    let lo = hi - 1;
    let w = (s - points[lo]) / (points[hi] - points[lo]);
    vec![(lo, 1.0 - w), (hi, w)]
}

fn value(
    scenario: &Scenario,
    grid: &StateGrid,
    n_decisions: usize,
    k: usize,
    j: usize,
) -> Result<f64> {
    let points = grid.points();
    let s = points[j];
    if k == scenario.n_stages() {
        return Ok(terminal_cost(
            s,
            scenario.terminal_multiplier,
            &scenario.battery,
            &scenario.pricing,
            &scenario.grid,
        ));
    }
    let space = admissible_space(k, s, scenario).ok_or(Error::EmptyAdmissibleSet {
        stage: k,
        state_kwh: s,
    })?;
    let mut best = f64::INFINITY;
    for u in candidate_decisions(space, n_decisions) {
        // aggregate outcome probability per grid index before recursing
        let mut mass = vec![0.0; points.len()];
        for (e, pe) in scenario.pv_at(k).iter() {
            for (l, pl) in scenario.load_at(k).iter() {
                let next = step_battery(s, -(u + e + l), scenario.dt(), &scenario.battery)?;
                for (i, w) in lottery(points, next) {
                    mass[i] += pe * pl * w;
                }
            }
        }
        let mut q = stage_cost(u, k, &scenario.pricing, &scenario.grid);
        for (i, &m) in mass.iter().enumerate() {
            if m > 0.0 {
                q += m * value(scenario, grid, n_decisions, k + 1, i)?;
            }
        }
        best = best.min(q);
    }
    Ok(best)
}

/// Optimal expected cost-to-go at `(k, grid point j)`, or
/// [`Error::OracleTooLarge`] when the tree exceeds [`ORACLE_PATH_LIMIT`].
pub fn brute_force_oracle(
    scenario: &Scenario,
    grid: &StateGrid,
    n_decisions: usize,
    k: usize,
    j: usize,
) -> Result<f64> {
    let paths = oracle_path_count(scenario, grid.len(), n_decisions, k);
    if paths > ORACLE_PATH_LIMIT {
        return Err(Error::OracleTooLarge {
            paths,
            limit: ORACLE_PATH_LIMIT,
        });
    }
    value(scenario, grid, n_decisions, k, j)
}
