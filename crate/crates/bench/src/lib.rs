//! Fixtures shared by the criterion benchmarks.

use nanogrid::{reference, Scenario, TimeGrid};

/// The reference system stretched over `days` days.
pub fn multi_day_scenario(days: usize) -> Scenario {
    let base = reference::scenario().expect("reference scenario builds");
    let grid = TimeGrid::new(0, days as i64 * 86_400, 3600).expect("valid horizon");
    base.with_grid(grid)
}
