use nanogrid::distribution::{CyclostationaryModel, EmpiricalDistribution};
use nanogrid::reference::random_small_instance;
use nanogrid::solver::{solve_backward, StateGrid};
use nanogrid::{brute_force_oracle, BatterySpec, PricingSchedule, Scenario, TimeGrid};

#[test]
fn solver_matches_exhaustive_search_on_random_instances() {
    for seed in 0..30 {
        let inst = random_small_instance(seed);
        let sc = &inst.scenario;
        let grid = StateGrid::new(sc.capacity(), inst.n_states).unwrap();
        let table = solve_backward(sc, &grid, inst.n_decisions).unwrap();
        for k in 0..=sc.n_stages() {
            for j in 0..grid.len() {
                let o = brute_force_oracle(sc, &grid, inst.n_decisions, k, j).unwrap();
                assert!(
                    (o - table.v[k][j]).abs() <= 1e-9,
                    "seed {seed} k={k} j={j}: oracle {o} solver {}",
                    table.v[k][j]
                );
            }
        }
    }
}

/// Every successor lands on a grid point, so the quantized problem is a
/// shortest path over a 3-node lattice that can be enumerated directly.
#[test]
fn lattice_problem_matches_path_enumeration() {
    let buy = vec![0.30, 0.10, 0.40, 0.20, 0.25, 0.15];
    let sell = vec![0.05, 0.08, 0.35, 0.02, 0.10, 0.12];
    let mut buy24 = vec![0.2; 24];
    let mut sell24 = vec![0.1; 24];
    buy24[..6].copy_from_slice(&buy);
    sell24[..6].copy_from_slice(&sell);
    let pricing = PricingSchedule::new(buy24, sell24).unwrap();
    let n = 5;
    let sc = Scenario::new(
        TimeGrid::new(0, n as i64 * 3600, 3600).unwrap(),
        BatterySpec::ideal(2.0, 1.0).unwrap(),
        pricing,
        CyclostationaryModel::constant(EmpiricalDistribution::singleton(0.5)),
        CyclostationaryModel::constant(EmpiricalDistribution::singleton(-0.5)),
        1.5,
        1.0,
    )
    .unwrap();
    let grid = StateGrid::new(2.0, 3).unwrap();
    let table = solve_backward(&sc, &grid, 2).unwrap();

    let cost = |k: usize, u: f64| if u > 0.0 { buy[k] * u } else { sell[k] * u };
    let terminal = |s: f64| 1.5 * (2.0 - s) * sell[n];
    for start in 0..3 {
        let mut best = f64::INFINITY;
        for code in 0..3usize.pow(n as u32) {
            let (mut s, mut c, mut ok) = (start as f64, 0.0, true);
            let mut rest = code;
            for k in 0..n {
                let u = (rest % 3) as f64 - 1.0;
                rest /= 3;
                if !(0.0..=2.0).contains(&(s + u)) {
                    ok = false;
                    break;
                }
                c += cost(k, u);
                s += u;
            }
            if ok {
                best = best.min(c + terminal(s));
            }
        }
        assert!(
            (table.v[0][start] - best).abs() < 1e-12,
            "start {start}: {} vs {best}",
            table.v[0][start]
        );
    }
}
