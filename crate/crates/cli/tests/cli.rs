mod common;

use common::{nanogrid, ok, prepare, s};
use nanogrid::simulator::Comparison;

#[test]
fn full_pipeline_ranks_optimal_first() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let out = ok(&["check", "--config", s(&cfg)]);
    assert!(out.contains("tier (i)   horizon sum"));
    assert!(out.contains("verdict: HORIZON-SUM"));
    ok(&[
        "solve",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--n-states",
        "41",
        "--n-decisions",
        "41",
    ]);
    ok(&[
        "compare",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--policies",
        "policy1,policy2,optimal",
        "--n",
        "300",
        "--seed",
        "7",
    ]);
    let text = std::fs::read_to_string(dir.path().join("comparison.json")).unwrap();
    let c = Comparison::from_json(&text).unwrap();
    assert_eq!(c.reports.len(), 3);
    let best = c
        .reports
        .iter()
        .min_by(|a, b| a.mean_j1.total_cmp(&b.mean_j1))
        .unwrap();
    assert_eq!(best.policy, "optimal");
    assert!(c.reports.iter().all(|r| r.violations == 0));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["solve_span"], "full");
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 4);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["subcommand"], "compare");
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["created_unix_s"], 0);
}

#[test]
fn simulate_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    ok(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--policy",
        "policy2",
        "--n",
        "20",
    ]);
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(
        traj.lines().next().unwrap(),
        "k,s_kwh,e_kw,l_kw,u_kw,v_kw,stage_cost_usd"
    );
    assert_eq!(traj.lines().count(), 25);
    assert!(!traj.contains("-0.0,"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    for key in ["mean_j1", "std_j1", "ci95", "mean_terminal_soc", "n"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["n"], 20);
}

#[test]
fn optimal_without_table_names_solve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let out = nanogrid(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--policy",
        "optimal",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nanogrid solve"));
}

#[test]
fn infeasible_config_exits_two_and_solve_refuses() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("p_min_kw = -5.0", "p_min_kw = -0.1")
        .replace("p_max_kw = 5.0", "p_max_kw = 0.1");
    std::fs::write(&cfg, text).unwrap();
    let out = nanogrid(&["check", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("INFEASIBLE-CONFIG (violating stage"));
    let out = nanogrid(&["solve", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    let out = nanogrid(&[
        "solve",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--force-infeasible",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("empty determinable feasible decision space")
    );
}

#[test]
fn usage_and_parse_errors_exit_one() {
    assert_eq!(nanogrid(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nanogrid(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "terminal_multiplier = \"lots\"\n").unwrap();
    assert_eq!(
        nanogrid(&["check", "--config", s(&cfg)]).status.code(),
        Some(1)
    );
}

#[test]
fn malformed_csv_row_is_cited() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let path = dir.path().join("load.csv");
    let mut lines: Vec<String> = std::fs::read_to_string(&path)
        .unwrap()
        .lines()
        .map(str::to_string)
        .collect();
    lines[16] = "57600,oops".into();
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let out = nanogrid(&[
        "ingest",
        "--weather",
        s(&dir.path().join("weather.csv")),
        "--load",
        s(&path),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":17:"));
}

#[test]
fn day_span_tiles_a_multi_day_horizon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = prepare(dir.path());
    let text = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("end_epoch_s = 86400", "end_epoch_s = 259200");
    std::fs::write(&cfg, text).unwrap();
    let out = ok(&[
        "solve",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--solve-span",
        "day",
        "--n-states",
        "21",
        "--n-decisions",
        "21",
    ]);
    assert!(out.contains("solved 24 stages"));
    ok(&[
        "compare",
        "--config",
        s(&cfg),
        "--out",
        s(dir.path()),
        "--n",
        "20",
    ]);
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("comparison.json")).unwrap())
            .unwrap();
    assert_eq!(v["solve_span"], "day");
    assert_eq!(
        v["reports"][0]["mean_cost_to_go"].as_array().unwrap().len(),
        73
    );
}

#[test]
fn reference_forecast_override_is_used() {
    let dir = tempfile::tempdir().unwrap();
    prepare(dir.path());
    let rf = dir.path().join("forecast.json");
    std::fs::write(&rf, serde_json::to_string(&vec![0.0; 24]).unwrap()).unwrap();
    ok(&[
        "ingest",
        "--weather",
        s(&dir.path().join("weather.csv")),
        "--load",
        s(&dir.path().join("load.csv")),
        "--out",
        s(dir.path()),
        "--reference-forecast",
        s(&rf),
    ]);
    let model = nanogrid::scenario::read_model(&dir.path().join("pv_model.json")).unwrap();
    // zero forecast: only positive errors survive the clamp, night stays dark
    assert_eq!(model.hour(0).support(), &[0.0]);
    std::fs::write(&rf, "[1, 2]").unwrap();
    let out = nanogrid(&[
        "ingest",
        "--weather",
        s(&dir.path().join("weather.csv")),
        "--load",
        s(&dir.path().join("load.csv")),
        "--out",
        s(dir.path()),
        "--reference-forecast",
        s(&rf),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
