use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::Serialize;

use nanogrid::models::io::{read_load_csv, read_weather_csv, write_load_csv, write_weather_csv};
use nanogrid::models::load::load_bucket_sizes;
use nanogrid::models::weather::mean_forecast_by_hour;
use nanogrid::models::{build_pv_model, fit_load_model, PvModelFit};
use nanogrid::policy::DEFAULT_LOOKAHEAD_H;
use nanogrid::scenario::model_to_json;
use nanogrid::simulator::{rollout_seed, Comparison};
use nanogrid::time::{HOURS_PER_DAY, SECONDS_PER_HOUR};
use nanogrid::{
    compare_policies, monte_carlo, reference, rollout, solve, Error, LookaheadPolicy,
    NearOptimalPolicy, Policy, PvPlant, Scenario, ScenarioConfig, SolverSettings,
    StorageFirstPolicy, TimeGrid, ValueTable,
};

mod manifest;

use manifest::RunManifest;

const PV_MODEL_FILE: &str = "pv_model.json";
const LOAD_MODEL_FILE: &str = "load_model.json";
const VALUE_TABLE_FILE: &str = "value_table.json";

#[derive(Debug, Parser)]
#[command(
    name = "nanogrid",
    version,
    about = "Stochastic battery energy management for PV nanogrids"
)]
struct Cli {
    /// Scenario configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Random seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on worker threads
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic weather/load history and a matching scenario config
    Synth {
        #[arg(long, default_value_t = reference::HISTORY_DAYS)]
        days: usize,
    },
    /// Fit hour-of-day PV and load models from CSV histories
    Ingest {
        #[arg(long)]
        weather: PathBuf,
        #[arg(long)]
        load: PathBuf,
        /// Discrete states per hour in each fitted model
        #[arg(long, default_value_t = reference::MODEL_STATES)]
        n_states: usize,
        #[arg(long, default_value_t = 2.5)]
        pv_capacity_kw: f64,
        #[arg(long, default_value_t = 0.8)]
        pv_derate: f64,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        utc_offset_h: i64,
        /// JSON array of 24 hourly forecasts (W/m²) to centre the PV model on;
        /// defaults to the per-hour mean forecast of the history
        #[arg(long)]
        reference_forecast: Option<PathBuf>,
    },
    /// Evaluate the configuration feasibility tiers
    Check,
    /// Solve the value table by backward induction
    Solve {
        #[arg(long)]
        n_states: Option<usize>,
        #[arg(long)]
        n_decisions: Option<usize>,
        /// Solve even when every feasibility tier fails
        #[arg(long)]
        force_infeasible: bool,
        #[arg(long, value_enum, default_value_t = SolveSpan::Full)]
        solve_span: SolveSpan,
    },
    /// Roll out one policy
    Simulate {
        #[arg(long, default_value = "optimal")]
        policy: String,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_LOOKAHEAD_H)]
        lookahead_h: f64,
        /// Value table for the optimal policy [default: <out>/value_table.json]
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Compare policies on common random numbers
    Compare {
        #[arg(long, value_delimiter = ',', default_value = "policy1,policy2,optimal")]
        policies: Vec<String>,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_LOOKAHEAD_H)]
        lookahead_h: f64,
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveSpan {
    /// Solve the first day and apply it periodically
    Day,
    /// Solve the whole horizon
    Full,
}

/// Exit statuses.
const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InfeasibleConfiguration { .. } | Error::EmptyAdmissibleSet { .. } => {
                    EXIT_INFEASIBLE
                }
                Error::InfeasibleTransition { .. }
                | Error::EmptyFeasibleSpace { .. }
                | Error::Rollout { .. }
                | Error::MonteCarlo { .. } => EXIT_INVARIANT,
                _ => EXIT_USAGE,
            };
        }
    }
    EXIT_USAGE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    match &cli.command {
        Command::Synth { days } => cmd_synth(&cli, *days),
        Command::Ingest {
            weather,
            load,
            n_states,
            pv_capacity_kw,
            pv_derate,
            utc_offset_h,
            reference_forecast,
        } => {
            let plant = PvPlant::new(*pv_capacity_kw, *pv_derate)?;
            cmd_ingest(
                &cli,
                weather,
                load,
                *n_states,
                plant,
                *utc_offset_h,
                reference_forecast.as_deref(),
            )
        }
        Command::Check => cmd_check(&cli),
        Command::Solve {
            n_states,
            n_decisions,
            force_infeasible,
            solve_span,
        } => cmd_solve(
            &cli,
            *n_states,
            *n_decisions,
            *force_infeasible,
            *solve_span,
        ),
        Command::Simulate {
            policy,
            n,
            lookahead_h,
            table,
        } => cmd_simulate(&cli, policy, *n, *lookahead_h, table.as_deref()),
        Command::Compare {
            policies,
            n,
            lookahead_h,
            table,
        } => cmd_compare(&cli, policies, *n, *lookahead_h, table.as_deref()),
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    let dir = cli
        .out
        .as_deref()
        .ok_or_else(|| anyhow!("this command needs --out <DIR>"))?;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    Ok(dir)
}

fn config_path(cli: &Cli) -> Result<&Path> {
    cli.config
        .as_deref()
        .ok_or_else(|| anyhow!("this command needs --config <FILE>"))
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

struct Loaded {
    config: ScenarioConfig,
    scenario: Scenario,
    manifest: RunManifest,
}

/// Reads the config and its model files, recording their hashes.
fn load(cli: &Cli, subcommand: &str) -> Result<Loaded> {
    let path = config_path(cli)?;
    let config = ScenarioConfig::read(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let scenario = config.load_scenario(base)?;
    let mut manifest = RunManifest::new(subcommand, cli.seed);
    manifest.config(path)?;
    manifest.input(&base.join(&config.models.pv))?;
    manifest.input(&base.join(&config.models.load))?;
    Ok(Loaded {
        config,
        scenario,
        manifest,
    })
}

fn cmd_synth(cli: &Cli, days: usize) -> Result<u8> {
    let out = out_dir(cli)?;
    let seed = cli.seed.unwrap_or(reference::SEED);
    let weather = nanogrid::synth::synth_weather(days, 0, 0, &Default::default(), seed);
    let load = nanogrid::synth::synth_load(
        days,
        0,
        0,
        &nanogrid::synth::RESIDENTIAL_PROFILE,
        seed.wrapping_add(1),
    );
    let mut buf = Vec::new();
    write_weather_csv(&mut buf, &weather)?;
    write_file(&out.join("weather.csv"), &buf)?;
    buf.clear();
    write_load_csv(&mut buf, &load)?;
    write_file(&out.join("load.csv"), &buf)?;
    write_file(
        &out.join("scenario.toml"),
        reference::config().to_toml_string().as_bytes(),
    )?;
    let mut manifest = RunManifest::new("synth", Some(seed));
    manifest.setting("days", days);
    manifest.write(out)?;
    println!(
        "wrote {days} days of synthetic history to {}",
        out.display()
    );
    Ok(0)
}

#[derive(Serialize)]
struct LoadFitSummary {
    records: usize,
    bucket_sizes: Vec<usize>,
}

#[derive(Serialize)]
struct IngestReport<'a> {
    pv: &'a PvModelFit,
    load: LoadFitSummary,
    reference_forecast_wm2: &'a [f64],
}

fn cmd_ingest(
    cli: &Cli,
    weather_path: &Path,
    load_path: &Path,
    n_states: usize,
    plant: PvPlant,
    utc_offset_h: i64,
    reference_forecast: Option<&Path>,
) -> Result<u8> {
    let out = out_dir(cli)?;
    let offset = utc_offset_h * SECONDS_PER_HOUR;
    let weather = read_weather_csv(weather_path)?;
    let load = read_load_csv(load_path)?;
    let mut manifest = RunManifest::new("ingest", None);
    manifest.input(weather_path)?;
    manifest.input(load_path)?;
    let reference = match reference_forecast {
        Some(p) => {
            manifest.input(p)?;
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read {}", p.display()))?;
            let v: Vec<f64> = serde_json::from_str(&text)
                .with_context(|| format!("{}: expected a JSON array", p.display()))?;
            if v.len() != HOURS_PER_DAY {
                bail!(
                    "{}: expected {HOURS_PER_DAY} hourly forecasts, got {}",
                    p.display(),
                    v.len()
                );
            }
            v
        }
        None => mean_forecast_by_hour(&weather, offset),
    };
    let pv = build_pv_model(&weather, &plant, n_states, &reference, offset)?;
    let load_model = fit_load_model(&load, n_states, offset)?;
    write_file(
        &out.join(PV_MODEL_FILE),
        model_to_json(&pv.model).as_bytes(),
    )?;
    write_file(
        &out.join(LOAD_MODEL_FILE),
        model_to_json(&load_model).as_bytes(),
    )?;
    let report = IngestReport {
        pv: &pv,
        load: LoadFitSummary {
            records: load.len(),
            bucket_sizes: load_bucket_sizes(&load, offset),
        },
        reference_forecast_wm2: &reference,
    };
    write_file(
        &out.join("ingest_report.json"),
        json_line(&report)?.as_bytes(),
    )?;
    manifest.setting("n_states", n_states);
    manifest.setting("pv_capacity_kw", plant.capacity_kw);
    manifest.setting("pv_derate", plant.derate);
    manifest.setting("utc_offset_h", utc_offset_h);
    manifest.write(out)?;
    println!(
        "weather: {} records ({} skipped, {} backfilled); load: {} records",
        pv.records,
        pv.skipped,
        pv.backfilled,
        load.len()
    );
    if !pv.fallback_hours.is_empty() {
        println!(
            "hours without forecast errors (forecast used as truth): {:?}",
            pv.fallback_hours
        );
    }
    Ok(0)
}

fn cmd_check(cli: &Cli) -> Result<u8> {
    let Loaded {
        scenario, manifest, ..
    } = load(cli, "check")?;
    let report = scenario.feasibility();
    let mark = |ok: bool| if ok { "PASS" } else { "FAIL" };
    println!(
        "bound: {:.6} kW{}",
        report.bound_kw,
        if report.symmetric_limits {
            ""
        } else {
            " (asymmetric limits)"
        }
    );
    println!(
        "tier (i)   horizon sum {:.6} kW: {}",
        report.horizon_sum_kw,
        mark(report.horizon_sum_passes)
    );
    println!(
        "tier (ii)  per-stage sum:  {}",
        mark(report.stage_sum_passes)
    );
    println!(
        "tier (iii) per-stage gap:  {}",
        mark(report.stage_gap_passes)
    );
    println!(
        "worst stage {} margin {:.6} kW",
        report.worst_stage, report.worst_margin_kw
    );
    match report.violating_stage {
        Some(k) => println!("verdict: INFEASIBLE-CONFIG (violating stage {k})"),
        None => println!(
            "verdict: {}",
            serde_json::to_value(report.verdict)?
                .as_str()
                .unwrap_or_default()
        ),
    }
    if let Some(out) = cli.out.as_deref() {
        std::fs::create_dir_all(out)?;
        write_file(
            &out.join("feasibility.json"),
            json_line(&report)?.as_bytes(),
        )?;
        manifest.write(out)?;
    }
    Ok(if report.passes() { 0 } else { EXIT_INFEASIBLE })
}

/// The scenario restricted to its first day.
fn first_day(scenario: &Scenario) -> Result<Scenario> {
    let g = &scenario.grid;
    let per_day = g
        .stages_per_day()
        .ok_or_else(|| anyhow!("--solve-span day needs a stage length that divides a day"))?;
    if !scenario.n_stages().is_multiple_of(per_day) {
        bail!(
            "--solve-span day needs a horizon of whole days, got {} stages",
            scenario.n_stages()
        );
    }
    let day = TimeGrid::new(
        g.start_epoch_s(),
        g.start_epoch_s() + 86_400,
        g.dt_seconds(),
    )?
    .with_utc_offset_hours(g.utc_offset_s() / SECONDS_PER_HOUR);
    Ok(scenario.with_grid(day))
}

fn cmd_solve(
    cli: &Cli,
    n_states: Option<usize>,
    n_decisions: Option<usize>,
    force_infeasible: bool,
    span: SolveSpan,
) -> Result<u8> {
    let out = out_dir(cli)?;
    let Loaded {
        config,
        scenario,
        mut manifest,
    } = load(cli, "solve")?;
    let settings = SolverSettings {
        n_states: n_states.unwrap_or(config.solver.n_states),
        n_decisions: n_decisions.unwrap_or(config.solver.n_decisions),
        force_infeasible,
    };
    let target = match span {
        SolveSpan::Full => scenario,
        SolveSpan::Day => first_day(&scenario)?,
    };
    let table = solve(&target, &settings)?;
    write_file(&out.join(VALUE_TABLE_FILE), table.to_json().as_bytes())?;
    manifest.setting("n_states", settings.n_states);
    manifest.setting("n_decisions", settings.n_decisions);
    manifest.setting("force_infeasible", force_infeasible);
    manifest.setting("solve_span", span_name(span));
    manifest.write(out)?;
    let v0 = table.value_at(0, target.initial_soc_kwh)?;
    println!(
        "solved {} stages; V0(s0 = {} kWh) = {v0:.6}",
        table.n_stages(),
        target.initial_soc_kwh
    );
    Ok(0)
}

fn span_name(span: SolveSpan) -> &'static str {
    match span {
        SolveSpan::Day => "day",
        SolveSpan::Full => "full",
    }
}

/// Reads the value table for the optimal policy, naming `nanogrid solve`
/// when it is missing.
fn load_table(cli: &Cli, table: Option<&Path>, manifest: &mut RunManifest) -> Result<ValueTable> {
    let path = match (table, cli.out.as_deref()) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(out)) => out.join(VALUE_TABLE_FILE),
        (None, None) => bail!("the optimal policy needs a value table; pass --table or --out"),
    };
    if !path.exists() {
        bail!(
            "value table {} not found; run `nanogrid solve --config <FILE> --out <DIR>` first",
            path.display()
        );
    }
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    manifest.input(&path)?;
    ValueTable::from_json(&text).with_context(|| format!("invalid value table {}", path.display()))
}

type Policies = Vec<Box<dyn Policy>>;

/// Instantiates the named policies; also reports the value table's solve
/// span when the optimal policy is among them.
fn build_policies(
    cli: &Cli,
    names: &[String],
    lookahead_h: f64,
    table: Option<&Path>,
    scenario: &Scenario,
    manifest: &mut RunManifest,
) -> Result<(Policies, Option<&'static str>)> {
    let mut out: Vec<Box<dyn Policy>> = Vec::new();
    let mut span = None;
    for name in names {
        match name.as_str() {
            "policy1" => out.push(Box::new(StorageFirstPolicy)),
            "policy2" => {
                if !(lookahead_h > 0.0) {
                    bail!("--lookahead-h must be positive");
                }
                out.push(Box::new(LookaheadPolicy::new(lookahead_h)))
            }
            "optimal" => {
                let t = load_table(cli, table, manifest)?;
                span = Some(if t.n_stages() < scenario.n_stages() {
                    "day"
                } else {
                    "full"
                });
                out.push(Box::new(NearOptimalPolicy::new(t, scenario)?));
            }
            other => bail!("unknown policy `{other}` (expected policy1, policy2 or optimal)"),
        }
    }
    Ok((out, span))
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    solve_span: Option<&'static str>,
    #[serde(flatten)]
    report: &'a nanogrid::CostReport,
}

fn cmd_simulate(
    cli: &Cli,
    policy: &str,
    n: usize,
    lookahead_h: f64,
    table: Option<&Path>,
) -> Result<u8> {
    let out = out_dir(cli)?;
    let Loaded {
        scenario,
        mut manifest,
        ..
    } = load(cli, "simulate")?;
    let seed = cli.seed.unwrap_or(0);
    manifest.seed = Some(seed);
    let (policies, span) = build_policies(
        cli,
        &[policy.to_string()],
        lookahead_h,
        table,
        &scenario,
        &mut manifest,
    )?;
    let p = policies[0].as_ref();
    let first = rollout(p, &scenario, rollout_seed(seed, 0))?;
    let mut buf = Vec::new();
    first.write_csv(&mut buf)?;
    write_file(&out.join("trajectory.csv"), &buf)?;
    let report = monte_carlo(p, &scenario, n, seed)?;
    write_file(
        &out.join("report.json"),
        json_line(&SimulateReport {
            solve_span: span,
            report: &report,
        })?
        .as_bytes(),
    )?;
    manifest.setting("policy", policy);
    manifest.setting("n", n);
    manifest.setting("lookahead_h", lookahead_h);
    manifest.write(out)?;
    info!("simulated {n} rollouts of {policy}");
    println!(
        "{}: mean J1 {:.6} ± {:.6} (n = {n}), mean terminal SOC {:.4} kWh, violations {}",
        report.policy, report.mean_j1, report.ci95, report.mean_terminal_soc, report.violations
    );
    Ok(0)
}

#[derive(Serialize)]
struct CompareReport<'a> {
    solve_span: Option<&'static str>,
    #[serde(flatten)]
    comparison: &'a Comparison,
}

fn cmd_compare(
    cli: &Cli,
    names: &[String],
    n: usize,
    lookahead_h: f64,
    table: Option<&Path>,
) -> Result<u8> {
    let out = out_dir(cli)?;
    let Loaded {
        scenario,
        mut manifest,
        ..
    } = load(cli, "compare")?;
    let seed = cli.seed.unwrap_or(0);
    manifest.seed = Some(seed);
    let (policies, span) =
        build_policies(cli, names, lookahead_h, table, &scenario, &mut manifest)?;
    let refs: Vec<&dyn Policy> = policies.iter().map(|p| p.as_ref()).collect();
    let comparison = compare_policies(&refs, &scenario, n, seed)?;
    write_file(
        &out.join("comparison.json"),
        json_line(&CompareReport {
            solve_span: span,
            comparison: &comparison,
        })?
        .as_bytes(),
    )?;
    let mut buf = Vec::new();
    comparison.write_summary_csv(&mut buf)?;
    write_file(&out.join("summary.csv"), &buf)?;
    buf.clear();
    comparison.write_cost_to_go_csv(&mut buf)?;
    write_file(&out.join("cost_to_go.csv"), &buf)?;
    manifest.setting("policies", names.join(","));
    manifest.setting("n", n);
    manifest.setting("lookahead_h", lookahead_h);
    manifest.write(out)?;
    println!(
        "{:<10} {:>12} {:>10} {:>12} {:>10}",
        "policy", "mean_j1", "ci95", "terminal_soc", "violations"
    );
    for r in &comparison.reports {
        println!(
            "{:<10} {:>12.6} {:>10.6} {:>12.4} {:>10}",
            r.policy, r.mean_j1, r.ci95, r.mean_terminal_soc, r.violations
        );
    }
    Ok(0)
}
