use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("empty dataset: {0}")]
    EmptyDataset(String),

    #[error("no records for hour-of-day {hour}")]
    MissingHour { hour: usize },

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("rms accuracy undefined: reference series has zero rms")]
    UndefinedAccuracy,

    #[error(
        "infeasible transition: s={s} kWh, v={v} kW gives s'={next} kWh outside [0, {capacity}]"
    )]
    InfeasibleTransition {
        s: f64,
        v: f64,
        next: f64,
        capacity: f64,
    },

    #[error("empty feasible decision space at s={s} kWh, e={e} kW, l={l} kW: [{lo}, {hi}]")]
    EmptyFeasibleSpace {
        s: f64,
        e: f64,
        l: f64,
        lo: f64,
        hi: f64,
    },

    #[error(
        "empty determinable feasible decision space at stage {stage}, state {state_kwh} kWh; \
         run the configuration feasibility check (`nanogrid check`)"
    )]
    EmptyAdmissibleSet { stage: usize, state_kwh: f64 },

    #[error("configuration fails every sufficiency tier (first violating stage {stage})")]
    InfeasibleConfiguration { stage: usize },

    #[error("brute-force oracle too large: {paths} paths exceeds limit {limit}")]
    OracleTooLarge { paths: f64, limit: f64 },

    #[error("rollout failed for policy `{policy}` at stage {stage}: {reason}; state: {dump}")]
    Rollout {
        policy: String,
        stage: usize,
        reason: String,
        dump: String,
    },

    #[error("monte carlo rollout {index} (seed {seed}) failed: {source}")]
    MonteCarlo {
        index: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
