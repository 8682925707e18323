//! Command-line definitions and the `check` and `run` reports.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use weakstore_core::executor::{execute, ExecError, Program, StoreConfig};
use weakstore_core::isolation::{satisfies, Violation};
use weakstore_core::testkit::observable;
use weakstore_core::{History, LevelKind, TxnId, Value};

use crate::api::ServerSettings;

#[derive(Debug, Parser)]
#[command(name = "weakstore", version, about = "A mock key-value store with weak isolation levels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the store over HTTP.
    Serve(ServeArgs),
    /// Check a history file against an isolation level.
    Check(CheckArgs),
    /// Run a program file repeatedly and report assertion failures.
    Run(RunArgs),
}

fn parse_value(s: &str) -> Result<Value, String> {
    serde_json::from_str(s).map_err(|e| format!("not a JSON value: {e}"))
}

/// Store options shared by `serve` and `run`.
#[derive(Debug, Clone, Args)]
pub struct StoreArgs {
    #[arg(long, env = "WEAKSTORE_ISOLATION", default_value = "causal")]
    pub isolation: LevelKind,
    /// Only offer each session's latest valid write to a read.
    #[arg(long, env = "WEAKSTORE_LATEST_READS")]
    pub latest_reads: bool,
    /// Upper bound of the random delay before each begin, in milliseconds.
    #[arg(long, env = "WEAKSTORE_DELAY_MS", default_value_t = 0)]
    pub delay_ms: u64,
    #[arg(long, env = "WEAKSTORE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Initial value of every key, as JSON.
    #[arg(long, env = "WEAKSTORE_DEFAULT_VALUE", default_value = "0", value_parser = parse_value)]
    pub default_value: Value,
}

impl StoreArgs {
    pub fn config(&self) -> StoreConfig {
        StoreConfig::new(self.isolation)
            .with_seed(self.seed)
            .with_latest_per_session(self.latest_reads)
            .with_delay_ms(self.delay_ms)
            .with_default(self.default_value.clone())
    }
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, env = "WEAKSTORE_BIND", default_value = "127.0.0.1:7878")]
    pub bind: String,
    /// How long a begin waits for the global lock before failing with 409.
    #[arg(long, env = "WEAKSTORE_BEGIN_TIMEOUT_MS", default_value_t = 10_000)]
    pub begin_timeout_ms: u64,
    /// Close sessions idle this long, committing their live transaction;
    /// 0 disables expiry.
    #[arg(long, env = "WEAKSTORE_IDLE_TIMEOUT_MS", default_value_t = 60_000)]
    pub idle_timeout_ms: u64,
    /// Write the final history here on shutdown.
    #[arg(long, env = "WEAKSTORE_DUMP_HISTORY")]
    pub dump_history: Option<PathBuf>,
}

impl ServeArgs {
    pub fn settings(&self) -> ServerSettings {
        ServerSettings {
            begin_timeout: Duration::from_millis(self.begin_timeout_ms),
            idle_timeout: (self.idle_timeout_ms > 0).then(|| Duration::from_millis(self.idle_timeout_ms)),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    pub history: PathBuf,
    #[arg(long, env = "WEAKSTORE_ISOLATION")]
    pub isolation: LevelKind,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub program: PathBuf,
    #[command(flatten)]
    pub store: StoreArgs,
    #[arg(long, short = 'n', default_value_t = 1)]
    pub iterations: u64,
    /// Write each iteration's history to this directory.
    #[arg(long)]
    pub histories: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub isolation: LevelKind,
    pub satisfied: bool,
    /// A commit order witnessing satisfaction.
    pub witness: Option<Vec<TxnId>>,
    pub violation: Option<Violation>,
}

pub fn check_history(h: &History, level: LevelKind) -> CheckReport {
    let v = satisfies(h, &level.level());
    CheckReport {
        isolation: level,
        satisfied: v.satisfied,
        witness: v.witness.map(|co| co.0),
        violation: v.violation,
    }
}

/// Exit status for `check`: 0 satisfied, 1 violated, 2 unreadable input.
pub fn check_file(path: &Path, level: LevelKind) -> (i32, serde_json::Value) {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return (2, serde_json::json!({ "error": "io", "message": e.to_string() })),
    };
    match History::from_json(&text) {
        Ok(h) => {
            let report = check_history(&h, level);
            let code = if report.satisfied { 0 } else { 1 };
            (code, serde_json::to_value(report).expect("reports serialize"))
        }
        Err(e) => (2, serde_json::json!({ "error": "schema", "message": e.to_string() })),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationOutcome {
    pub iteration: u64,
    pub seed: u64,
    /// Names of the assertions this run violated.
    pub failed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub isolation: LevelKind,
    pub iterations: u64,
    pub first_seed: u64,
    pub failures: u64,
    /// 1-based iteration of the first assertion failure.
    pub first_failure: Option<u64>,
    /// Distinct vectors of values returned by external reads.
    pub distinct_states: usize,
    pub outcomes: Vec<IterationOutcome>,
}

/// Runs `p` with seeds `cfg.seed ..= cfg.seed + iterations - 1`, calling
/// `emit` with each iteration's history.
pub fn run_iterations(
    p: &Program,
    level: LevelKind,
    cfg: &StoreConfig,
    iterations: u64,
    mut emit: impl FnMut(u64, &History),
) -> Result<RunReport, ExecError> {
    let mut outcomes = Vec::new();
    let mut states = BTreeSet::new();
    for i in 0..iterations {
        let seed = cfg.seed.wrapping_add(i);
        let e = execute(p, &cfg.clone().with_seed(seed))?;
        states.insert(observable(&e.history));
        emit(i + 1, &e.history);
        outcomes.push(IterationOutcome {
            iteration: i + 1,
            seed,
            failed: p.failed_assertions(&e.session_vars),
        });
    }
    Ok(RunReport {
        isolation: level,
        iterations,
        first_seed: cfg.seed,
        failures: outcomes.iter().filter(|o| !o.failed.is_empty()).count() as u64,
        first_failure: outcomes.iter().find(|o| !o.failed.is_empty()).map(|o| o.iteration),
        distinct_states: states.len(),
        outcomes,
    })
}
