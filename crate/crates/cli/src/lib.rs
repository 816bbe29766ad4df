//! Command line front end.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success / converged |
//! | 1 | usage, parse or input error |
//! | 2 | inference stopped without converging |
//! | 3 | contradiction (a belief lost all its mass) |
//! | 4 | exact schedule refused; rerun with `--loopy` |
//! | 5 | verification suite reported a failure |

pub mod verify;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bpmf_core::factor_graph::spec::load_graph;
use bpmf_core::factor_graph::check_algorithm1_applicable;
use bpmf_core::message_passing::{EmConstraintSet, UpdateConfig, VarBelief};
use bpmf_core::scheduler::{run_algorithm1, run_loopy, LoopySchedule, RunOptions, StopRule, Termination};
use bpmf_core::Error;
use bpmf_ofdm::{OfdmScenario, ReceiverKind, SweepConfig};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CONTRADICTION: u8 = 3;
pub const EXIT_REFUSED: u8 = 4;
pub const EXIT_VERIFY_FAILED: u8 = 5;

/// Desk-scale scenario bundled into the binary.
pub const DESK_SCENARIO: &str = include_str!("../../../scenarios/desk.json");

#[derive(Debug, Parser)]
#[command(name = "bpmf", version, about = "Combined BP / mean-field message passing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run inference on a JSON factor graph.
    Infer(InferArgs),
    /// Monte-Carlo BER sweep of the OFDM receivers.
    OfdmBer(OfdmArgs),
    /// Run the oracle-backed verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct StopArgs {
    /// Maximum outer iterations.
    #[arg(long)]
    pub max_outer: Option<usize>,
    /// Stop when no belief changes by more than this.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Stop when the relative free-energy change is below this (0 disables).
    #[arg(long)]
    pub rel_tol: Option<f64>,
}

impl StopArgs {
    fn apply(&self, mut stop: StopRule) -> StopRule {
        if let Some(m) = self.max_outer {
            stop.max_outer = m;
        }
        if let Some(t) = self.tol {
            stop.message_delta_tol = t;
        }
        if let Some(r) = self.rel_tol {
            stop.rel_free_energy_tol = (r > 0.0).then_some(r);
        }
        stop
    }
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Graph description (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for beliefs.json and trace.csv (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use the loopy schedule when the exact one is not applicable.
    #[arg(long)]
    pub loopy: bool,
    /// Damping of loopy sweeps.
    #[arg(long, default_value_t = 0.3)]
    pub damping: f64,
    /// Accepted for interface uniformity; inference is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub stop: StopArgs,
}

#[derive(Debug, Args)]
pub struct OfdmArgs {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed (defaults to the scenario seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated receivers: bp-mf, bp-gauss, perfect-csi.
    #[arg(long, value_delimiter = ',', default_value = "bp-mf,bp-gauss,perfect-csi")]
    pub receivers: Vec<String>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Trials per SNR point (defaults to the scenario's bit budget).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated Eb/N0 grid in dB (defaults to the scenario grid).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub snr: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed of the random instances.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Report path (stdout if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// OFDM scenario for the BER checks (the bundled desk scenario if absent).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Worker threads for the BER sweep.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Skip the BER sweep.
    #[arg(long)]
    pub quick: bool,
}

/// Error with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Contradiction(_) => EXIT_CONTRADICTION,
            Error::NotApplicable(_) => EXIT_REFUSED,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<bpmf_ofdm::OfdmError> for Failure {
    fn from(e: bpmf_ofdm::OfdmError) -> Self {
        match e {
            bpmf_ofdm::OfdmError::Core(c) => c.into(),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

#[derive(Serialize)]
#[serde(untagged)]
enum BeliefOut {
    Discrete { name: String, probs: Vec<f64> },
    Gaussian { name: String, mean: Vec<[f64; 2]>, variance: Vec<f64> },
}

#[derive(Serialize)]
struct InferOut {
    schedule: &'static str,
    termination: String,
    iterations: usize,
    free_energy: Option<f64>,
    beliefs: Vec<BeliefOut>,
}

/// `infer`: exact schedule when applicable, loopy on request.
pub fn cmd_infer(args: &InferArgs) -> Result<u8, Failure> {
    let text = read(&args.config)?;
    let loaded = load_graph(&text).map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let (graph, partition) = (&loaded.graph, &loaded.partition);
    let em = EmConstraintSet::new(loaded.em.clone());
    let app = check_algorithm1_applicable(graph, partition);
    let exact = app.is_applicable();
    if !exact && !args.loopy {
        return Err(Failure {
            code: EXIT_REFUSED,
            message: format!("exact schedule refused: {}", app.describe(graph)),
        });
    }
    let mut cfg = UpdateConfig {
        em,
        ..UpdateConfig::default()
    };
    if !exact {
        cfg.damping = args.damping;
    }
    let stop = args.stop.apply(StopRule::default());
    let opts = RunOptions::default();
    let res = if exact {
        run_algorithm1(graph, partition, &cfg, &stop, &opts)?
    } else {
        run_loopy(graph, partition, &cfg, &stop, &LoopySchedule::default(), &opts)?
    };
    let beliefs = graph
        .vars()
        .map(|i| {
            let name = graph.variable(i).name.clone();
            match &res.state.vars[i.0] {
                VarBelief::Discrete(p) => BeliefOut::Discrete { name, probs: p.clone() },
                VarBelief::Gaussian(g) => BeliefOut::Gaussian {
                    name,
                    mean: g.mean().iter().map(|c| [c.re, c.im]).collect(),
                    variance: g.marginal_variances(),
                },
            }
        })
        .collect();
    let termination = match res.termination {
        Termination::Converged => "converged".to_string(),
        Termination::MaxIterations => "max_iterations".to_string(),
        Termination::Diverged { sweep } => format!("diverged at sweep {sweep}"),
    };
    let out = InferOut {
        schedule: if exact { "exact" } else { "loopy" },
        termination,
        iterations: res.iterations,
        free_energy: res.trace.records.last().and_then(|r| r.free_energy).and_then(|f| f.finite()),
        beliefs,
    };
    let json = serde_json::to_string_pretty(&out).map_err(|e| Failure::usage(e.to_string()))? + "\n";
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
            write(&dir.join("beliefs.json"), &json)?;
            write(&dir.join("trace.csv"), &res.trace.to_csv())?;
        }
        None => print!("{json}"),
    }
    Ok(if res.converged() { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

/// `ofdm-ber`: BER sweep to CSV.
pub fn cmd_ofdm_ber(args: &OfdmArgs) -> Result<u8, Failure> {
    let text = read(&args.config)?;
    let sc = OfdmScenario::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let mut cfg = SweepConfig::from_scenario(&sc);
    cfg.receivers = args
        .receivers
        .iter()
        .map(|r| r.trim().parse::<ReceiverKind>())
        .collect::<Result<_, _>>()?;
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.trials {
        cfg.trials = t;
    }
    if let Some(snr) = &args.snr {
        cfg.ebn0_db = snr.clone();
    }
    if args.jobs == 0 {
        return Err(Failure::usage("--jobs must be positive"));
    }
    cfg.jobs = args.jobs;
    let points = bpmf_ofdm::run_sweep(&sc, &cfg)?;
    let csv = bpmf_ofdm::sweep::to_csv(&points);
    match &args.out {
        Some(p) => write(p, &csv)?,
        None => print!("{csv}"),
    }
    Ok(EXIT_OK)
}

/// `verify`: structural checks, then the BER checks unless `--quick`.
pub fn cmd_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let suite = verify::Suite::new(args.seed);
    let mut outcomes = Vec::new();
    for o in verify::run_structural(&suite) {
        eprintln!("{} ({:.2?})", o.line(), o.elapsed);
        outcomes.push(o);
    }
    if !args.quick {
        let text = match &args.config {
            Some(p) => read(p)?,
            None => DESK_SCENARIO.to_string(),
        };
        let sc = OfdmScenario::from_json(&text)?;
        let cfg = SweepConfig {
            jobs: args.jobs.max(1),
            ..SweepConfig::from_scenario(&sc)
        };
        let start = Instant::now();
        let points = bpmf_ofdm::run_sweep(&sc, &cfg)?;
        eprintln!("BER sweep: {} trials per point ({:.2?})", cfg.trials, start.elapsed());
        outcomes.extend(verify::ber_checks(&points));
    }
    let text = verify::report(&outcomes);
    match &args.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    Ok(if outcomes.iter().all(|o| o.passed()) { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

/// Parses arguments, dispatches and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Infer(a) => cmd_infer(a),
        Command::OfdmBer(a) => cmd_ofdm_ber(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
