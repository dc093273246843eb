//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when training finished but no seed reached
//! the fidelity floor, 2 for configuration or input errors, 3 for numerical
//! aborts.

pub mod bench;
pub mod config;
pub mod experiment;
pub mod gate;
pub mod statefile;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::evolve::{self, apply_kerr, evolve_single_large_r};
use crate::params::compute_cmusigma;

pub use bench::{bench_forward, sweep_large_r, BenchRow, SweepRow};
pub use config::{gen_target, ExperimentConfig, StateSpec};
pub use experiment::{run_experiment, ExperimentOutcome, RunOptions, SeedSummary};
pub use statefile::{format_state, parse_state, read_state, write_state};

/// Caps the number of worker threads when set.
pub const THREADS_ENV: &str = "FOCKFLOW_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "fockflow",
    version,
    about = "Fock-basis evolution and training of Gaussian + Kerr circuits"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Experiment config (TOML) for `train` and `gen-target`.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// RNG seed; for `train`, run only this seed.
    #[arg(long, global = true, value_name = "K")]
    pub seed: Option<u64>,
    /// Output directory. Commands that produce one file print to stdout without it.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report operation counts.
    #[arg(long, global = true)]
    pub instrument: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply one Gaussian gate (and optional Kerr gates) to a state.
    Evolve {
        /// Gate file (TOML).
        #[arg(long, value_name = "PATH")]
        gate: PathBuf,
        /// Input state: vacuum, fock:N[,M], noon:N or file:PATH.
        #[arg(long, default_value = "vacuum")]
        input: String,
        #[arg(long, default_value_t = 1)]
        modes: usize,
        /// Cutoff; taken from the file for file inputs.
        #[arg(long, default_value_t = 20)]
        cutoff: usize,
        /// Use the large-squeezing approximation (one mode).
        #[arg(long)]
        large_r: bool,
    },
    /// Train a circuit as described by --config.
    Train {
        /// Stop after the first seed that reaches the fidelity floor.
        #[arg(long)]
        stop_at_first_success: bool,
    },
    /// Time direct evolution against the full transformation tensor.
    BenchForward {
        #[arg(long, default_value_t = 2)]
        modes: usize,
        #[arg(long, value_delimiter = ',', default_value = "4,6,8,10")]
        cutoffs: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        reps: usize,
    },
    /// Overlap error of the large-squeezing approximation.
    SweepLargeR {
        #[arg(long, value_delimiter = ',', default_value = "1,1.5,2,2.5,3")]
        r_grid: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 50)]
        cutoff: usize,
    },
    /// Write a target state; with --config, the config's target.
    GenTarget {
        /// vacuum, fock:N[,M], noon:N or file:PATH.
        #[arg(long)]
        spec: Option<String>,
        #[arg(long, default_value_t = 1)]
        modes: usize,
        #[arg(long, default_value_t = 10)]
        cutoff: usize,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite(_)
        | Error::KlDivergent { .. }
        | Error::NonFiniteGradient { .. }
        | Error::NonFiniteLoss { .. }
        | Error::ImaginaryResidue { .. } => 3,
        _ => 2,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Write `text` to `out/name`, or to stdout without an output directory.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn input_state(spec: &str, modes: usize, cutoff: usize) -> Result<crate::FockState> {
    match StateSpec::parse_compact(spec)? {
        StateSpec::File { path } => read_state(&path),
        s => gen_target(&s, modes, cutoff, Path::new(".")),
    }
}

pub fn run(cli: Cli) -> Result<i32> {
    configure_threads()?;
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Evolve {
            gate,
            input,
            modes,
            cutoff,
            large_r,
        } => {
            let psi = input_state(&input, modes, cutoff)?;
            let text =
                fs::read_to_string(&gate).map_err(|e| Error::Config(format!("cannot read {}: {e}", gate.display())))?;
            let (p, kappa) = gate::GateSpec::from_toml(&text)?.build(psi.modes())?;
            let mid = if large_r {
                evolve_single_large_r(&p, &psi)?
            } else {
                let (mid, r) = evolve::evolve(&compute_cmusigma(&p)?, &psi)?;
                if g.instrument {
                    let c = r.counter();
                    eprintln!(
                        "elements_computed={} scalar_fmas={}",
                        c.elements_computed, c.scalar_fmas
                    );
                }
                mid
            };
            let res = apply_kerr(&kappa, &mid)?;
            emit(out, "evolved.state", &format_state(&res))?;
            Ok(0)
        }
        Command::Train { stop_at_first_success } => {
            let path = g
                .config
                .as_ref()
                .ok_or_else(|| Error::Config("train needs --config PATH".into()))?;
            let cfg = ExperimentConfig::load(path)?;
            let opts = RunOptions {
                out_dir: g.out.clone(),
                seed: g.seed,
                instrument: g.instrument,
                stop_at_first_success,
                verbose: true,
            };
            let res = run_experiment(&cfg, &opts)?;
            print!("{}", experiment::summary_csv(&res.seeds));
            eprintln!("results in {}", res.out_dir.display());
            Ok(if res.success { 0 } else { 1 })
        }
        Command::BenchForward { modes, cutoffs, reps } => {
            let rows = bench_forward(modes, &cutoffs, reps, g.seed.unwrap_or(0))?;
            emit(out, "bench_forward.csv", &bench::bench_csv(&rows))?;
            Ok(0)
        }
        Command::SweepLargeR { r_grid, trials, cutoff } => {
            let rows = sweep_large_r(&r_grid, trials, cutoff, g.seed.unwrap_or(0))?;
            emit(out, "sweep_large_r.csv", &bench::sweep_csv(&rows))?;
            Ok(0)
        }
        Command::GenTarget { spec, modes, cutoff } => {
            let psi = match (&g.config, spec) {
                (_, Some(s)) => gen_target(&StateSpec::parse_compact(&s)?, modes, cutoff, Path::new("."))?,
                (Some(path), None) => {
                    let cfg = ExperimentConfig::load(path)?;
                    let ts = cfg.training_set()?;
                    ts.pairs()[0].1.clone()
                }
                (None, None) => return Err(Error::Config("gen-target needs --spec or --config".into())),
            };
            emit(out, "target.state", &format_state(&psi))?;
            Ok(0)
        }
    }
}

/// Parse arguments, run, and map errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
