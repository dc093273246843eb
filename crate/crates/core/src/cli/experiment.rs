//! Training runs driven by an [`ExperimentConfig`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::circuit::{self, Circuit};
use crate::error::Result;
use crate::optim::{self, TrainReport};

use super::config::ExperimentConfig;
use super::statefile::write_state;

#[derive(Clone, Debug, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub final_loss: f64,
    pub fidelity: f64,
    pub normalized_fidelity: f64,
    pub wall_seconds: f64,
    pub clamp_count: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub out_dir: PathBuf,
    pub seeds: Vec<SeedSummary>,
    /// Some seed reached the fidelity floor (always true without a floor).
    pub success: bool,
}

impl ExperimentOutcome {
    pub fn best_fidelity(&self) -> f64 {
        self.seeds.iter().map(|s| s.fidelity).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the config's output directory.
    pub out_dir: Option<PathBuf>,
    /// Run only this seed instead of the config's list.
    pub seed: Option<u64>,
    /// Report operation counts of one forward pass.
    pub instrument: bool,
    /// Stop after the first seed that reaches the fidelity floor.
    pub stop_at_first_success: bool,
    /// Progress lines on stderr.
    pub verbose: bool,
}

pub fn loss_csv(trace: &[f64]) -> String {
    let mut s = String::from("step,loss\n");
    for (i, l) in trace.iter().enumerate() {
        writeln!(s, "{i},{l:.16e}").unwrap();
    }
    s
}

pub fn summary_csv(rows: &[SeedSummary]) -> String {
    let mut s = String::from("seed,final_loss,fidelity,normalized_fidelity,wall_seconds\n");
    for r in rows {
        writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.6}",
            r.seed, r.final_loss, r.fidelity, r.normalized_fidelity, r.wall_seconds
        )
        .unwrap();
    }
    s
}

/// Flat parameter vector with labels, one coordinate per line.
pub fn format_params(c: &Circuit) -> String {
    let order = match c.order {
        circuit::LayerOrder::GaussianThenKerr => "gaussian-then-kerr",
        circuit::LayerOrder::KerrThenGaussian => "kerr-then-gaussian",
    };
    let mut s = format!(
        "fock-params v1 modes={} cutoff={} layers={} order={order}\n",
        c.modes,
        c.cutoff,
        c.num_layers()
    );
    for (i, (p, v)) in c.param_layout().into_iter().zip(c.params()).enumerate() {
        writeln!(s, "{i} {} {:.16e} {:.16e}", p.label(), v.re, v.im).unwrap();
    }
    s
}

fn default_out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .clone()
        .unwrap_or_else(|| Path::new("runs").join(&cfg.task))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let ts = cfg.training_set()?;
    let mut c = Circuit::identity(cfg.modes, cfg.cutoff, cfg.layers)?;
    c.order = cfg.layer_order;
    let out_dir = opts.out_dir.clone().unwrap_or_else(|| default_out_dir(cfg));
    fs::create_dir_all(&out_dir)?;
    if !cfg.source.is_empty() {
        fs::write(out_dir.join("config.toml"), &cfg.source)?;
    }

    let seeds: Vec<u64> = match opts.seed {
        Some(s) => vec![s],
        None => cfg.seeds.clone(),
    };
    let floor = cfg.fidelity_floor;
    let mut rows = Vec::new();
    let mut success = floor.is_none();
    for seed in seeds {
        let ocfg = cfg.optimizer_config(seed);
        if opts.verbose {
            eprintln!("[{}] seed {seed}: training {} steps", cfg.task, ocfg.steps);
        }
        let report: TrainReport = optim::train(&c, &ts, &ocfg)?;
        if opts.instrument {
            let (_, trace) = circuit::forward(&report.circuit, &ts.pairs()[0].0)?;
            let total: u64 = trace.layers.iter().map(|l| l.r.counter().elements_computed).sum();
            let fmas: u64 = trace.layers.iter().map(|l| l.r.counter().scalar_fmas).sum();
            eprintln!(
                "[{}] seed {seed}: one forward pass computes {total} workspace elements, {fmas} multiply-adds",
                cfg.task
            );
        }
        fs::write(
            out_dir.join(format!("loss_seed{seed}.csv")),
            loss_csv(&report.loss_trace),
        )?;
        fs::write(
            out_dir.join(format!("params_seed{seed}.txt")),
            format_params(&report.circuit),
        )?;
        let out_state = circuit::apply(&report.circuit, &ts.pairs()[0].0)?;
        write_state(&out_dir.join(format!("final_state_seed{seed}.state")), &out_state)?;

        let row = SeedSummary {
            seed,
            final_loss: report.final_loss,
            fidelity: report.mean_fidelity(),
            normalized_fidelity: report.mean_normalized_fidelity(),
            wall_seconds: report.wall_seconds,
            clamp_count: report.clamp_count,
        };
        if opts.verbose {
            eprintln!(
                "[{}] seed {seed}: loss {:.6e} fidelity {:.6} (normalized {:.6}) in {:.1} s, {} squeezing clamps",
                cfg.task, row.final_loss, row.fidelity, row.normalized_fidelity, row.wall_seconds, row.clamp_count
            );
        }
        let hit = floor.is_some_and(|f| row.fidelity >= f);
        success |= hit;
        rows.push(row);
        fs::write(out_dir.join("summary.csv"), summary_csv(&rows))?;
        if hit && opts.stop_at_first_success {
            break;
        }
    }
    Ok(ExperimentOutcome {
        out_dir,
        seeds: rows,
        success,
    })
}
