//! Gradient descent on circuit parameters.
//!
//! Complex parameters follow `xi <- xi - lr * dL/dxi*`, real ones the usual
//! `xi <- xi - lr * dL/dxi`. The adaptive variant keeps separate moment
//! estimates for the real and imaginary part of every coordinate.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, Circuit, CircuitParam, TrainingSet};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    PlainSgd,
    #[default]
    AdaptiveMoments,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub steps: usize,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
    /// Half-width of the uniform initialization interval.
    pub init_scale: f64,
    /// Weight of the KL regularizer.
    pub kl_weight: f64,
    /// Stop once the loss is at or below this value.
    pub loss_floor: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            algorithm: Algorithm::AdaptiveMoments,
            learning_rate: 0.01,
            steps: 1000,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_hat: 1e-8,
            init_scale: 0.05,
            kl_weight: 0.0,
            loss_floor: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.steps == 0 {
            return bad("steps must be at least 1");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("beta1 and beta2 must lie in [0, 1)");
        }
        if self.epsilon_hat.is_nan() || self.epsilon_hat <= 0.0 {
            return bad("epsilon_hat must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be non-negative");
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return bad("kl_weight must be non-negative");
        }
        Ok(())
    }
}

/// How a coordinate is updated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub complex: bool,
    /// Clamped to `>= 0` after every step.
    pub nonnegative: bool,
}

impl From<CircuitParam> for ParamSpec {
    fn from(p: CircuitParam) -> Self {
        ParamSpec {
            complex: p.is_complex(),
            nonnegative: p.is_squeezing(),
        }
    }
}

pub fn param_specs(c: &Circuit) -> Vec<ParamSpec> {
    c.param_layout().into_iter().map(ParamSpec::from).collect()
}

fn check_grads(params: &[C64], grads: &[C64], specs: &[ParamSpec]) -> Result<()> {
    if grads.len() != params.len() || specs.len() != params.len() {
        return Err(Error::shape(params.len(), grads.len()));
    }
    for (index, g) in grads.iter().enumerate() {
        if !(g.re.is_finite() && g.im.is_finite()) {
            return Err(Error::NonFiniteGradient { index });
        }
    }
    Ok(())
}

/// Returns the number of coordinates that had to be clamped.
fn finish(params: &mut [C64], specs: &[ParamSpec]) -> usize {
    let mut clamps = 0;
    for (p, s) in params.iter_mut().zip(specs) {
        if !s.complex {
            p.im = 0.0;
        }
        if s.nonnegative && p.re < 0.0 {
            p.re = 0.0;
            clamps += 1;
        }
    }
    clamps
}

/// One plain gradient step. Returns the number of clamped coordinates.
pub fn sgd_step(params: &mut [C64], grads: &[C64], specs: &[ParamSpec], lr: f64) -> Result<usize> {
    check_grads(params, grads, specs)?;
    for ((p, g), s) in params.iter_mut().zip(grads).zip(specs) {
        if s.complex {
            *p -= lr * g;
        } else {
            p.re -= lr * g.re;
        }
    }
    Ok(finish(params, specs))
}

/// First and second moments, stored per component in the real and
/// imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub t: u64,
    pub m: Vec<C64>,
    pub v: Vec<C64>,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            t: 0,
            m: vec![C64::new(0.0, 0.0); len],
            v: vec![C64::new(0.0, 0.0); len],
        }
    }
}

/// One adaptive-moment step. Returns the number of clamped coordinates.
pub fn adam_step(
    params: &mut [C64],
    grads: &[C64],
    specs: &[ParamSpec],
    state: &mut AdamState,
    cfg: &OptimizerConfig,
) -> Result<usize> {
    check_grads(params, grads, specs)?;
    if state.m.len() != params.len() {
        return Err(Error::shape(params.len(), state.m.len()));
    }
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let upd = |m: &mut f64, v: &mut f64, g: f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        cfg.learning_rate * (*m / c1) / ((*v / c2).sqrt() + cfg.epsilon_hat)
    };
    for i in 0..params.len() {
        let (m, v, g) = (&mut state.m[i], &mut state.v[i], grads[i]);
        params[i].re -= upd(&mut m.re, &mut v.re, g.re);
        if specs[i].complex {
            params[i].im -= upd(&mut m.im, &mut v.im, g.im);
        }
    }
    Ok(finish(params, specs))
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    /// Loss before each update.
    pub loss_trace: Vec<f64>,
    /// Loss at the returned parameters.
    pub final_loss: f64,
    pub fidelity: Vec<f64>,
    pub normalized_fidelity: Vec<f64>,
    pub wall_seconds: f64,
    pub params: Vec<C64>,
    pub circuit: Circuit,
    /// How many times a squeezing magnitude was clamped at zero.
    pub clamp_count: usize,
}

impl TrainReport {
    /// Mean fidelity over the training pairs.
    pub fn mean_fidelity(&self) -> f64 {
        self.fidelity.iter().sum::<f64>() / self.fidelity.len() as f64
    }

    pub fn mean_normalized_fidelity(&self) -> f64 {
        self.normalized_fidelity.iter().sum::<f64>() / self.normalized_fidelity.len() as f64
    }
}

/// Seeded uniform draw in `[-s, s]` for every component; squeezing
/// magnitudes take the absolute value.
pub fn initial_params(c: &Circuit, scale: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || {
        if scale > 0.0 {
            rng.gen_range(-scale..=scale)
        } else {
            0.0
        }
    };
    c.param_layout()
        .into_iter()
        .map(|p| {
            if p.is_complex() {
                let re = u();
                C64::new(re, u())
            } else if p.is_squeezing() {
                C64::new(u().abs(), 0.0)
            } else {
                C64::new(u(), 0.0)
            }
        })
        .collect()
}

/// Initialize `c` from the seed and train it.
pub fn train(c: &Circuit, ts: &TrainingSet, cfg: &OptimizerConfig) -> Result<TrainReport> {
    let mut c = c.clone();
    c.set_params(&initial_params(&c, cfg.init_scale, cfg.seed))?;
    train_from(c, ts, cfg)
}

/// Train starting from the current parameters of `c`.
pub fn train_from(mut c: Circuit, ts: &TrainingSet, cfg: &OptimizerConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let start = Instant::now();
    let specs = param_specs(&c);
    let mut params = c.params();
    let mut adam = AdamState::new(params.len());
    let mut trace = Vec::with_capacity(cfg.steps);
    let mut clamp_count = 0;

    for step in 0..cfg.steps {
        let (loss, grads, _) = circuit::loss_and_gradient(&c, ts, cfg.kl_weight)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step });
        }
        trace.push(loss);
        if cfg.loss_floor.is_some_and(|f| loss <= f) {
            break;
        }
        clamp_count += match cfg.algorithm {
            Algorithm::PlainSgd => sgd_step(&mut params, &grads, &specs, cfg.learning_rate)?,
            Algorithm::AdaptiveMoments => adam_step(&mut params, &grads, &specs, &mut adam, cfg)?,
        };
        c.set_params(&params)?;
    }

    let ret = circuit::forward_set(&c, ts)?;
    let final_loss = circuit::total_loss(&ret, cfg.kl_weight)?;
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss { step: trace.len() });
    }
    Ok(TrainReport {
        loss_trace: trace,
        final_loss,
        fidelity: ret.pairs.iter().map(|p| p.fidelity).collect(),
        normalized_fidelity: ret.pairs.iter().map(|p| p.normalized_fidelity).collect(),
        wall_seconds: start.elapsed().as_secs_f64(),
        params,
        circuit: c,
        clamp_count,
    })
}
