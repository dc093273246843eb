//! Layered Gaussian + Kerr circuits, their losses over a training set, and
//! the backward pass that turns the losses into a parameter gradient.
//!
//! The flat parameter vector lists layers in the order they act. Within a
//! layer the Gaussian coordinates come first (see [`GaussianParams::kinds`]),
//! followed by one Kerr strength per mode. Complex entries are displacements;
//! their gradient entry is `dL/dgamma*`. Every other entry is real and its
//! gradient is the ordinary derivative.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{self, full_g_tensor, FullTensor, RTensor};
use crate::grad::{self, UpstreamCotangent};
use crate::params::{compute_cmusigma, compute_param_gradients, CMuSigma, GaussianParams, ParamGradients, ParamKind};
use crate::state::FockState;
use crate::C64;

/// Probabilities at or below this make the KL term diverge.
pub const KL_FLOOR: f64 = 1e-30;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Order of the two gates inside one layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerOrder {
    #[default]
    GaussianThenKerr,
    KerrThenGaussian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub gauss: GaussianParams,
    pub kappa: Vec<f64>,
}

impl Layer {
    pub fn identity(modes: usize) -> Result<Self> {
        Ok(Layer {
            gauss: GaussianParams::identity(modes)?,
            kappa: vec![0.0; modes],
        })
    }

    pub fn modes(&self) -> usize {
        self.gauss.modes()
    }

    /// Number of entries this layer contributes to the flat vector.
    pub fn num_params(&self) -> usize {
        self.gauss.kinds().len() + self.kappa.len()
    }
}

/// One coordinate of the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CircuitParam {
    Gauss { layer: usize, kind: ParamKind },
    Kappa { layer: usize, mode: usize },
}

impl CircuitParam {
    pub fn is_complex(self) -> bool {
        matches!(self, CircuitParam::Gauss { kind, .. } if kind.is_complex())
    }

    pub fn is_squeezing(self) -> bool {
        matches!(
            self,
            CircuitParam::Gauss {
                kind: ParamKind::R(_),
                ..
            }
        )
    }

    pub fn label(self) -> String {
        match self {
            CircuitParam::Gauss { layer, kind } => format!("layer{layer}.{}", kind.label()),
            CircuitParam::Kappa { layer, mode } => format!("layer{layer}.kappa{}", mode + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub layers: Vec<Layer>,
    pub modes: usize,
    pub cutoff: usize,
    pub order: LayerOrder,
}

impl Circuit {
    pub fn new(layers: Vec<Layer>, cutoff: usize, order: LayerOrder) -> Result<Self> {
        let Some(first) = layers.first() else {
            return Err(Error::InvalidParams("a circuit needs at least one layer".into()));
        };
        if cutoff == 0 {
            return Err(Error::ZeroCutoff);
        }
        let modes = first.modes();
        for (i, l) in layers.iter().enumerate() {
            l.gauss.validate()?;
            if l.modes() != modes || l.kappa.len() != modes {
                return Err(Error::InvalidParams(format!("layer {i} does not act on {modes} modes")));
            }
        }
        Ok(Circuit {
            layers,
            modes,
            cutoff,
            order,
        })
    }

    /// `L` identity layers.
    pub fn identity(modes: usize, cutoff: usize, layers: usize) -> Result<Self> {
        let l = Layer::identity(modes)?;
        Circuit::new(vec![l; layers], cutoff, LayerOrder::default())
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Coordinates of the flat parameter vector, in order.
    pub fn param_layout(&self) -> Vec<CircuitParam> {
        let mut out = Vec::new();
        for (layer, l) in self.layers.iter().enumerate() {
            out.extend(
                l.gauss
                    .kinds()
                    .into_iter()
                    .map(|kind| CircuitParam::Gauss { layer, kind }),
            );
            out.extend((0..l.kappa.len()).map(|mode| CircuitParam::Kappa { layer, mode }));
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn params(&self) -> Vec<C64> {
        self.param_layout()
            .into_iter()
            .map(|p| match p {
                CircuitParam::Gauss { layer, kind } => self.layers[layer].gauss.get(kind),
                CircuitParam::Kappa { layer, mode } => C64::new(self.layers[layer].kappa[mode], 0.0),
            })
            .collect()
    }

    /// Overwrite every parameter; imaginary parts of real entries are dropped.
    pub fn set_params(&mut self, values: &[C64]) -> Result<()> {
        let layout = self.param_layout();
        if values.len() != layout.len() {
            return Err(Error::shape(layout.len(), values.len()));
        }
        for (p, v) in layout.into_iter().zip(values) {
            match p {
                CircuitParam::Gauss { layer, kind } => self.layers[layer].gauss.set(kind, *v),
                CircuitParam::Kappa { layer, mode } => self.layers[layer].kappa[mode] = v.re,
            }
        }
        Ok(())
    }

    fn check_state(&self, psi: &FockState) -> Result<()> {
        if psi.modes() != self.modes || psi.cutoff() != self.cutoff {
            return Err(Error::shape(
                format!("modes={} cutoff={}", self.modes, self.cutoff),
                psi.shape_string(),
            ));
        }
        Ok(())
    }
}

/// Input/target pairs sharing one shape. Targets are unit-norm.
#[derive(Clone, Debug)]
pub struct TrainingSet {
    pairs: Vec<(FockState, FockState)>,
}

impl TrainingSet {
    pub fn new(pairs: Vec<(FockState, FockState)>) -> Result<Self> {
        let Some((first, _)) = pairs.first() else {
            return Err(Error::EmptyTrainingSet);
        };
        for (i, (a, t)) in pairs.iter().enumerate() {
            first.check_same_shape(a)?;
            first.check_same_shape(t)?;
            let dev = (t.norm_sqr() - 1.0).abs();
            if dev > 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "target {i} is not normalized (|norm^2 - 1| = {dev:e})"
                )));
            }
        }
        Ok(TrainingSet { pairs })
    }

    pub fn single(input: FockState, target: FockState) -> Result<Self> {
        TrainingSet::new(vec![(input, target)])
    }

    pub fn pairs(&self) -> &[(FockState, FockState)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn modes(&self) -> usize {
        self.pairs[0].0.modes()
    }

    pub fn cutoff(&self) -> usize {
        self.pairs[0].0.cutoff()
    }
}

/// What one layer keeps from the forward pass.
#[derive(Clone, Debug)]
pub struct LayerTrace {
    /// State entering the Gaussian gate.
    pub gauss_in: FockState,
    pub r: RTensor,
    /// State entering the Kerr gate.
    pub kerr_in: FockState,
}

#[derive(Clone, Debug)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    pub output: FockState,
}

fn triples(c: &Circuit) -> Result<Vec<CMuSigma>> {
    c.layers.iter().map(|l| compute_cmusigma(&l.gauss)).collect()
}

fn forward_with(c: &Circuit, cms: &[CMuSigma], psi: &FockState) -> Result<ForwardTrace> {
    c.check_state(psi)?;
    let mut state = psi.clone();
    let mut layers = Vec::with_capacity(c.layers.len());
    for (l, t) in c.layers.iter().zip(cms) {
        let trace = match c.order {
            LayerOrder::GaussianThenKerr => {
                let (mid, r) = evolve::evolve(t, &state)?;
                let next = evolve::apply_kerr(&l.kappa, &mid)?;
                LayerTrace {
                    gauss_in: std::mem::replace(&mut state, next),
                    r,
                    kerr_in: mid,
                }
            }
            LayerOrder::KerrThenGaussian => {
                let mid = evolve::apply_kerr(&l.kappa, &state)?;
                let (next, r) = evolve::evolve(t, &mid)?;
                let kerr_in = std::mem::replace(&mut state, next);
                LayerTrace {
                    gauss_in: mid,
                    r,
                    kerr_in,
                }
            }
        };
        layers.push(trace);
    }
    Ok(ForwardTrace { layers, output: state })
}

/// Apply every layer to `psi`, first layer first, keeping what the backward
/// pass needs.
pub fn forward(c: &Circuit, psi: &FockState) -> Result<(FockState, ForwardTrace)> {
    let cms = triples(c)?;
    let trace = forward_with(c, &cms, psi)?;
    Ok((trace.output.clone(), trace))
}

/// Output of the circuit without retention.
pub fn apply(c: &Circuit, psi: &FockState) -> Result<FockState> {
    Ok(forward(c, psi)?.0)
}

/// Per-pair results of a forward pass.
#[derive(Clone, Debug)]
pub struct PairResult {
    /// `<target|U|in>`.
    pub overlap: C64,
    /// `|<target|U|in>|^2`.
    pub fidelity: f64,
    /// Fidelity divided by the squared norm of the truncated output.
    pub normalized_fidelity: f64,
}

/// Forward passes over a training set with everything retained for
/// [`backward`].
#[derive(Clone, Debug)]
pub struct Retained {
    params: Vec<C64>,
    cms: Vec<CMuSigma>,
    pub traces: Vec<ForwardTrace>,
    pub pairs: Vec<PairResult>,
}

impl Retained {
    pub fn outputs(&self) -> impl Iterator<Item = &FockState> {
        self.traces.iter().map(|t| &t.output)
    }
}

pub fn forward_set(c: &Circuit, ts: &TrainingSet) -> Result<Retained> {
    if ts.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let cms = triples(c)?;
    let traces: Vec<ForwardTrace> = ts
        .pairs()
        .par_iter()
        .map(|(input, _)| forward_with(c, &cms, input))
        .collect::<Result<_>>()?;
    let pairs = traces
        .iter()
        .zip(ts.pairs())
        .map(|(tr, (_, target))| {
            let overlap = target.inner(&tr.output)?;
            let fidelity = overlap.norm_sqr();
            let norm = tr.output.norm_sqr() * target.norm_sqr();
            Ok(PairResult {
                overlap,
                fidelity,
                normalized_fidelity: if norm > 0.0 { fidelity / norm } else { 0.0 },
            })
        })
        .collect::<Result<_>>()?;
    Ok(Retained {
        params: c.params(),
        cms,
        traces,
        pairs,
    })
}

fn fidelity_term(pairs: &[PairResult]) -> f64 {
    1.0 - pairs.iter().map(|p| p.fidelity).sum::<f64>() / pairs.len() as f64
}

fn kl_term(pairs: &[PairResult]) -> Result<f64> {
    let mut sum = 0.0;
    for (pair, p) in pairs.iter().enumerate() {
        if p.fidelity <= KL_FLOOR {
            return Err(Error::KlDivergent {
                pair,
                fidelity: p.fidelity,
            });
        }
        sum -= p.fidelity.ln();
    }
    Ok(sum)
}

/// `1 - (1/S) sum_s |<target_s|U|in_s>|^2`.
pub fn loss_fidelity(c: &Circuit, ts: &TrainingSet) -> Result<f64> {
    Ok(fidelity_term(&forward_set(c, ts)?.pairs))
}

/// `-sum_s log |<target_s|U|in_s>|^2`.
pub fn loss_kl_uniform(c: &Circuit, ts: &TrainingSet) -> Result<f64> {
    kl_term(&forward_set(c, ts)?.pairs)
}

/// `loss_fidelity + lambda * loss_kl_uniform` from a retained forward pass.
/// The KL term is not evaluated when `lambda` is zero.
pub fn total_loss(ret: &Retained, lambda: f64) -> Result<f64> {
    let mut l = fidelity_term(&ret.pairs);
    if lambda != 0.0 {
        l += lambda * kl_term(&ret.pairs)?;
    }
    Ok(l)
}

/// Per-layer quantities shared by every pair in the backward pass.
struct LayerBackward {
    dcms: ParamGradients,
    /// Only needed when a cotangent has to cross this layer's Gaussian gate.
    g: Option<FullTensor>,
}

/// Gradient of `loss_fidelity + lambda * loss_kl_uniform` with respect to the
/// flat parameter vector of `c`.
pub fn backward(c: &Circuit, ts: &TrainingSet, ret: &Retained, lambda: f64) -> Result<Vec<C64>> {
    if ret.params != c.params() || ret.traces.len() != ts.len() {
        return Err(Error::StaleWorkspace(
            "retained forward pass does not match the circuit".into(),
        ));
    }
    let s = ts.len() as f64;
    if lambda != 0.0 {
        kl_term(&ret.pairs)?;
    }

    let need_g = |i: usize| match c.order {
        LayerOrder::GaussianThenKerr => i > 0,
        LayerOrder::KerrThenGaussian => true,
    };
    let per_layer: Vec<LayerBackward> = c
        .layers
        .par_iter()
        .enumerate()
        .map(|(i, l)| {
            Ok(LayerBackward {
                dcms: compute_param_gradients(&l.gauss)?,
                g: if need_g(i) {
                    Some(full_g_tensor(&ret.cms[i], c.cutoff, c.modes)?)
                } else {
                    None
                },
            })
        })
        .collect::<Result<_>>()?;

    let per_pair: Vec<Vec<C64>> = ts
        .pairs()
        .par_iter()
        .zip(&ret.traces)
        .zip(&ret.pairs)
        .map(|(((_, target), trace), pr)| {
            // dL/dpsi_out* = -(1/S + lambda/p) <t|psi> t
            let mut w = 1.0 / s;
            if lambda != 0.0 {
                w += lambda / pr.fidelity;
            }
            let seed = target.amplitudes().iter().map(|t| -w * pr.overlap * t).collect();
            let up = UpstreamCotangent::new(c.modes, c.cutoff, seed)?;
            backward_pair(c, ret, trace, &per_layer, up)
        })
        .collect::<Result<_>>()?;

    let mut total = vec![ZERO; c.num_params()];
    for g in &per_pair {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    Ok(total)
}

fn backward_pair(
    c: &Circuit,
    ret: &Retained,
    trace: &ForwardTrace,
    per_layer: &[LayerBackward],
    mut up: UpstreamCotangent,
) -> Result<Vec<C64>> {
    let mut out = vec![ZERO; c.num_params()];
    let mut offset: Vec<usize> = Vec::with_capacity(c.layers.len());
    let mut acc = 0;
    for l in &c.layers {
        offset.push(acc);
        acc += l.num_params();
    }

    for i in (0..c.layers.len()).rev() {
        let layer = &c.layers[i];
        let tr = &trace.layers[i];
        let lb = &per_layer[i];
        let n_gauss = lb.dcms.partials.len();
        let base = offset[i];

        let gauss_step = |up: UpstreamCotangent, cross: bool, out: &mut [C64]| -> Result<UpstreamCotangent> {
            let sg = grad::d_evolve(&ret.cms[i], &lb.dcms, &tr.gauss_in, &tr.r)?;
            for (j, pc) in grad::wirtinger_pair(&up, &sg)?.into_iter().enumerate() {
                out[base + j] = pc.value;
            }
            match (&lb.g, cross) {
                (Some(g), true) => grad::backprop_with_tensor(g, &up),
                _ => Ok(up),
            }
        };
        let kerr_step = |up: UpstreamCotangent, out: &mut [C64]| -> Result<UpstreamCotangent> {
            let (dk, down) = grad::kerr_gradients(&layer.kappa, &tr.kerr_in, &up)?;
            for (m, v) in dk.into_iter().enumerate() {
                out[base + n_gauss + m] = C64::new(v, 0.0);
            }
            Ok(down)
        };

        up = match c.order {
            LayerOrder::GaussianThenKerr => {
                let mid = kerr_step(up, &mut out)?;
                gauss_step(mid, i > 0, &mut out)?
            }
            LayerOrder::KerrThenGaussian => {
                let mid = gauss_step(up, true, &mut out)?;
                kerr_step(mid, &mut out)?
            }
        };
    }
    Ok(out)
}

/// Loss and gradient in one call.
pub fn loss_and_gradient(c: &Circuit, ts: &TrainingSet, lambda: f64) -> Result<(f64, Vec<C64>, Retained)> {
    let ret = forward_set(c, ts)?;
    let loss = total_loss(&ret, lambda)?;
    let g = backward(c, ts, &ret, lambda)?;
    Ok((loss, g, ret))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_circuit<R: Rng>(rng: &mut R, modes: usize, cutoff: usize, layers: usize, order: LayerOrder) -> Circuit {
        let mut c = Circuit::identity(modes, cutoff, layers).unwrap();
        c.order = order;
        let vals: Vec<C64> = c
            .param_layout()
            .into_iter()
            .map(|p| {
                if p.is_complex() {
                    C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5))
                } else if p.is_squeezing() {
                    C64::new(rng.gen_range(0.05..0.5), 0.0)
                } else if let CircuitParam::Kappa { .. } = p {
                    C64::new(rng.gen_range(-0.1..0.1), 0.0)
                } else {
                    C64::new(rng.gen_range(-PI..PI), 0.0)
                }
            })
            .collect();
        c.set_params(&vals).unwrap();
        c
    }

    fn random_set<R: Rng>(rng: &mut R, modes: usize, cutoff: usize, pairs: usize) -> TrainingSet {
        let v = (0..pairs)
            .map(|_| {
                (
                    FockState::random(modes, cutoff, rng).unwrap(),
                    FockState::random(modes, cutoff, rng).unwrap(),
                )
            })
            .collect();
        TrainingSet::new(v).unwrap()
    }

    fn loss_at(c: &Circuit, ts: &TrainingSet, lambda: f64) -> f64 {
        total_loss(&forward_set(c, ts).unwrap(), lambda).unwrap()
    }

    /// Central differences on each real coordinate; complex coordinates give
    /// `(dL/dx, dL/dy)`.
    fn fd_check(c: &Circuit, ts: &TrainingSet, lambda: f64) {
        let h = 1e-5;
        let (_, g, _) = loss_and_gradient(c, ts, lambda).unwrap();
        let base = c.params();
        for (i, p) in c.param_layout().into_iter().enumerate() {
            let dirs: &[(C64, f64)] = if p.is_complex() {
                &[(C64::new(1.0, 0.0), 2.0 * g[i].re), (C64::new(0.0, 1.0), 2.0 * g[i].im)]
            } else {
                &[(C64::new(1.0, 0.0), g[i].re)]
            };
            for &(dz, got) in dirs {
                let at = |s: f64| {
                    let mut v = base.clone();
                    v[i] += dz * s;
                    let mut q = c.clone();
                    q.set_params(&v).unwrap();
                    loss_at(&q, ts, lambda)
                };
                let fd = if p.is_squeezing() && base[i].re < 2.0 * h {
                    (-3.0 * at(0.0) + 4.0 * at(h) - at(2.0 * h)) / (2.0 * h)
                } else {
                    (at(h) - at(-h)) / (2.0 * h)
                };
                let err = (fd - got).abs();
                assert!(
                    err <= 1e-4 * fd.abs() || err <= 1e-8,
                    "{} dir {dz}: fd {fd} analytic {got}",
                    p.label()
                );
            }
            if !p.is_complex() {
                assert_eq!(g[i].im, 0.0);
            }
        }
    }

    #[test]
    fn layout_matches_layer_order() {
        let c = Circuit::identity(2, 4, 2).unwrap();
        let l = c.param_layout();
        assert_eq!(l.len(), 28);
        assert_eq!(
            l[0],
            CircuitParam::Gauss {
                layer: 0,
                kind: ParamKind::Gamma(0)
            }
        );
        assert_eq!(l[12], CircuitParam::Kappa { layer: 0, mode: 0 });
        assert_eq!(
            l[14],
            CircuitParam::Gauss {
                layer: 1,
                kind: ParamKind::Gamma(0)
            }
        );
        let c = Circuit::identity(1, 4, 1).unwrap();
        assert_eq!(c.num_params(), 5);
    }

    #[test]
    fn params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_circuit(&mut rng, 2, 4, 3, LayerOrder::default());
        let mut d = Circuit::identity(2, 4, 3).unwrap();
        d.set_params(&c.params()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn identity_layer_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = FockState::random(1, 8, &mut rng).unwrap();
        let c = Circuit::identity(1, 8, 1).unwrap();
        assert!(apply(&c, &psi).unwrap().max_abs_diff(&psi).unwrap() < 1e-14);
    }

    #[test]
    fn displacements_compose() {
        let n = 30;
        let mut c = Circuit::identity(1, n, 2).unwrap();
        for l in &mut c.layers {
            l.gauss.gamma[0] = C64::new(0.5, 0.0);
        }
        let out = apply(&c, &FockState::vacuum(1, n).unwrap()).unwrap();
        let coherent = crate::evolve::evolve(
            &compute_cmusigma(&GaussianParams::single(C64::new(1.0, 0.0), 0.0, 0.0, 0.0)).unwrap(),
            &FockState::vacuum(1, n).unwrap(),
        )
        .unwrap()
        .0;
        let ov = out.inner(&coherent).unwrap().norm();
        assert!((ov - 1.0).abs() < 1e-10, "{ov}");
    }

    #[test]
    fn output_norm_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = random_circuit(&mut rng, 2, 6, 2, LayerOrder::default());
            let psi = FockState::random(2, 6, &mut rng).unwrap();
            assert!(apply(&c, &psi).unwrap().norm_sqr() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn fidelity_loss_examples() {
        let c = Circuit::identity(1, 5, 1).unwrap();
        let v = FockState::vacuum(1, 5).unwrap();
        let one = FockState::fock(1, 5, &[1]).unwrap();
        let same = TrainingSet::single(v.clone(), v.clone()).unwrap();
        let orth = TrainingSet::single(v.clone(), one.clone()).unwrap();
        let both = TrainingSet::new(vec![(v.clone(), v.clone()), (v.clone(), one)]).unwrap();
        assert!(loss_fidelity(&c, &same).unwrap().abs() < 1e-15);
        assert!((loss_fidelity(&c, &orth).unwrap() - 1.0).abs() < 1e-15);
        assert!((loss_fidelity(&c, &both).unwrap() - 0.5).abs() < 1e-15);
        assert!(loss_kl_uniform(&c, &same).unwrap().abs() < 1e-15);
        assert!(matches!(
            loss_kl_uniform(&c, &both),
            Err(Error::KlDivergent { pair: 1, .. })
        ));
    }

    #[test]
    fn kl_of_equal_probabilities() {
        let p = (-1.0f64).exp();
        let pr = |f: f64| PairResult {
            overlap: C64::new(f.sqrt(), 0.0),
            fidelity: f,
            normalized_fidelity: f,
        };
        assert!((kl_term(&[pr(p), pr(p)]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_loss_ignores_target_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_circuit(&mut rng, 1, 8, 2, LayerOrder::default());
        let psi = FockState::random(1, 8, &mut rng).unwrap();
        let t = FockState::random(1, 8, &mut rng).unwrap();
        let mut t2 = t.clone();
        let ph = C64::from_polar(1.0, 1.3);
        t2.amplitudes_mut().iter_mut().for_each(|a| *a *= ph);
        let a = loss_fidelity(&c, &TrainingSet::single(psi.clone(), t).unwrap()).unwrap();
        let b = loss_fidelity(&c, &TrainingSet::single(psi, t2).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-14);
        assert!((0.0..=1.0 + 1e-9).contains(&a));
    }

    #[test]
    fn training_set_validation() {
        assert!(matches!(TrainingSet::new(vec![]), Err(Error::EmptyTrainingSet)));
        let v = FockState::vacuum(1, 4).unwrap();
        let mut t = FockState::fock(1, 4, &[1]).unwrap();
        t.amplitudes_mut()[1] = C64::new(0.9, 0.0);
        assert!(TrainingSet::single(v.clone(), t).is_err());
        assert!(TrainingSet::single(v, FockState::vacuum(1, 5).unwrap()).is_err());
    }

    #[test]
    fn gradient_zero_at_minimum() {
        let c = Circuit::identity(1, 6, 1).unwrap();
        let v = FockState::vacuum(1, 6).unwrap();
        let ts = TrainingSet::single(v.clone(), v).unwrap();
        let (l, g, _) = loss_and_gradient(&c, &ts, 0.0).unwrap();
        assert!(l.abs() < 1e-15);
        assert!(g.iter().all(|x| x.norm() < 1e-10));
    }

    #[test]
    fn single_photon_gradient_at_zero() {
        let c = Circuit::identity(1, 6, 1).unwrap();
        let ts = TrainingSet::single(FockState::vacuum(1, 6).unwrap(), FockState::fock(1, 6, &[1]).unwrap()).unwrap();
        let (_, g, _) = loss_and_gradient(&c, &ts, 0.0).unwrap();
        // overlap <1|psi> vanishes at the identity so the first-order
        // gradient vanishes too; move slightly off the identity
        assert!(g.iter().all(|x| x.norm() < 1e-12));
        let mut c = c;
        c.layers[0].gauss.gamma[0] = C64::new(0.1, 0.0);
        let (_, g, _) = loss_and_gradient(&c, &ts, 0.0).unwrap();
        assert!(g[0].norm() > 1e-3);
        assert_eq!(g[4], C64::new(0.0, 0.0));
        fd_check(&c, &ts, 0.0);
    }

    #[test]
    fn gradient_check_single_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for order in [LayerOrder::GaussianThenKerr, LayerOrder::KerrThenGaussian] {
            let c = random_circuit(&mut rng, 1, 12, 2, order);
            let ts = random_set(&mut rng, 1, 12, 2);
            fd_check(&c, &ts, 0.0);
            fd_check(&c, &ts, 0.1);
        }
    }

    #[test]
    fn gradient_check_two_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for order in [LayerOrder::GaussianThenKerr, LayerOrder::KerrThenGaussian] {
            let c = random_circuit(&mut rng, 2, 6, 1, order);
            let ts = random_set(&mut rng, 2, 6, 2);
            fd_check(&c, &ts, 0.0);
            let c = random_circuit(&mut rng, 2, 5, 2, order);
            fd_check(&c, &random_set(&mut rng, 2, 5, 1), 0.1);
        }
    }

    #[test]
    fn descent_along_negative_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = random_circuit(&mut rng, 1, 10, 2, LayerOrder::default());
            let ts = random_set(&mut rng, 1, 10, 1);
            let (l0, g, _) = loss_and_gradient(&c, &ts, 0.0).unwrap();
            let step = 1e-4;
            // complex coordinates move along -dL/dxi*, real ones along -dL/dxi
            let v: Vec<C64> = c.params().iter().zip(&g).map(|(p, g)| p - step * g).collect();
            let mut q = c.clone();
            q.set_params(&v).unwrap();
            assert!(loss_at(&q, &ts, 0.0) < l0);
        }
    }

    #[test]
    fn gradient_linear_in_lambda() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = random_circuit(&mut rng, 1, 8, 2, LayerOrder::default());
        let ts = random_set(&mut rng, 1, 8, 3);
        let ret = forward_set(&c, &ts).unwrap();
        let gf = backward(&c, &ts, &ret, 0.0).unwrap();
        let g1 = backward(&c, &ts, &ret, 1.0).unwrap();
        for lambda in [0.0, 0.1] {
            let g = backward(&c, &ts, &ret, lambda).unwrap();
            for i in 0..g.len() {
                let want = gf[i] + lambda * (g1[i] - gf[i]);
                assert!((g[i] - want).norm() < 1e-12 * (1.0 + want.norm()));
            }
        }
    }

    #[test]
    fn stale_retention_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_circuit(&mut rng, 1, 6, 1, LayerOrder::default());
        let ts = random_set(&mut rng, 1, 6, 1);
        let ret = forward_set(&c, &ts).unwrap();
        let mut d = c.clone();
        d.layers[0].kappa[0] += 0.1;
        assert!(matches!(backward(&d, &ts, &ret, 0.0), Err(Error::StaleWorkspace(_))));
    }
}
