//! Gradients of evolved states with respect to gate parameters, and the
//! backward rules that chain them through a circuit.
//!
//! Conventions: a real loss `L` is differentiated with Wirtinger calculus.
//! The upstream cotangent carries `dL/dpsi*`; `dL/dpsi` is its conjugate.
//! For a complex parameter the gradient reported is `dL/dxi*`, for a real
//! one the ordinary derivative `dL/dxi`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::evolve::{self, full_g_tensor, FullTensor, RTensor};
use crate::linalg::SqrtTable;
use crate::params::{CMuSigma, ParamGradients, ParamKind};
use crate::state::FockState;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Relative bound on the imaginary part of a real parameter's gradient.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// `d psi_out / d xi` for one parameter. Complex parameters also carry
/// `d psi_out / d xi*`.
#[derive(Clone, Debug)]
pub struct StatePartial {
    pub kind: ParamKind,
    pub d_psi: Vec<C64>,
    pub d_psi_conj: Option<Vec<C64>>,
}

/// State derivatives for every parameter of one Gaussian gate. Each vector
/// has the shape of the state, `N^M`.
#[derive(Clone, Debug)]
pub struct StateGradient {
    pub modes: usize,
    pub cutoff: usize,
    pub partials: Vec<StatePartial>,
}

impl StateGradient {
    pub fn get(&self, kind: ParamKind) -> Option<&StatePartial> {
        self.partials.iter().find(|p| p.kind == kind)
    }
}

/// `dL/dpsi*` for a real loss, shaped like the state it refers to.
#[derive(Clone, Debug, PartialEq)]
pub struct UpstreamCotangent {
    pub modes: usize,
    pub cutoff: usize,
    pub values: Vec<C64>,
}

impl UpstreamCotangent {
    pub fn new(modes: usize, cutoff: usize, values: Vec<C64>) -> Result<Self> {
        let len = cutoff.pow(modes as u32);
        if values.len() != len {
            return Err(Error::shape(len, values.len()));
        }
        Ok(UpstreamCotangent { modes, cutoff, values })
    }

    pub fn zeros(modes: usize, cutoff: usize) -> Self {
        UpstreamCotangent {
            modes,
            cutoff,
            values: vec![ZERO; cutoff.pow(modes as u32)],
        }
    }

    /// `dL/dpsi`, the conjugate of the stored values.
    pub fn d_psi(&self) -> Vec<C64> {
        self.values.iter().map(|v| v.conj()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    fn check_shape(&self, modes: usize, cutoff: usize) -> Result<()> {
        if self.modes != modes || self.cutoff != cutoff {
            return Err(Error::shape(
                format!("modes={modes} cutoff={cutoff}"),
                format!("modes={} cutoff={}", self.modes, self.cutoff),
            ));
        }
        Ok(())
    }
}

/// Gradient of the loss with respect to one parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamCotangent {
    pub kind: ParamKind,
    pub value: C64,
}

fn check_workspace(cms: &CMuSigma, psi: &FockState, r: &RTensor, modes: usize) -> Result<()> {
    if psi.modes() != modes || cms.modes() != modes {
        return Err(Error::shape(
            format!("{modes}-mode state and parameters"),
            psi.shape_string(),
        ));
    }
    if r.modes() != modes || r.cutoff() != psi.cutoff() {
        return Err(Error::StaleWorkspace(format!(
            "workspace has modes={} cutoff={}, state is {}",
            r.modes(),
            r.cutoff(),
            psi.shape_string()
        )));
    }
    if r.fingerprint() != evolve::workspace_fingerprint(cms, psi) {
        return Err(Error::StaleWorkspace(
            "workspace was built from different parameters or input".into(),
        ));
    }
    Ok(())
}

/// One direction to differentiate along: the parameter, whether this is the
/// conjugate direction, and the matching triple partial.
fn directions(dcms: &ParamGradients) -> Vec<(usize, bool, &CMuSigma)> {
    let mut out = Vec::new();
    for (i, p) in dcms.partials.iter().enumerate() {
        out.push((i, false, &p.d));
        if let Some(dc) = &p.d_conj {
            out.push((i, true, dc));
        }
    }
    out
}

fn assemble(
    modes: usize,
    cutoff: usize,
    dcms: &ParamGradients,
    results: Vec<((usize, bool), Vec<C64>)>,
) -> StateGradient {
    let mut partials: Vec<StatePartial> = dcms
        .partials
        .iter()
        .map(|p| StatePartial {
            kind: p.kind,
            d_psi: Vec::new(),
            d_psi_conj: None,
        })
        .collect();
    for ((i, conj), v) in results {
        if conj {
            partials[i].d_psi_conj = Some(v);
        } else {
            partials[i].d_psi = v;
        }
    }
    StateGradient {
        modes,
        cutoff,
        partials,
    }
}

/// Differentiated single-mode recurrences, re-reading the stored `R`.
pub fn d_evolve_single(cms: &CMuSigma, dcms: &ParamGradients, psi: &FockState, r: &RTensor) -> Result<StateGradient> {
    check_workspace(cms, psi, r, 1)?;
    let RTensor::Single(base) = r else {
        return Err(Error::StaleWorkspace("expected a single-mode workspace".into()));
    };
    let n = psi.cutoff();
    let sq = SqrtTable::new(n);
    let results = directions(dcms)
        .into_par_iter()
        .map(|(i, conj, d)| {
            let dg = evolve::single::first_row(cms, Some((base.g_row(), d)), n, &sq);
            let mut dr = vec![ZERO; n * n];
            evolve::single::first_r_row(&dg, psi.amplitudes(), &sq, &mut dr[..n]);
            let mut counter = evolve::OpCounter::default();
            evolve::single::fill_rows(&mut dr, n, &sq, cms, Some((base.raw(), d)), &mut counter);
            let out = (0..n).map(|m| dr[m * n]).collect();
            ((i, conj), out)
        })
        .collect();
    Ok(assemble(1, n, dcms, results))
}

/// Differentiated two-mode recurrences, re-reading the stored `R`.
pub fn d_evolve_two(cms: &CMuSigma, dcms: &ParamGradients, psi: &FockState, r: &RTensor) -> Result<StateGradient> {
    check_workspace(cms, psi, r, 2)?;
    let RTensor::Two(base) = r else {
        return Err(Error::StaleWorkspace("expected a two-mode workspace".into()));
    };
    let n = psi.cutoff();
    let sq = SqrtTable::new(n);
    let layout = base.layout();
    let results = directions(dcms)
        .into_par_iter()
        .map(|(i, conj, d)| {
            let dg = evolve::two::seed(cms, Some((base.g_seed(), d)), n, &sq);
            let mut dr = vec![ZERO; layout.len()];
            evolve::two::seed_r_block(&dg, psi.amplitudes(), n, &sq, |j, k, v| {
                dr[layout.index(0, 0, j, k)] = v;
            });
            let mut counter = evolve::OpCounter::default();
            evolve::two::fill(layout, &mut dr, &sq, cms, Some((base.raw(), d)), &mut counter);
            let mut out = vec![ZERO; n * n];
            for m in 0..n {
                for nn in 0..n {
                    out[m * n + nn] = dr[layout.index(m, nn, 0, 0)];
                }
            }
            ((i, conj), out)
        })
        .collect();
    Ok(assemble(2, n, dcms, results))
}

/// Dispatch on the number of modes.
pub fn d_evolve(cms: &CMuSigma, dcms: &ParamGradients, psi: &FockState, r: &RTensor) -> Result<StateGradient> {
    match psi.modes() {
        1 => d_evolve_single(cms, dcms, psi, r),
        2 => d_evolve_two(cms, dcms, psi, r),
        m => Err(Error::UnsupportedModes(m)),
    }
}

/// `dL/dpsi_in*_{k'} = sum_k dL/dpsi_out*_k conj(G_{k,k'})`.
pub fn backprop_to_input(
    cms: &CMuSigma,
    upstream: &UpstreamCotangent,
    cutoff: usize,
    modes: usize,
) -> Result<UpstreamCotangent> {
    upstream.check_shape(modes, cutoff)?;
    let g = full_g_tensor(cms, cutoff, modes)?;
    backprop_with_tensor(&g, upstream)
}

/// As [`backprop_to_input`] with a precomputed transformation tensor.
pub fn backprop_with_tensor(g: &FullTensor, upstream: &UpstreamCotangent) -> Result<UpstreamCotangent> {
    upstream.check_shape(g.modes, g.cutoff)?;
    let len = g.state_len();
    let mut out = vec![ZERO; len];
    for (k, u) in upstream.values.iter().enumerate() {
        if *u == ZERO {
            continue;
        }
        let row = &g.data[k * len..(k + 1) * len];
        for (o, gk) in out.iter_mut().zip(row) {
            *o += u * gk.conj();
        }
    }
    UpstreamCotangent::new(g.modes, g.cutoff, out)
}

/// Backward rule of the Kerr layer. `psi_in` is the state entering the gate.
/// Returns `dL/dkappa_i` and the cotangent with respect to `psi_in*`.
pub fn kerr_gradients(
    kappa: &[f64],
    psi_in: &FockState,
    upstream: &UpstreamCotangent,
) -> Result<(Vec<f64>, UpstreamCotangent)> {
    let (modes, n) = (psi_in.modes(), psi_in.cutoff());
    if kappa.len() != modes {
        return Err(Error::shape(format!("{modes} Kerr strengths"), kappa.len()));
    }
    upstream.check_shape(modes, n)?;
    let phases = evolve::kerr::kerr_phases(kappa, modes, n);
    let mut dk = vec![0.0; modes];
    let mut down = Vec::with_capacity(phases.len());
    for (flat, ((g, ph), a)) in upstream.values.iter().zip(&phases).zip(psi_in.amplitudes()).enumerate() {
        let out = ph * a;
        // 2 Re [ conj(g) * i k^2 psi_out ]
        let w = 2.0 * (g.conj() * C64::i() * out).re;
        let k0 = if modes == 1 { flat } else { flat / n };
        dk[0] += w * (k0 * k0) as f64;
        if modes == 2 {
            let k1 = flat % n;
            dk[1] += w * (k1 * k1) as f64;
        }
        down.push(g * ph.conj());
    }
    Ok((dk, UpstreamCotangent::new(modes, n, down)?))
}

/// `dL/dxi* = sum_k g_k conj(dpsi_k/dxi) + conj(g_k) dpsi_k/dxi*` with
/// `g = dL/dpsi*`. For real parameters the two terms are conjugates and the
/// result is the real derivative.
pub fn wirtinger_pair(upstream: &UpstreamCotangent, grads: &StateGradient) -> Result<Vec<ParamCotangent>> {
    upstream.check_shape(grads.modes, grads.cutoff)?;
    let g = &upstream.values;
    grads
        .partials
        .iter()
        .map(|p| {
            if p.d_psi.len() != g.len() {
                return Err(Error::shape(g.len(), p.d_psi.len()));
            }
            let first: C64 = g.iter().zip(&p.d_psi).map(|(g, d)| g * d.conj()).sum();
            let value = match &p.d_psi_conj {
                Some(dc) => {
                    if dc.len() != g.len() {
                        return Err(Error::shape(g.len(), dc.len()));
                    }
                    first + g.iter().zip(dc).map(|(g, d)| g.conj() * d).sum::<C64>()
                }
                None => {
                    let second: C64 = g.iter().zip(&p.d_psi).map(|(g, d)| g.conj() * d).sum();
                    let v = first + second;
                    if v.im.abs() > IMAG_RESIDUE_TOL * v.norm().max(1.0) {
                        return Err(Error::ImaginaryResidue {
                            param: p.kind.label(),
                            residue: v.im.abs(),
                        });
                    }
                    C64::new(v.re, 0.0)
                }
            };
            Ok(ParamCotangent { kind: p.kind, value })
        })
        .collect()
}
