//! Gate parameters of a one- or two-mode Gaussian transformation and the
//! `(C, mu, Sigma)` triple that drives every recurrence in this crate.
//!
//! The transformation is `D(gamma) R(phi) B(theta', varphi') S(zeta) B(theta, varphi)`
//! (the beamsplitters only for two modes), with `zeta = r e^{i delta}`. Its
//! Fock matrix elements `G[out; in]` satisfy
//!
//! ```text
//! G_0 = C
//! G_{k + 1_i} = (mu_i G_k - sum_l sqrt(k_l) Sigma_il G_{k - 1_l}) / sqrt(k_i + 1)
//! ```
//!
//! where the first `M` indices are outputs and the last `M` are inputs.
//! Writing `T = W diag(e^{i delta} tanh r) W^T`, `S = W diag(sech r) V` and
//! `U = V^T diag(e^{-i delta} tanh r) V`:
//!
//! ```text
//! C     = exp(-(|gamma|^2 + gamma^H T gamma^*) / 2) / sqrt(prod cosh r)
//! mu    = [T gamma^* + gamma, -S^T gamma^*]
//! Sigma = [[T, -S], [-S^T, -U]]
//! ```

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Physical parameters of one Gaussian gate on `M in {1, 2}` modes.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianParams {
    pub gamma: Vec<C64>,
    pub r: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
    /// `(theta, varphi)` of the beamsplitter acting before the squeezers.
    pub bs_pre: Option<(f64, f64)>,
    /// `(theta', varphi')` of the beamsplitter acting after the squeezers.
    pub bs_post: Option<(f64, f64)>,
}

/// One independent coordinate of [`GaussianParams`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ParamKind {
    Gamma(usize),
    R(usize),
    Delta(usize),
    Phi(usize),
    BsPreTheta,
    BsPreVarphi,
    BsPostTheta,
    BsPostVarphi,
}

impl ParamKind {
    pub fn is_complex(self) -> bool {
        matches!(self, ParamKind::Gamma(_))
    }

    pub fn label(self) -> String {
        match self {
            ParamKind::Gamma(i) => format!("gamma{}", i + 1),
            ParamKind::R(i) => format!("r{}", i + 1),
            ParamKind::Delta(i) => format!("delta{}", i + 1),
            ParamKind::Phi(i) => format!("phi{}", i + 1),
            ParamKind::BsPreTheta => "theta".into(),
            ParamKind::BsPreVarphi => "varphi".into(),
            ParamKind::BsPostTheta => "theta_post".into(),
            ParamKind::BsPostVarphi => "varphi_post".into(),
        }
    }
}

impl GaussianParams {
    /// All-zero parameters, i.e. the identity transformation.
    pub fn identity(modes: usize) -> Result<Self> {
        let bs = match modes {
            1 => None,
            2 => Some((0.0, 0.0)),
            m => return Err(Error::UnsupportedModes(m)),
        };
        Ok(GaussianParams {
            gamma: vec![ZERO; modes],
            r: vec![0.0; modes],
            delta: vec![0.0; modes],
            phi: vec![0.0; modes],
            bs_pre: bs,
            bs_post: bs,
        })
    }

    pub fn single(gamma: C64, r: f64, delta: f64, phi: f64) -> Self {
        GaussianParams {
            gamma: vec![gamma],
            r: vec![r],
            delta: vec![delta],
            phi: vec![phi],
            bs_pre: None,
            bs_post: None,
        }
    }

    pub fn modes(&self) -> usize {
        self.gamma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.modes();
        if !(1..=2).contains(&m) {
            return Err(Error::UnsupportedModes(m));
        }
        if self.r.len() != m || self.delta.len() != m || self.phi.len() != m {
            return Err(Error::InvalidParams(format!(
                "per-mode vectors must all have length {m}"
            )));
        }
        if (m == 2) != (self.bs_pre.is_some() && self.bs_post.is_some())
            || (m == 1 && (self.bs_pre.is_some() || self.bs_post.is_some()))
        {
            return Err(Error::InvalidParams(
                "beamsplitter angles are required for two modes and forbidden for one".into(),
            ));
        }
        let reals = self
            .r
            .iter()
            .chain(&self.delta)
            .chain(&self.phi)
            .chain(self.bs_pre.iter().flat_map(|(a, b)| [a, b]))
            .chain(self.bs_post.iter().flat_map(|(a, b)| [a, b]));
        let finite =
            reals.into_iter().all(|x| x.is_finite()) && self.gamma.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(Error::NonFinite("gaussian parameters"));
        }
        if let Some(r) = self.r.iter().find(|&&r| r < 0.0) {
            return Err(Error::InvalidParams(format!("squeezing magnitude {r} is negative")));
        }
        Ok(())
    }

    /// Independent coordinates in canonical order.
    pub fn kinds(&self) -> Vec<ParamKind> {
        let m = self.modes();
        let mut k: Vec<ParamKind> = (0..m).map(ParamKind::Gamma).collect();
        k.extend((0..m).map(ParamKind::R));
        k.extend((0..m).map(ParamKind::Delta));
        k.extend((0..m).map(ParamKind::Phi));
        if m == 2 {
            k.extend([
                ParamKind::BsPreTheta,
                ParamKind::BsPreVarphi,
                ParamKind::BsPostTheta,
                ParamKind::BsPostVarphi,
            ]);
        }
        k
    }

    /// Value of a coordinate; real coordinates have zero imaginary part.
    pub fn get(&self, kind: ParamKind) -> C64 {
        let re = |x: f64| C64::new(x, 0.0);
        match kind {
            ParamKind::Gamma(i) => self.gamma[i],
            ParamKind::R(i) => re(self.r[i]),
            ParamKind::Delta(i) => re(self.delta[i]),
            ParamKind::Phi(i) => re(self.phi[i]),
            ParamKind::BsPreTheta => re(self.bs_pre.map_or(0.0, |b| b.0)),
            ParamKind::BsPreVarphi => re(self.bs_pre.map_or(0.0, |b| b.1)),
            ParamKind::BsPostTheta => re(self.bs_post.map_or(0.0, |b| b.0)),
            ParamKind::BsPostVarphi => re(self.bs_post.map_or(0.0, |b| b.1)),
        }
    }

    /// Set a coordinate; the imaginary part is ignored for real coordinates.
    pub fn set(&mut self, kind: ParamKind, value: C64) {
        let x = value.re;
        match kind {
            ParamKind::Gamma(i) => self.gamma[i] = value,
            ParamKind::R(i) => self.r[i] = x,
            ParamKind::Delta(i) => self.delta[i] = x,
            ParamKind::Phi(i) => self.phi[i] = x,
            ParamKind::BsPreTheta => self.bs_pre.get_or_insert((0.0, 0.0)).0 = x,
            ParamKind::BsPreVarphi => self.bs_pre.get_or_insert((0.0, 0.0)).1 = x,
            ParamKind::BsPostTheta => self.bs_post.get_or_insert((0.0, 0.0)).0 = x,
            ParamKind::BsPostVarphi => self.bs_post.get_or_insert((0.0, 0.0)).1 = x,
        }
    }
}

/// The two interferometers of the Bloch-Messiah layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Interferometers {
    pub w: CMat,
    pub v: CMat,
}

/// `(C, mu, Sigma)`; also used for the partial derivatives of the triple.
#[derive(Clone, Debug, PartialEq)]
pub struct CMuSigma {
    pub c: C64,
    pub mu: Vec<C64>,
    pub sigma: CMat,
}

impl CMuSigma {
    pub fn modes(&self) -> usize {
        self.mu.len() / 2
    }

    pub fn zeros(modes: usize) -> Self {
        CMuSigma {
            c: ZERO,
            mu: vec![ZERO; 2 * modes],
            sigma: CMat::zeros(2 * modes, 2 * modes),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.re.is_finite()
            && self.c.im.is_finite()
            && self.mu.iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.sigma.is_finite()
    }

    /// Largest entrywise difference over `mu` and `Sigma` (not `C`).
    pub fn max_mu_sigma_diff(&self, other: &CMuSigma) -> f64 {
        let dmu = self
            .mu
            .iter()
            .zip(&other.mu)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        dmu.max((&self.sigma - &other.sigma).max_abs())
    }
}

/// Partials of the triple with respect to one coordinate. `d` is `d/dxi`;
/// for complex coordinates `d_conj` holds `d/dxi*`.
#[derive(Clone, Debug)]
pub struct ParamPartial {
    pub kind: ParamKind,
    pub d: CMuSigma,
    pub d_conj: Option<CMuSigma>,
}

#[derive(Clone, Debug)]
pub struct ParamGradients {
    pub partials: Vec<ParamPartial>,
}

impl ParamGradients {
    pub fn get(&self, kind: ParamKind) -> Option<&ParamPartial> {
        self.partials.iter().find(|p| p.kind == kind)
    }
}

/// `B(theta, varphi) = [[cos t, -e^{-i p} sin t], [e^{i p} sin t, cos t]]`.
pub fn beamsplitter_unitary(theta: f64, varphi: f64) -> CMat {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, varphi);
    CMat::from_rows(&[&[C64::new(c, 0.0), -e.conj() * s], &[e * s, C64::new(c, 0.0)]])
}

fn beamsplitter_d_theta(theta: f64, varphi: f64) -> CMat {
    let (s, c) = theta.sin_cos();
    let e = C64::from_polar(1.0, varphi);
    CMat::from_rows(&[&[C64::new(-s, 0.0), -e.conj() * c], &[e * c, C64::new(-s, 0.0)]])
}

fn beamsplitter_d_varphi(theta: f64, varphi: f64) -> CMat {
    let s = theta.sin();
    let e = C64::from_polar(1.0, varphi);
    let i = C64::i();
    CMat::from_rows(&[&[ZERO, i * e.conj() * s], &[i * e * s, ZERO]])
}

fn phase_diag(phi: &[f64]) -> CMat {
    CMat::diag(&phi.iter().map(|&p| C64::from_polar(1.0, p)).collect::<Vec<_>>())
}

pub fn build_interferometers(p: &GaussianParams) -> Result<Interferometers> {
    match p.modes() {
        1 => Ok(Interferometers {
            w: phase_diag(&p.phi),
            v: CMat::identity(1),
        }),
        2 => {
            let (t, vp) = p.bs_pre.ok_or_else(missing_bs)?;
            let (tp, vpp) = p.bs_post.ok_or_else(missing_bs)?;
            Ok(Interferometers {
                w: &phase_diag(&p.phi) * &beamsplitter_unitary(tp, vpp),
                v: beamsplitter_unitary(t, vp),
            })
        }
        m => Err(Error::UnsupportedModes(m)),
    }
}

fn missing_bs() -> Error {
    Error::InvalidParams("two-mode parameters need both beamsplitters".into())
}

/// Everything the triple and its partials are assembled from.
struct Parts {
    gamma: Vec<C64>,
    tanh: Vec<f64>,
    sech: Vec<f64>,
    delta: Vec<f64>,
    w: CMat,
    v: CMat,
    dt: CMat,
    ds: CMat,
    du: CMat,
    t: CMat,
    s: CMat,
    u: CMat,
    c: C64,
}

impl Parts {
    fn new(p: &GaussianParams) -> Result<Self> {
        p.validate()?;
        let ifm = build_interferometers(p)?;
        let tanh: Vec<f64> = p.r.iter().map(|r| r.tanh()).collect();
        let sech: Vec<f64> = p.r.iter().map(|r| 1.0 / r.cosh()).collect();
        let dt = CMat::diag(
            &p.delta
                .iter()
                .zip(&tanh)
                .map(|(&d, &t)| C64::from_polar(t, d))
                .collect::<Vec<_>>(),
        );
        let ds = CMat::diag(&sech.iter().map(|&s| C64::new(s, 0.0)).collect::<Vec<_>>());
        let du = CMat::diag(
            &p.delta
                .iter()
                .zip(&tanh)
                .map(|(&d, &t)| C64::from_polar(t, -d))
                .collect::<Vec<_>>(),
        );
        let (w, v) = (ifm.w, ifm.v);
        let t = &(&w * &dt) * &w.transpose();
        let s = &(&w * &ds) * &v;
        let u = &(&v.transpose() * &du) * &v;

        let gc: Vec<C64> = p.gamma.iter().map(|g| g.conj()).collect();
        let tg = t.mul_vec(&gc);
        let quad: C64 = gc.iter().zip(&tg).map(|(a, b)| a * b).sum();
        let norm2: f64 = p.gamma.iter().map(|g| g.norm_sqr()).sum();
        // log of 1/sqrt(prod cosh r) computed stably for large r
        let log_pref: f64 = -0.5 * p.r.iter().map(|&r| log_cosh(r)).sum::<f64>();
        let c = (C64::new(log_pref, 0.0) - 0.5 * (quad + norm2)).exp();

        Ok(Parts {
            gamma: p.gamma.clone(),
            tanh,
            sech,
            delta: p.delta.clone(),
            w,
            v,
            dt,
            ds,
            du,
            t,
            s,
            u,
            c,
        })
    }

    fn gamma_conj(&self) -> Vec<C64> {
        self.gamma.iter().map(|g| g.conj()).collect()
    }

    fn modes(&self) -> usize {
        self.gamma.len()
    }

    fn triple(&self) -> CMuSigma {
        let m = self.modes();
        let gc = self.gamma_conj();
        let tg = self.t.mul_vec(&gc);
        let sg = self.s.transpose().mul_vec(&gc);
        let mut mu = Vec::with_capacity(2 * m);
        mu.extend(tg.iter().zip(&self.gamma).map(|(a, b)| a + b));
        mu.extend(sg.iter().map(|z| -z));
        CMuSigma {
            c: self.c,
            mu,
            sigma: assemble_sigma(&self.t, &self.s, &self.u),
        }
    }

    /// Partial of the triple for a real coordinate, given the partials of
    /// the interferometers, the three diagonal factors and `log(1/sqrt(prod cosh))`.
    fn real_partial(
        &self,
        dw: Option<&CMat>,
        dv: Option<&CMat>,
        d_dt: Option<&CMat>,
        d_ds: Option<&CMat>,
        d_du: Option<&CMat>,
        d_log_pref: f64,
    ) -> CMuSigma {
        let m = self.modes();
        let zero = CMat::zeros(m, m);
        let wt = self.w.transpose();
        let vt = self.v.transpose();

        let mut d_t = zero.clone();
        let mut d_s = zero.clone();
        let mut d_u = zero.clone();
        if let Some(dw) = dw {
            let dwt = dw.transpose();
            d_t = &(&(dw * &self.dt) * &wt) + &(&(&self.w * &self.dt) * &dwt);
            d_s = &(dw * &self.ds) * &self.v;
        }
        if let Some(dv) = dv {
            d_s = &d_s + &(&(&self.w * &self.ds) * dv);
            d_u = &(&(&dv.transpose() * &self.du) * &self.v) + &(&(&vt * &self.du) * dv);
        }
        if let Some(x) = d_dt {
            d_t = &d_t + &(&(&self.w * x) * &wt);
        }
        if let Some(x) = d_ds {
            d_s = &d_s + &(&(&self.w * x) * &self.v);
        }
        if let Some(x) = d_du {
            d_u = &d_u + &(&(&vt * x) * &self.v);
        }

        let gc = self.gamma_conj();
        let dtg = d_t.mul_vec(&gc);
        let d_quad: C64 = gc.iter().zip(&dtg).map(|(a, b)| a * b).sum();
        let dc = self.c * (C64::new(d_log_pref, 0.0) - 0.5 * d_quad);
        let mut mu = dtg;
        mu.extend(d_s.transpose().mul_vec(&gc).into_iter().map(|z| -z));
        CMuSigma {
            c: dc,
            mu,
            sigma: assemble_sigma(&d_t, &d_s, &d_u),
        }
    }

    fn gamma_partials(&self, i: usize) -> (CMuSigma, CMuSigma) {
        let m = self.modes();
        let gc = self.gamma_conj();
        let tg = self.t.mul_vec(&gc);

        let mut d = CMuSigma::zeros(m);
        d.c = self.c * (-0.5 * gc[i]);
        d.mu[i] = ONE;

        let mut dc = CMuSigma::zeros(m);
        dc.c = self.c * (-0.5 * (self.gamma[i] + 2.0 * tg[i]));
        for a in 0..m {
            dc.mu[a] = self.t[(a, i)];
            dc.mu[m + a] = -self.s[(i, a)];
        }
        (d, dc)
    }
}

fn log_cosh(r: f64) -> f64 {
    let a = r.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn assemble_sigma(t: &CMat, s: &CMat, u: &CMat) -> CMat {
    let m = t.rows();
    let mut sigma = CMat::zeros(2 * m, 2 * m);
    sigma.set_block(0, 0, t);
    sigma.set_block(0, m, &-s);
    sigma.set_block(m, 0, &-&s.transpose());
    sigma.set_block(m, m, &-u);
    sigma
}

pub fn compute_cmusigma(p: &GaussianParams) -> Result<CMuSigma> {
    let cms = Parts::new(p)?.triple();
    if !cms.is_finite() {
        return Err(Error::NonFinite("C, mu, Sigma"));
    }
    Ok(cms)
}

/// Single-mode triple with `sech r -> 0`, `tanh r -> 1`, keeping `sqrt(sech r)` in `C`.
pub fn compute_cmusigma_large_r(p: &GaussianParams) -> Result<CMuSigma> {
    p.validate()?;
    if p.modes() != 1 {
        return Err(Error::UnsupportedModes(p.modes()));
    }
    let (g, r, d, phi) = (p.gamma[0], p.r[0], p.delta[0], p.phi[0]);
    let e = C64::from_polar(1.0, d + 2.0 * phi);
    let gc = g.conj();
    let c = C64::new(-0.5 * log_cosh(r), 0.0) - 0.5 * g.norm_sqr() - 0.5 * gc * gc * e;
    let mut sigma = CMat::zeros(2, 2);
    sigma[(0, 0)] = e;
    sigma[(1, 1)] = -C64::from_polar(1.0, -d);
    Ok(CMuSigma {
        c: c.exp(),
        mu: vec![gc * e + g, ZERO],
        sigma,
    })
}

/// Analytic partials of `(C, mu, Sigma)` with respect to every coordinate,
/// in the order of [`GaussianParams::kinds`].
pub fn compute_param_gradients(p: &GaussianParams) -> Result<ParamGradients> {
    let parts = Parts::new(p)?;
    let m = p.modes();
    let unit = |i: usize, z: C64| {
        let mut v = vec![ZERO; m];
        v[i] = z;
        CMat::diag(&v)
    };
    let mut partials = Vec::new();
    for kind in p.kinds() {
        let partial = match kind {
            ParamKind::Gamma(i) => {
                let (d, dc) = parts.gamma_partials(i);
                ParamPartial {
                    kind,
                    d,
                    d_conj: Some(dc),
                }
            }
            ParamKind::R(i) => {
                let sech2 = parts.sech[i] * parts.sech[i];
                let d_dt = unit(i, C64::from_polar(sech2, parts.delta[i]));
                let d_ds = unit(i, C64::new(-parts.sech[i] * parts.tanh[i], 0.0));
                let d_du = unit(i, C64::from_polar(sech2, -parts.delta[i]));
                let d = parts.real_partial(None, None, Some(&d_dt), Some(&d_ds), Some(&d_du), -0.5 * parts.tanh[i]);
                real(kind, d)
            }
            ParamKind::Delta(i) => {
                let t = parts.tanh[i];
                let d_dt = unit(i, C64::i() * C64::from_polar(t, parts.delta[i]));
                let d_du = unit(i, -C64::i() * C64::from_polar(t, -parts.delta[i]));
                let d = parts.real_partial(None, None, Some(&d_dt), None, Some(&d_du), 0.0);
                real(kind, d)
            }
            ParamKind::Phi(i) => {
                // W = P(phi) B' so dW/dphi_i = i E_ii W
                let proj = unit(i, C64::i());
                let dw = &proj * &parts.w;
                real(kind, parts.real_partial(Some(&dw), None, None, None, None, 0.0))
            }
            ParamKind::BsPostTheta | ParamKind::BsPostVarphi => {
                let (t, vp) = p.bs_post.ok_or_else(missing_bs)?;
                let db = if kind == ParamKind::BsPostTheta {
                    beamsplitter_d_theta(t, vp)
                } else {
                    beamsplitter_d_varphi(t, vp)
                };
                let dw = &phase_diag(&p.phi) * &db;
                real(kind, parts.real_partial(Some(&dw), None, None, None, None, 0.0))
            }
            ParamKind::BsPreTheta | ParamKind::BsPreVarphi => {
                let (t, vp) = p.bs_pre.ok_or_else(missing_bs)?;
                let dv = if kind == ParamKind::BsPreTheta {
                    beamsplitter_d_theta(t, vp)
                } else {
                    beamsplitter_d_varphi(t, vp)
                };
                real(kind, parts.real_partial(None, Some(&dv), None, None, None, 0.0))
            }
        };
        partials.push(partial);
    }
    Ok(ParamGradients { partials })
}

fn real(kind: ParamKind, d: CMuSigma) -> ParamPartial {
    ParamPartial { kind, d, d_conj: None }
}
