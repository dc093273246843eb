use crate::error::{Error, Result};
use crate::linalg::SqrtTable;
use crate::params::CMuSigma;
use crate::state::FockState;
use crate::C64;

use super::{OpCounter, RTensor};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Single-mode workspace. Dense `N x N`, row `m` holds `R_m^(k)` for `k < N - m`;
/// the rest of each row is never written.
#[derive(Clone, Debug)]
pub struct SingleR {
    cutoff: usize,
    data: Vec<C64>,
    g_row: Vec<C64>,
    pub(crate) counter: OpCounter,
    pub(crate) fingerprint: u64,
}

impl SingleR {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    #[inline(always)]
    pub fn get(&self, m: usize, k: usize) -> C64 {
        self.data[m * self.cutoff + k]
    }

    /// Raw storage, including the never-written upper triangle.
    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    /// `<G_0|`, the first row of the transformation matrix.
    pub fn g_row(&self) -> &[C64] {
        &self.g_row
    }

    pub fn output(&self) -> Vec<C64> {
        (0..self.cutoff).map(|m| self.get(m, 0)).collect()
    }
}

/// `G_{0,n}` for `n < N`, seeded with `G_{0,0} = C`.
pub fn g_first_row(cms: &CMuSigma, cutoff: usize) -> Vec<C64> {
    let sq = SqrtTable::new(cutoff);
    first_row(cms, None, cutoff, &sq)
}

/// First row, or with `extra = Some((g, d))` its derivative along `d`.
pub(crate) fn first_row(cms: &CMuSigma, extra: Option<(&[C64], &CMuSigma)>, cutoff: usize, sq: &SqrtTable) -> Vec<C64> {
    let mu2 = cms.mu[1];
    let s22 = cms.sigma[(1, 1)];
    let mut g = vec![ZERO; cutoff];
    if cutoff == 0 {
        return g;
    }
    g[0] = extra.map_or(cms.c, |(_, d)| d.c);
    for n in 1..cutoff {
        let mut v = mu2 * g[n - 1];
        if n >= 2 {
            v -= s22 * sq[n - 1] * g[n - 2];
        }
        if let Some((b, d)) = extra {
            v += d.mu[1] * b[n - 1];
            if n >= 2 {
                v -= d.sigma[(1, 1)] * sq[n - 1] * b[n - 2];
            }
        }
        g[n] = v / sq[n];
    }
    g
}

/// Apply the lowering operator in place to the first `len` entries:
/// `state[i] <- sqrt(i + 1) state[i + 1]`. The result is valid on `len - 1` entries.
#[inline]
pub(crate) fn lower_in_place(state: &mut [C64], len: usize, sq: &SqrtTable) {
    for i in 0..len.saturating_sub(1) {
        state[i] = state[i + 1] * sq[i + 1];
    }
}

/// `R_0^(k) = <G_0| a^k |psi>` for every `k < N`, using a scratch copy of `psi`.
pub(crate) fn first_r_row(g_row: &[C64], psi: &[C64], sq: &SqrtTable, out: &mut [C64]) {
    let n = psi.len();
    let mut scratch = psi.to_vec();
    for (k, o) in out.iter_mut().enumerate().take(n) {
        let len = n - k;
        *o = g_row[..len].iter().zip(&scratch[..len]).map(|(g, s)| g * s).sum();
        lower_in_place(&mut scratch, len, sq);
    }
}

pub fn evolve_single(cms: &CMuSigma, psi: &FockState) -> Result<(FockState, RTensor)> {
    if psi.modes() != 1 || cms.modes() != 1 {
        return Err(Error::shape("single-mode state and parameters", psi.shape_string()));
    }
    let n = psi.cutoff();
    if n == 0 {
        return Err(Error::ZeroCutoff);
    }
    let sq = SqrtTable::new(n);
    let mut counter = OpCounter::default();

    let g_row = first_row(cms, None, n, &sq);
    let mut data = vec![ZERO; n * n];
    first_r_row(&g_row, psi.amplitudes(), &sq, &mut data[..n]);
    counter.add(n, n * (n + 1) / 2);
    fill_rows(&mut data, n, &sq, cms, None, &mut counter);

    let r = SingleR {
        cutoff: n,
        data,
        g_row,
        counter,
        fingerprint: super::workspace_fingerprint(cms, psi),
    };
    let out = FockState::new(1, n, r.output())?;
    Ok((out, RTensor::Single(r)))
}

/// Rows `m >= 1` of the dense `n x n` workspace from row 0. With
/// `extra = Some((r, d))`, `data` is the derivative workspace and the
/// product-rule terms `d * r` are added.
pub(crate) fn fill_rows(
    data: &mut [C64],
    n: usize,
    sq: &SqrtTable,
    cms: &CMuSigma,
    extra: Option<(&[C64], &CMuSigma)>,
    counter: &mut OpCounter,
) {
    let coef = |c: &CMuSigma| [c.mu[0], c.sigma[(0, 0)], c.sigma[(0, 1)]];
    let own = coef(cms);
    let dcoef = extra.map(|(_, d)| coef(d));
    for m in 1..n {
        let inv = 1.0 / sq[m];
        let w2 = if m >= 2 { sq[m - 1] * inv } else { 0.0 };
        let len = n - m;
        let p1 = (m - 1) * n;
        let p2 = m.saturating_sub(2) * n;
        let terms = |src: &[C64], [c_mu, c_s11, c_s12]: [C64; 3], k: usize| {
            let v = (c_mu * src[p1 + k] - c_s12 * src[p1 + k + 1]) * inv;
            if m >= 2 {
                v - c_s11 * w2 * src[p2 + k]
            } else {
                v
            }
        };
        for k in 0..len {
            let mut v = terms(data, own, k);
            if let (Some((base, _)), Some(dc)) = (extra, dcoef) {
                v += terms(base, dc, k);
            }
            data[m * n + k] = v;
        }
        counter.add(len, if m >= 2 { 3 * len } else { 2 * len });
    }
}
