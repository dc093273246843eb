use crate::error::{Error, Result};
use crate::linalg::SqrtTable;
use crate::params::CMuSigma;
use crate::state::FockState;
use crate::C64;

use super::{OpCounter, RTensor};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Storage layout of the two-mode workspace `R_{m,n}^(j,k)`.
///
/// For `m >= 1` only `j + k < N - m` is needed; those slices are packed
/// triangles. The `m = 0` slices feed every later `m` through the `a` and `b`
/// lowering terms and the `n` recurrence raises `j + k` by one per step, so
/// they need `j + k <= 2N - 2 - n` (with `j, k < N`); they are stored as dense
/// `N x N` blocks, `N^3` entries in total.
#[derive(Clone, Debug)]
pub struct TwoLayout {
    cutoff: usize,
    /// Offset of slice `(m, n)` for `m >= 1`, indexed `(m - 1) * N + n`.
    slice_offset: Vec<usize>,
    len: usize,
}

impl TwoLayout {
    pub fn new(cutoff: usize) -> Self {
        let n = cutoff;
        let mut slice_offset = Vec::with_capacity(n * n.saturating_sub(1));
        let mut off = n * n * n;
        for m in 1..n {
            let t = tri(n - m);
            for _ in 0..n {
                slice_offset.push(off);
                off += t;
            }
        }
        TwoLayout {
            cutoff,
            slice_offset,
            len: off,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Start of the contiguous `k`-row of `(m, n, j)`.
    #[inline(always)]
    pub fn row(&self, m: usize, n: usize, j: usize) -> usize {
        let c = self.cutoff;
        if m == 0 {
            (n * c + j) * c
        } else {
            let l = c - m;
            // rows of length l, l - 1, ... packed back to back
            self.slice_offset[(m - 1) * c + n] + j * l - j * j.saturating_sub(1) / 2
        }
    }

    /// Number of valid `k` in the row `(m, n, j)`.
    #[inline(always)]
    pub fn row_len(&self, m: usize, n: usize, j: usize) -> usize {
        let c = self.cutoff;
        if m == 0 {
            // j + k <= 2c - 2 - n and k < c
            (2 * c - 1 - n - j).min(c)
        } else {
            c - m - j
        }
    }

    #[inline(always)]
    pub fn index(&self, m: usize, n: usize, j: usize, k: usize) -> usize {
        self.row(m, n, j) + k
    }
}

/// `0 + 1 + ... + l`.
#[inline(always)]
fn tri(l: usize) -> usize {
    l * (l + 1) / 2
}

/// Two-mode workspace retained for the gradient pass.
#[derive(Clone, Debug)]
pub struct TwoR {
    cutoff: usize,
    layout: TwoLayout,
    data: Vec<C64>,
    g_seed: Vec<C64>,
    pub(crate) counter: OpCounter,
    pub(crate) fingerprint: u64,
}

impl TwoR {
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn layout(&self) -> &TwoLayout {
        &self.layout
    }

    pub fn raw(&self) -> &[C64] {
        &self.data
    }

    /// `<G_{0,0}|` as an `N x N` row-major matrix over input indices `(p, q)`.
    pub fn g_seed(&self) -> &[C64] {
        &self.g_seed
    }

    #[inline(always)]
    pub fn get(&self, m: usize, n: usize, j: usize, k: usize) -> C64 {
        self.data[self.layout.index(m, n, j, k)]
    }

    pub fn output(&self) -> Vec<C64> {
        let c = self.cutoff;
        let mut out = Vec::with_capacity(c * c);
        for m in 0..c {
            for n in 0..c {
                out.push(self.get(m, n, 0, 0));
            }
        }
        out
    }
}

/// `G_{0,0,p,q}` for `p, q < N`: first along `q` at `p = 0`, then along `p`.
pub fn g_seed_matrix(cms: &CMuSigma, cutoff: usize) -> Vec<C64> {
    seed(cms, None, cutoff, &SqrtTable::new(cutoff))
}

/// Seed matrix, or with `extra = Some((g, d))` its derivative: the same
/// recurrence run on the derivative plus the product-rule terms `d * g`.
pub(crate) fn seed(cms: &CMuSigma, extra: Option<(&[C64], &CMuSigma)>, cutoff: usize, sq: &SqrtTable) -> Vec<C64> {
    let n = cutoff;
    let (mu3, mu4) = (cms.mu[2], cms.mu[3]);
    let (s33, s34, s44) = (cms.sigma[(2, 2)], cms.sigma[(2, 3)], cms.sigma[(3, 3)]);
    let mut g = vec![ZERO; n * n];
    g[0] = extra.map_or(cms.c, |(_, d)| d.c);
    for q in 1..n {
        let mut v = mu4 * g[q - 1];
        if q >= 2 {
            v -= s44 * sq[q - 1] * g[q - 2];
        }
        if let Some((b, d)) = extra {
            v += d.mu[3] * b[q - 1];
            if q >= 2 {
                v -= d.sigma[(3, 3)] * sq[q - 1] * b[q - 2];
            }
        }
        g[q] = v / sq[q];
    }
    for p in 1..n {
        for q in 0..n {
            let i1 = (p - 1) * n + q;
            let mut v = mu3 * g[i1];
            if p >= 2 {
                v -= s33 * sq[p - 1] * g[i1 - n];
            }
            if q >= 1 {
                v -= s34 * sq[q] * g[i1 - 1];
            }
            if let Some((b, d)) = extra {
                v += d.mu[2] * b[i1];
                if p >= 2 {
                    v -= d.sigma[(2, 2)] * sq[p - 1] * b[i1 - n];
                }
                if q >= 1 {
                    v -= d.sigma[(2, 3)] * sq[q] * b[i1 - 1];
                }
            }
            g[p * n + q] = v / sq[p];
        }
    }
    g
}

/// `R_{0,0}^(j,k) = <G_{0,0}| a^j b^k |psi>` for all `j, k < N`, written
/// through `put(j, k, value)`. Returns the number of products taken.
pub(crate) fn seed_r_block(
    g_seed: &[C64],
    psi: &[C64],
    cutoff: usize,
    sq: &SqrtTable,
    mut put: impl FnMut(usize, usize, C64),
) -> usize {
    let n = cutoff;
    let mut fmas = 0;
    let mut a_state = psi.to_vec();
    let mut ab_state = vec![ZERO; n * n];
    for j in 0..n {
        let rows = n - j;
        if j > 0 {
            // a lowers the first index over the rows still valid
            for p in 0..rows {
                let s = sq[p + 1];
                for q in 0..n {
                    a_state[p * n + q] = a_state[(p + 1) * n + q] * s;
                }
            }
        }
        ab_state[..rows * n].copy_from_slice(&a_state[..rows * n]);
        for k in 0..n {
            let cols = n - k;
            if k > 0 {
                for p in 0..rows {
                    let row = &mut ab_state[p * n..p * n + cols + 1];
                    for q in 0..cols {
                        row[q] = row[q + 1] * sq[q + 1];
                    }
                }
            }
            let mut acc = ZERO;
            for p in 0..rows {
                let g = &g_seed[p * n..p * n + cols];
                let s = &ab_state[p * n..p * n + cols];
                acc += g.iter().zip(s).map(|(x, y)| x * y).sum::<C64>();
            }
            fmas += rows * cols;
            put(j, k, acc);
        }
    }
    fmas
}

pub fn evolve_two(cms: &CMuSigma, psi: &FockState) -> Result<(FockState, RTensor)> {
    if psi.modes() != 2 || cms.modes() != 2 {
        return Err(Error::shape("two-mode state and parameters", psi.shape_string()));
    }
    let n = psi.cutoff();
    if n == 0 {
        return Err(Error::ZeroCutoff);
    }
    let sq = SqrtTable::new(n);
    let layout = TwoLayout::new(n);
    let mut data = vec![ZERO; layout.len()];
    let mut counter = OpCounter::default();

    let g_seed = seed(cms, None, n, &sq);
    let fmas = seed_r_block(&g_seed, psi.amplitudes(), n, &sq, |j, k, v| {
        data[layout.index(0, 0, j, k)] = v;
    });
    counter.add(n * n, fmas);
    fill(&layout, &mut data, &sq, cms, None, &mut counter);

    let r = TwoR {
        cutoff: n,
        layout,
        data,
        g_seed,
        counter,
        fingerprint: super::workspace_fingerprint(cms, psi),
    };
    let out = FockState::new(2, n, r.output())?;
    Ok((out, RTensor::Two(r)))
}

/// Every `R_{m,n}^(j,k)` except the seed block `(0, 0)`, which must already
/// be in `data`. With `extra = Some((r, d))` this computes the derivative
/// workspace instead: `data` holds `dR` and the product-rule terms `d * r`
/// are added.
pub(crate) fn fill(
    layout: &TwoLayout,
    data: &mut [C64],
    sq: &SqrtTable,
    cms: &CMuSigma,
    extra: Option<(&[C64], &CMuSigma)>,
    counter: &mut OpCounter,
) {
    let n = layout.cutoff;

    // m = 0: n recurrence with [mu_2, Sigma_22, Sigma_23, Sigma_24]
    let coef0 = |c: &CMuSigma| [c.mu[1], c.sigma[(1, 1)], c.sigma[(1, 2)], c.sigma[(1, 3)]];
    let [mu2, s22, s23, s24] = coef0(cms);
    let dc0 = extra.map(|(_, d)| coef0(d));
    for nn in 1..n {
        let inv = 1.0 / sq[nn];
        let w2 = sq[nn - 1] * inv;
        for j in 0..n {
            let len = layout.row_len(0, nn, j);
            let dst = layout.row(0, nn, j);
            let p1 = layout.row(0, nn - 1, j);
            let p1a = (j + 1 < n).then(|| layout.row(0, nn - 1, j + 1));
            let p2 = (nn >= 2).then(|| layout.row(0, nn - 2, j));
            let terms = |src: &[C64], [c_mu, c_s22, c_s23, c_s24]: [C64; 4], k: usize| {
                let mut v = c_mu * src[p1 + k];
                if let Some(a) = p1a {
                    v -= c_s23 * src[a + k];
                }
                if k + 1 < n {
                    v -= c_s24 * src[p1 + k + 1];
                }
                let mut v = v * inv;
                if let Some(b) = p2 {
                    v -= c_s22 * w2 * src[b + k];
                }
                v
            };
            for k in 0..len {
                let mut v = terms(data, [mu2, s22, s23, s24], k);
                if let (Some((base, _)), Some(dc)) = (extra, dc0) {
                    v += terms(base, dc, k);
                }
                data[dst + k] = v;
            }
            counter.add(len, 4 * len);
        }
    }

    // m >= 1: m recurrence with [mu_1, Sigma_11, Sigma_12, Sigma_13, Sigma_14]
    let coef = |c: &CMuSigma| {
        [
            c.mu[0],
            c.sigma[(0, 0)],
            c.sigma[(0, 1)],
            c.sigma[(0, 2)],
            c.sigma[(0, 3)],
        ]
    };
    let own = coef(cms);
    let dcoef = extra.map(|(_, d)| coef(d));
    for m in 1..n {
        let inv = 1.0 / sq[m];
        let w2 = sq[m - 1] * inv;
        for nn in 0..n {
            let w3 = sq[nn] * inv;
            for j in 0..n - m {
                let len = n - m - j;
                let dst = layout.row(m, nn, j);
                let p1 = layout.row(m - 1, nn, j);
                let p1a = layout.row(m - 1, nn, j + 1);
                let p2 = (m >= 2).then(|| layout.row(m - 2, nn, j));
                let pn = (nn >= 1).then(|| layout.row(m - 1, nn - 1, j));
                let terms = |src: &[C64], [c_mu, c_s11, c_s12, c_s13, c_s14]: [C64; 5], k: usize| {
                    let mut v = (c_mu * src[p1 + k] - c_s13 * src[p1a + k] - c_s14 * src[p1 + k + 1]) * inv;
                    if let Some(b) = p2 {
                        v -= c_s11 * w2 * src[b + k];
                    }
                    if let Some(b) = pn {
                        v -= c_s12 * w3 * src[b + k];
                    }
                    v
                };
                for k in 0..len {
                    let mut v = terms(data, own, k);
                    if let (Some((base, _)), Some(dc)) = (extra, dcoef) {
                        v += terms(base, dc, k);
                    }
                    data[dst + k] = v;
                }
                counter.add(len, 5 * len);
            }
        }
    }
}
