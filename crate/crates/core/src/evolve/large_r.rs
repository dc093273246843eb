use crate::error::{Error, Result};
use crate::linalg::SqrtTable;
use crate::params::{compute_cmusigma_large_r, GaussianParams};
use crate::state::FockState;
use crate::C64;

use super::single::first_row;

/// Single-mode evolution for large squeezing.
///
/// With `sech r -> 0` the `a`-lowering term drops out of the row recurrence,
/// so the whole output follows from the single number `R_0^(0) = <G_0|psi>`
/// in `O(N)`. Amplitudes are not renormalized.
pub fn evolve_single_large_r(p: &GaussianParams, psi: &FockState) -> Result<FockState> {
    if p.modes() != 1 || psi.modes() != 1 {
        return Err(Error::UnsupportedModes(p.modes().max(psi.modes())));
    }
    let cms = compute_cmusigma_large_r(p)?;
    let n = psi.cutoff();
    let sq = SqrtTable::new(n);
    let g = first_row(&cms, None, n, &sq);
    let r0: C64 = g.iter().zip(psi.amplitudes()).map(|(a, b)| a * b).sum();

    let mu1 = cms.mu[0];
    let s11 = cms.sigma[(0, 0)];
    let mut out = vec![C64::new(0.0, 0.0); n];
    out[0] = r0;
    for m in 1..n {
        let mut v = mu1 * out[m - 1];
        if m >= 2 {
            v -= s11 * sq[m - 1] * out[m - 2];
        }
        out[m] = v / sq[m];
    }
    FockState::new(1, n, out)
}
