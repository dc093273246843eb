use crate::error::{Error, Result};
use crate::linalg::SqrtTable;
use crate::params::CMuSigma;
use crate::state::FockState;
use crate::C64;

use super::OpCounter;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Default cap on `N^(2M)` entries of the full tensor (256 MiB of amplitudes).
pub const DEFAULT_FULL_TENSOR_LIMIT: usize = 1 << 24;

/// Full transformation tensor, row-major over `(out_1..out_M, in_1..in_M)`.
#[derive(Clone, Debug)]
pub struct FullTensor {
    pub modes: usize,
    pub cutoff: usize,
    pub data: Vec<C64>,
    pub counter: OpCounter,
}

impl FullTensor {
    /// Size of the state space, `N^M`.
    pub fn state_len(&self) -> usize {
        self.cutoff.pow(self.modes as u32)
    }

    #[inline]
    pub fn get(&self, out: usize, inp: usize) -> C64 {
        self.data[out * self.state_len() + inp]
    }
}

pub fn full_g_tensor(cms: &CMuSigma, cutoff: usize, modes: usize) -> Result<FullTensor> {
    full_g_tensor_with_limit(cms, cutoff, modes, DEFAULT_FULL_TENSOR_LIMIT)
}

/// Every entry of `G` from the multi-index recurrence, filled in row-major
/// order so that all lowered indices are already available.
pub fn full_g_tensor_with_limit(cms: &CMuSigma, cutoff: usize, modes: usize, limit: usize) -> Result<FullTensor> {
    if !(1..=2).contains(&modes) {
        return Err(Error::UnsupportedModes(modes));
    }
    if cms.modes() != modes {
        return Err(Error::shape(
            format!("{modes}-mode triple"),
            format!("{}-mode triple", cms.modes()),
        ));
    }
    if cutoff == 0 {
        return Err(Error::ZeroCutoff);
    }
    let rank = 2 * modes;
    let entries = (cutoff as u128).pow(rank as u32);
    if entries > limit as u128 {
        return Err(Error::MemoryBudget {
            entries: entries.min(usize::MAX as u128) as usize,
            limit,
        });
    }
    let entries = entries as usize;
    let sq = SqrtTable::new(cutoff);
    let strides: Vec<usize> = (0..rank).map(|i| cutoff.pow((rank - 1 - i) as u32)).collect();

    let mut data = vec![ZERO; entries];
    let mut counter = OpCounter::default();
    data[0] = cms.c;
    counter.add(1, 0);
    let mut idx = vec![0usize; rank];
    for flat in 1..entries {
        // increment the multi-index
        let mut ax = rank - 1;
        loop {
            idx[ax] += 1;
            if idx[ax] < cutoff {
                break;
            }
            idx[ax] = 0;
            ax -= 1;
        }
        // raise along the last nonzero axis
        let i = (0..rank).rev().find(|&a| idx[a] > 0).expect("nonzero index");
        let base = flat - strides[i];
        let mut v = cms.mu[i] * data[base];
        let mut terms = 1;
        for l in 0..rank {
            let kl = if l == i { idx[l] - 1 } else { idx[l] };
            if kl > 0 {
                v -= cms.sigma[(i, l)] * sq[kl] * data[base - strides[l]];
                terms += 1;
            }
        }
        data[flat] = v / sq[idx[i]];
        counter.add(1, terms);
    }
    Ok(FullTensor {
        modes,
        cutoff,
        data,
        counter,
    })
}

/// `out_k = sum_k' G[k, k'] psi_k'`.
pub fn contract(g: &FullTensor, psi: &FockState) -> Result<FockState> {
    if psi.modes() != g.modes || psi.cutoff() != g.cutoff {
        return Err(Error::shape(
            format!("modes={} cutoff={}", g.modes, g.cutoff),
            psi.shape_string(),
        ));
    }
    let len = g.state_len();
    let amp = psi.amplitudes();
    let out = g
        .data
        .chunks_exact(len)
        .map(|row| row.iter().zip(amp).map(|(a, b)| a * b).sum())
        .collect();
    FockState::new(g.modes, g.cutoff, out)
}
