//! Direct evolution of Fock states under a Gaussian transformation.
//!
//! Instead of building the transformation tensor `G` and contracting it with
//! the input, the output is read off the first column of the workspace
//! `R_m^(k) = <G_m| a^k |psi>` (one mode) or `R_{m,n}^(j,k) = <G_{m,n}| a^j b^k |psi>`
//! (two modes). Each entry of `R` is a short linear combination of
//! neighbours, so only a triangle of the index space is ever touched.

pub(crate) mod full;
pub(crate) mod kerr;
pub(crate) mod large_r;
pub(crate) mod single;
pub(crate) mod two;

pub use full::{contract, full_g_tensor, full_g_tensor_with_limit, FullTensor, DEFAULT_FULL_TENSOR_LIMIT};
pub use kerr::apply_kerr;
pub use large_r::evolve_single_large_r;
pub use single::{evolve_single, g_first_row, SingleR};
pub use two::{evolve_two, g_seed_matrix, TwoLayout, TwoR};

use crate::error::{Error, Result};
use crate::params::CMuSigma;
use crate::state::FockState;
use crate::C64;

/// Work done by one evolution call.
///
/// `scalar_fmas` counts complex multiply-accumulate steps, one per term of a
/// recurrence or per product in a dot product.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub elements_computed: u64,
    pub scalar_fmas: u64,
}

impl OpCounter {
    #[inline]
    pub(crate) fn add(&mut self, elements: usize, fmas: usize) {
        self.elements_computed += elements as u64;
        self.scalar_fmas += fmas as u64;
    }
}

/// Workspace retained from a forward evolution for the gradient pass.
#[derive(Clone, Debug)]
pub enum RTensor {
    Single(SingleR),
    Two(TwoR),
}

impl RTensor {
    pub fn modes(&self) -> usize {
        match self {
            RTensor::Single(_) => 1,
            RTensor::Two(_) => 2,
        }
    }

    pub fn cutoff(&self) -> usize {
        match self {
            RTensor::Single(r) => r.cutoff(),
            RTensor::Two(r) => r.cutoff(),
        }
    }

    pub fn counter(&self) -> OpCounter {
        match self {
            RTensor::Single(r) => r.counter,
            RTensor::Two(r) => r.counter,
        }
    }

    /// Hash of the `(C, mu, Sigma, psi)` this workspace was built from.
    pub fn fingerprint(&self) -> u64 {
        match self {
            RTensor::Single(r) => r.fingerprint,
            RTensor::Two(r) => r.fingerprint,
        }
    }

    /// Output amplitudes (the first column of `R`).
    pub fn output(&self) -> Vec<C64> {
        match self {
            RTensor::Single(r) => r.output(),
            RTensor::Two(r) => r.output(),
        }
    }
}

/// Operation counts of the evolution that produced `r`.
pub fn op_counts(r: &RTensor) -> OpCounter {
    r.counter()
}

/// Dispatch on the number of modes.
pub fn evolve(cms: &CMuSigma, psi: &FockState) -> Result<(FockState, RTensor)> {
    if cms.modes() != psi.modes() {
        return Err(Error::shape(format!("{}-mode state", cms.modes()), psi.shape_string()));
    }
    match psi.modes() {
        1 => evolve_single(cms, psi),
        2 => evolve_two(cms, psi),
        m => Err(Error::UnsupportedModes(m)),
    }
}

/// Identifies the inputs of an evolution so gradient passes can reject a
/// workspace built from different parameters or a different state.
pub fn workspace_fingerprint(cms: &CMuSigma, psi: &FockState) -> u64 {
    use std::hash::{Hash, Hasher};
    let mut h = std::collections::hash_map::DefaultHasher::new();
    let mut put = |z: &C64| {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    };
    put(&cms.c);
    cms.mu.iter().for_each(&mut put);
    cms.sigma.as_slice().iter().for_each(&mut put);
    psi.amplitudes().iter().for_each(&mut put);
    h.finish()
}

/// Closed-form element count of the single-mode workspace: `N (N + 1) / 2`.
pub fn single_element_count(cutoff: usize) -> u64 {
    (cutoff * (cutoff + 1) / 2) as u64
}

#[cfg(test)]
mod tests;
