use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

/// Pure state of `modes` optical modes truncated at `cutoff` photons per mode.
///
/// Amplitudes are stored row-major: for two modes `amp[m * cutoff + n]` is
/// `<m, n|psi>`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    modes: usize,
    cutoff: usize,
    amp: Vec<C64>,
}

impl FockState {
    pub fn new(modes: usize, cutoff: usize, amp: Vec<C64>) -> Result<Self> {
        check_shape(modes, cutoff)?;
        let len = cutoff.pow(modes as u32);
        if amp.len() != len {
            return Err(Error::shape(format!("{len} amplitudes"), amp.len()));
        }
        Ok(FockState { modes, cutoff, amp })
    }

    pub fn zeros(modes: usize, cutoff: usize) -> Result<Self> {
        check_shape(modes, cutoff)?;
        Ok(FockState {
            modes,
            cutoff,
            amp: vec![C64::new(0.0, 0.0); cutoff.pow(modes as u32)],
        })
    }

    pub fn vacuum(modes: usize, cutoff: usize) -> Result<Self> {
        Self::fock(modes, cutoff, &vec![0; modes])
    }

    /// Number state `|n_1, ..., n_M>`.
    pub fn fock(modes: usize, cutoff: usize, photons: &[usize]) -> Result<Self> {
        let mut s = Self::zeros(modes, cutoff)?;
        if photons.len() != modes {
            return Err(Error::shape(format!("{modes} photon numbers"), photons.len()));
        }
        if let Some(&n) = photons.iter().find(|&&n| n >= cutoff) {
            return Err(Error::InvalidParams(format!(
                "photon number {n} not below cutoff {cutoff}"
            )));
        }
        let idx = s.flat_index(photons);
        s.amp[idx] = C64::new(1.0, 0.0);
        Ok(s)
    }

    /// Random state with i.i.d. complex Gaussian amplitudes, normalized.
    pub fn random<R: Rng + ?Sized>(modes: usize, cutoff: usize, rng: &mut R) -> Result<Self> {
        let mut s = Self::zeros(modes, cutoff)?;
        for z in s.amp.iter_mut() {
            *z = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
        s.normalize();
        Ok(s)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amp
    }

    pub fn len(&self) -> usize {
        self.amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amp.is_empty()
    }

    pub fn flat_index(&self, photons: &[usize]) -> usize {
        photons.iter().fold(0, |acc, &n| acc * self.cutoff + n)
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.modes];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.cutoff;
            flat /= self.cutoff;
        }
        idx
    }

    pub fn get(&self, photons: &[usize]) -> C64 {
        self.amp[self.flat_index(photons)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amp.iter_mut().for_each(|z| *z /= n);
        }
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        self.check_same_shape(other)?;
        Ok(self.amp.iter().zip(&other.amp).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<a|b>| / (|a| |b|)`, insensitive to global phase and normalization.
    pub fn normalized_overlap(&self, other: &FockState) -> Result<f64> {
        let ov = self.inner(other)?.norm();
        let denom = (self.norm_sqr() * other.norm_sqr()).sqrt();
        Ok(if denom > 0.0 { ov / denom } else { 0.0 })
    }

    pub fn max_abs_diff(&self, other: &FockState) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_finite(&self) -> bool {
        self.amp.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn check_same_shape(&self, other: &FockState) -> Result<()> {
        if self.modes != other.modes || self.cutoff != other.cutoff {
            return Err(Error::shape(
                format!("modes={} cutoff={}", self.modes, self.cutoff),
                format!("modes={} cutoff={}", other.modes, other.cutoff),
            ));
        }
        Ok(())
    }

    pub fn shape_string(&self) -> String {
        format!("modes={} cutoff={}", self.modes, self.cutoff)
    }
}

fn check_shape(modes: usize, cutoff: usize) -> Result<()> {
    if !(1..=2).contains(&modes) {
        return Err(Error::UnsupportedModes(modes));
    }
    if cutoff == 0 {
        return Err(Error::ZeroCutoff);
    }
    Ok(())
}
