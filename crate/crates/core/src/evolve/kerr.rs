use crate::error::{Error, Result};
use crate::state::FockState;
use crate::C64;

/// `exp(i sum_i kappa_i k_i^2)` for the flat index of `psi`.
pub(crate) fn kerr_phases(kappa: &[f64], modes: usize, cutoff: usize) -> Vec<C64> {
    let len = cutoff.pow(modes as u32);
    (0..len)
        .map(|flat| {
            let angle = match modes {
                1 => kappa[0] * (flat * flat) as f64,
                _ => {
                    let (a, b) = (flat / cutoff, flat % cutoff);
                    kappa[0] * (a * a) as f64 + kappa[1] * (b * b) as f64
                }
            };
            C64::from_polar(1.0, angle)
        })
        .collect()
}

/// Single-mode Kerr gate `exp(i kappa (a^dag a)^2)` on every mode.
pub fn apply_kerr(kappa: &[f64], psi: &FockState) -> Result<FockState> {
    if kappa.len() != psi.modes() {
        return Err(Error::shape(format!("{} Kerr strengths", psi.modes()), kappa.len()));
    }
    let phases = kerr_phases(kappa, psi.modes(), psi.cutoff());
    let amp = psi.amplitudes().iter().zip(&phases).map(|(a, p)| a * p).collect();
    FockState::new(psi.modes(), psi.cutoff(), amp)
}
