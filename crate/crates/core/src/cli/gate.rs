//! Gate files for the `evolve` command.
//!
//! ```toml
//! gamma = [[0.5, 0.0]]     # one [re, im] pair per mode
//! r = [0.3]
//! delta = [0.0]
//! phi = [0.0]
//! bs_pre = [0.1, 0.2]      # two modes only: [theta, varphi]
//! bs_post = [0.0, 0.0]
//! kappa = [0.0]            # optional Kerr strengths applied after the gate
//! ```
//!
//! Missing vectors default to zeros.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::params::GaussianParams;
use crate::C64;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSpec {
    pub gamma: Vec<[f64; 2]>,
    pub r: Vec<f64>,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
    pub bs_pre: Option<[f64; 2]>,
    pub bs_post: Option<[f64; 2]>,
    pub kappa: Vec<f64>,
}

impl GateSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Gaussian parameters and Kerr strengths for `modes` modes.
    pub fn build(&self, modes: usize) -> Result<(GaussianParams, Vec<f64>)> {
        let mut p = GaussianParams::identity(modes)?;
        let fill = |name: &str, src: &[f64], dst: &mut Vec<f64>| -> Result<()> {
            match src.len() {
                0 => Ok(()),
                n if n == modes => {
                    dst.copy_from_slice(src);
                    Ok(())
                }
                n => Err(Error::Config(format!("{name} has {n} entries, expected {modes}"))),
            }
        };
        match self.gamma.len() {
            0 => {}
            n if n == modes => p.gamma = self.gamma.iter().map(|[a, b]| C64::new(*a, *b)).collect(),
            n => return Err(Error::Config(format!("gamma has {n} entries, expected {modes}"))),
        }
        fill("r", &self.r, &mut p.r)?;
        fill("delta", &self.delta, &mut p.delta)?;
        fill("phi", &self.phi, &mut p.phi)?;
        if modes == 1 && (self.bs_pre.is_some() || self.bs_post.is_some()) {
            return Err(Error::Config("beamsplitters need two modes".into()));
        }
        if let Some([t, v]) = self.bs_pre {
            p.bs_pre = Some((t, v));
        }
        if let Some([t, v]) = self.bs_post {
            p.bs_post = Some((t, v));
        }
        let mut kappa = vec![0.0; modes];
        fill("kappa", &self.kappa, &mut kappa)?;
        p.validate()?;
        Ok((p, kappa))
    }
}
