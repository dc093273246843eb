//! Experiment configuration files (TOML).
//!
//! ```toml
//! task = "noon5"
//! modes = 2
//! cutoff = 10
//! layers = 20
//! steps = 3000
//! seeds = [0, 1, 2, 3, 4]
//! fidelity_floor = 0.99
//! output_dir = "runs/noon5"        # optional, --out overrides
//! layer_order = "gaussian-then-kerr"
//!
//! [target]
//! kind = "noon"                    # vacuum | fock | noon | file | hex-gkp
//! n = 5
//!
//! [input]                          # optional, defaults to the vacuum
//! kind = "vacuum"
//!
//! [optimizer]                      # optional, every key has a default
//! algorithm = "adaptive-moments"   # or "plain-sgd"
//! learning_rate = 0.01
//! ```
//!
//! Several training pairs can be given instead of `[target]`/`[input]` as
//! `[[pairs]]` tables, each with `input` and `target` sub-tables. Relative
//! state-file paths are resolved against the directory of the config file.

use std::f64::consts::FRAC_1_SQRT_2;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::circuit::{LayerOrder, TrainingSet};
use crate::error::{Error, Result};
use crate::optim::{Algorithm, OptimizerConfig};
use crate::state::FockState;
use crate::C64;

use super::statefile::read_state;

/// Photon numbers of a Fock state: a bare number for one mode, a list otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Photons {
    One(usize),
    Many(Vec<usize>),
}

impl Photons {
    fn resolve(&self, modes: usize) -> Result<Vec<usize>> {
        let v = match self {
            Photons::One(n) if modes == 1 => vec![*n],
            Photons::One(n) => {
                return Err(Error::Config(format!(
                    "fock n = {n} is ambiguous for {modes} modes; give a list such as n = [{n}, 0]"
                )))
            }
            Photons::Many(v) => v.clone(),
        };
        if v.len() != modes {
            return Err(Error::Config(format!(
                "fock state needs {modes} photon numbers, got {}",
                v.len()
            )));
        }
        Ok(v)
    }
}

/// How to obtain an input or target state.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    #[default]
    Vacuum,
    Fock {
        n: Photons,
    },
    Noon {
        n: usize,
    },
    File {
        path: PathBuf,
    },
    /// Hex GKP targets are not constructed here and must come from a file.
    HexGkp {
        path: Option<PathBuf>,
    },
}

impl StateSpec {
    /// Parse the compact command-line form: `vacuum`, `fock:1`, `fock:1,0`,
    /// `noon:5`, `file:PATH`.
    pub fn parse_compact(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|e| Error::Config(format!("bad photon number {t:?} in {s:?}: {e}")))
        };
        match kind {
            "vacuum" => Ok(StateSpec::Vacuum),
            "fock" => {
                let v: Vec<usize> = arg.split(',').map(num).collect::<Result<_>>()?;
                Ok(StateSpec::Fock {
                    n: if v.len() == 1 {
                        Photons::One(v[0])
                    } else {
                        Photons::Many(v)
                    },
                })
            }
            "noon" => Ok(StateSpec::Noon { n: num(arg)? }),
            "file" if !arg.is_empty() => Ok(StateSpec::File { path: arg.into() }),
            "hex-gkp" => Ok(StateSpec::HexGkp {
                path: (!arg.is_empty()).then(|| arg.into()),
            }),
            _ => Err(Error::Config(format!(
                "unknown state spec {s:?} (expected vacuum, fock:N, noon:N, file:PATH or hex-gkp:PATH)"
            ))),
        }
    }
}

/// Build the state described by `spec`. Files are resolved against `base`.
pub fn gen_target(spec: &StateSpec, modes: usize, cutoff: usize, base: &Path) -> Result<FockState> {
    match spec {
        StateSpec::Vacuum => FockState::vacuum(modes, cutoff),
        StateSpec::Fock { n } => {
            let photons = n.resolve(modes)?;
            if let Some(&k) = photons.iter().find(|&&k| k >= cutoff) {
                return Err(Error::Config(format!(
                    "photon number {k} does not fit below cutoff {cutoff}"
                )));
            }
            FockState::fock(modes, cutoff, &photons)
        }
        StateSpec::Noon { n } => {
            if modes != 2 {
                return Err(Error::Config(format!("a NOON state needs 2 modes, config has {modes}")));
            }
            if *n >= cutoff {
                return Err(Error::Config(format!(
                    "NOON n = {n} does not fit below cutoff {cutoff}"
                )));
            }
            if *n == 0 {
                return Err(Error::Config("NOON n must be positive".into()));
            }
            let mut psi = FockState::zeros(2, cutoff)?;
            let a = C64::new(FRAC_1_SQRT_2, 0.0);
            psi.amplitudes_mut()[n * cutoff] = a;
            psi.amplitudes_mut()[*n] = a;
            Ok(psi)
        }
        StateSpec::File { path } => load_normalized(&base.join(path), modes, cutoff),
        StateSpec::HexGkp { path: Some(path) } => {
            let p = base.join(path);
            if !p.exists() {
                return Err(hex_gkp_missing(Some(&p)));
            }
            load_normalized(&p, modes, cutoff)
        }
        StateSpec::HexGkp { path: None } => Err(hex_gkp_missing(None)),
    }
}

fn hex_gkp_missing(p: Option<&Path>) -> Error {
    let which = p.map_or("no target file was given".to_string(), |p| {
        format!("{} does not exist", p.display())
    });
    Error::Config(format!(
        "the Hex GKP target is not generated by this tool ({which}); \
         build it with an external GKP construction and supply it as a state file"
    ))
}

fn load_normalized(path: &Path, modes: usize, cutoff: usize) -> Result<FockState> {
    let mut psi = read_state(path)?;
    if psi.modes() != modes || psi.cutoff() != cutoff {
        return Err(Error::Config(format!(
            "{} has {}, config expects modes={modes} cutoff={cutoff}",
            path.display(),
            psi.shape_string()
        )));
    }
    let dev = (psi.norm_sqr().sqrt() - 1.0).abs();
    if dev > 1e-6 {
        return Err(Error::Config(format!(
            "{} has norm off by {dev:e}; states must be normalized to within 1e-6",
            path.display()
        )));
    }
    psi.normalize();
    Ok(psi)
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerSection {
    pub algorithm: Algorithm,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
    pub init_scale: f64,
    pub kl_weight: f64,
    pub loss_floor: Option<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        OptimizerSection {
            algorithm: d.algorithm,
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon_hat: d.epsilon_hat,
            init_scale: d.init_scale,
            kl_weight: d.kl_weight,
            loss_floor: d.loss_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSpec {
    #[serde(default)]
    pub input: StateSpec,
    pub target: StateSpec,
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: String,
    pub modes: usize,
    pub cutoff: usize,
    pub layers: usize,
    pub steps: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// A run succeeds when some seed reaches this mean fidelity.
    #[serde(default)]
    pub fidelity_floor: Option<f64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub layer_order: LayerOrder,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub input: StateSpec,
    #[serde(default)]
    pub target: Option<StateSpec>,
    #[serde(default)]
    pub pairs: Vec<PairSpec>,
    /// Directory relative state-file paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
    /// The text the config was parsed from, archived next to the results.
    #[serde(skip)]
    pub source: String,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        cfg.source = text.to_string();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(1..=2).contains(&self.modes) {
            return bad(format!("modes must be 1 or 2, got {}", self.modes));
        }
        if self.cutoff == 0 || self.layers == 0 || self.steps == 0 {
            return bad("cutoff, layers and steps must be positive".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if let Some(f) = self.fidelity_floor {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("fidelity_floor must lie in [0, 1], got {f}"));
            }
        }
        match (&self.target, self.pairs.is_empty()) {
            (None, true) => return bad("give either [target] or [[pairs]]".into()),
            (Some(_), false) => return bad("[target] and [[pairs]] are mutually exclusive".into()),
            _ => {}
        }
        let noon = |s: &StateSpec| matches!(s, StateSpec::Noon { .. });
        let any_noon = self.target.iter().chain(self.pairs.iter().map(|p| &p.target)).any(noon)
            || noon(&self.input)
            || self.pairs.iter().any(|p| noon(&p.input));
        if any_noon && self.modes != 2 {
            return bad("NOON states require modes = 2".into());
        }
        self.optimizer_config(0).validate()
    }

    pub fn optimizer_config(&self, seed: u64) -> OptimizerConfig {
        let o = &self.optimizer;
        OptimizerConfig {
            algorithm: o.algorithm,
            learning_rate: o.learning_rate,
            steps: self.steps,
            seed,
            beta1: o.beta1,
            beta2: o.beta2,
            epsilon_hat: o.epsilon_hat,
            init_scale: o.init_scale,
            kl_weight: o.kl_weight,
            loss_floor: o.loss_floor,
        }
    }

    pub fn training_set(&self) -> Result<TrainingSet> {
        let make = |s: &StateSpec| gen_target(s, self.modes, self.cutoff, &self.base_dir);
        let pairs = match &self.target {
            Some(t) => vec![(make(&self.input)?, make(t)?)],
            None => self
                .pairs
                .iter()
                .map(|p| Ok((make(&p.input)?, make(&p.target)?)))
                .collect::<Result<_>>()?,
        };
        TrainingSet::new(pairs)
    }
}
