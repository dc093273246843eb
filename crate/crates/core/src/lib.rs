//! Differentiable evolution of truncated Fock-basis states under general
//! Gaussian transformations.
//!
//! The output amplitudes are computed directly from a triangular workspace
//! `R` (see [`evolve`]) instead of materializing the full transformation
//! tensor, which is kept only as an oracle and for input backpropagation.
//! Gradients with respect to every gate parameter are obtained by
//! differentiating the same recurrences ([`grad`]), and layered
//! Gaussian + Kerr circuits are trained with [`optim`].

pub mod circuit;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod grad;
pub mod linalg;
pub mod optim;
pub mod params;
pub mod state;

pub use num_complex::Complex64 as C64;

pub use circuit::{Circuit, Layer, LayerOrder, TrainingSet};
pub use error::{Error, Result};
pub use evolve::{OpCounter, RTensor};
pub use params::{CMuSigma, GaussianParams, ParamKind};
pub use state::FockState;
