//! Limiting spectral distribution, support gaps and exact eigenvalue
//! separation for information-plus-noise sample covariance matrices
//!
//! ```text
//! B_n = (1/n) (R + T^{1/2} X)(R + T^{1/2} X)*
//! ```
//!
//! with `R` deterministic `p × n`, `T` deterministic `p × p` commuting with
//! `R R*`, and `X` standardized noise. The joint spectrum of `(1/n) R R*`
//! and `T` is a finite discrete distribution ([`JointSpectrum`]).

pub mod cli;
pub mod error;
pub mod roots;
pub mod separation;
pub mod simulate;
pub mod spectrum;
pub mod stieltjes;
pub mod support;

pub use error::{Error, Result};
pub use separation::{Convention, SeparationPrediction};
pub use spectrum::{JointSpectrum, ModelConfig, Pair, SpectrumAtom};
pub use stieltjes::{SolveSettings, StieltjesPair};
pub use support::{DensityCurve, GapSearch, RealBranch, SpectralGap};
