//! Spectral analysis of the correlated random walk on a finite path.
//!
//! The walk lives on vertices `0..=n` with an internal `L`/`R` label per
//! vertex. One step is `U = S C`: a per-vertex column-stochastic coin followed
//! by a label-dependent shift. For coins sharing their second eigenvalue
//! `nu2`, the full eigendecomposition of `U` is assembled from the eigenpairs
//! of a `(n+1) x (n+1)` Jacobi matrix plus two explicit pairs, and the
//! limiting vertex distribution has a product closed form.
//!
//! Modules, bottom-up:
//! - [`model`]: coins, shift, `U`, states and marginals
//! - [`tridiag`]: symmetric tridiagonal eigensolver
//! - [`jacobi`]: `B`, `pi`, `J` and the eigenpairs of `B`
//! - [`spectral`]: eigenpairs of `U`, spectral evolution, limiting distribution
//! - [`simulate`]: Monte Carlo sampler and dense-iteration oracle
//! - [`verify`]: the invariant suite and random model generation
//! - [`config`]: JSON model files
//! - [`format`]: `%.15g`-style number output

pub mod config;
pub mod format;
pub mod jacobi;
pub mod model;
pub mod simulate;
pub mod spectral;
pub mod tridiag;
pub mod verify;

pub use config::{load_model, parse_model, ConfigError, ModelConfig};
pub use model::{CoinParams, Distribution, Label, ModelError, PathCrwModel, StateVector};
pub use spectral::{
    full_decomposition, limiting_distribution, SpectralDecomposition, SpectralError,
};
