//! Online optimization of noisy, expensive functions with a random Fourier
//! expansion (RFE) surrogate.
//!
//! The surrogate `g(x) = sum_k c_k cos(w_k^T x + b_k)` keeps its frequencies
//! `w_k` and phases `b_k` fixed after sampling; only the weights `c_k` are
//! learned. Each new measurement updates the weights with a square-root
//! recursive least-squares step whose cost is `O(D^2)` regardless of how many
//! measurements came before. The optimizer then minimizes the surrogate over a
//! box with a projected L-BFGS solver and perturbs the minimizer to choose the
//! next measurement point.
//!
//! Module map:
//!
//! * [`rfe`] - the expansion itself, frequency laws and batch ridge fits.
//! * [`rls`] - inverse-QR recursive least squares on the weights.
//! * [`lbfgs`] - box-constrained quasi-Newton solver used on the surrogate.
//! * [`engine`] - the measurement / update / solve / perturb loop.
//! * [`hyperparam`] - frequency-law selection from a Fourier magnitude and the
//!   regularization upper-bound estimate.
//! * [`theory`] - Monte-Carlo and quadrature checks of the estimator theory.

pub mod engine;
pub mod error;
pub mod hyperparam;
pub mod lbfgs;
mod linalg;
pub mod quad;
pub mod rfe;
pub mod rls;
pub mod rng;
pub mod theory;

pub use engine::{run, DoneConfig, DoneOptimizer, IterationRecord, Objective, RunTrace};
pub use error::{DoneError, Result};
pub use lbfgs::{minimize, SearchBox, SmoothObjective, SolverOptions, SolverReport};
pub use rfe::{Dataset, FreqDistribution, RfeModel, TabulatedMarginal};
pub use rls::RlsState;
