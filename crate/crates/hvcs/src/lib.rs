//! Joint-sparse recovery of Hilbert-space-valued coefficient fields.
//!
//! The library recovers the coefficients of an orthonormal polynomial
//! expansion `u(y) = sum_nu c_nu Psi_nu(y)` from few random evaluations of
//! `u`, where each coefficient `c_nu` lives in a (discretized) Hilbert space
//! `V`. Recovery solves the mixed-norm problem
//!
//! ```text
//!     min_z  ||z||_{V,1} + (mu/2) ||A z - u||_{V,2}^2
//! ```
//!
//! by forward-backward splitting: a gradient step on the quadratic fidelity
//! term followed by row-wise soft thresholding of the `V`-norms. The same
//! machinery covers classical joint-sparse / multiple-measurement-vector
//! recovery (`V = R^K` with the Euclidean inner product) and energy-norm
//! recovery of parameterized PDE solution maps (`V = H^1_0` with a stiffness
//! Gram matrix).
//!
//! Module map:
//!
//! - [`multiindex`]: total-degree multi-index sets indexing the basis.
//! - [`basis`]: tensor-product orthonormal Legendre evaluation and its
//!   uniform bound.
//! - [`hilbert`]: Hilbert-valued vectors (`N x K` coefficient matrices with a
//!   shared inner product) and the mixed norms.
//! - [`operator`]: the normalized sampling matrix, its adjoint, and spectral
//!   norm estimation.
//! - [`solver`]: the forward-backward iteration, stopping tests, and a
//!   continuation wrapper for residual-constrained recovery.
//! - [`analysis`]: brute-force restricted isometry constants, a randomized
//!   null-space-property falsifier, and sample-complexity bookkeeping.
//! - [`pde`]: a parameterized 1D elliptic model problem generating
//!   Hilbert-valued samples, with its discrete `H^1_0` Gram matrix.
//! - [`expansion`]: recovered expansions: evaluation, mean/std extraction,
//!   truncation error.
//! - [`harness`]: end-to-end experiment driver (sampling, recovery,
//!   baselines, error metrics, CSV/JSON reporting).
//!
//! See the crate `examples/` directory for one runnable example per
//! capability; the `hvcs` binary exposes the same pipeline as a CLI.

pub mod analysis;
pub mod basis;
pub mod error;
pub mod expansion;
pub mod harness;
pub mod hilbert;
mod linalg;
pub mod multiindex;
pub mod operator;
pub mod pde;
pub mod solver;

pub use error::{Error, Result};
pub use expansion::ExpansionModel;
pub use hilbert::{HilbertVector, InnerProduct};
pub use multiindex::{total_degree_set, IndexSet, MultiIndex};
pub use operator::{Measurements, SamplingOperator};
pub use solver::{SolverConfig, SolverReport, Termination};
