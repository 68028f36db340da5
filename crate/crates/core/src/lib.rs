//! Small dense linear algebra, Gaussian measurement ensembles, recovery
//! solvers, and a seeded Monte Carlo harness for studying how many random
//! linear measurements determine a low-rank matrix.
//!
//! The crate is organized in five layers:
//!
//! - [`linalg`]: row-major dense matrices sized for side lengths up to a
//!   few dozen, one-sided Jacobi SVD, Householder least squares, and a
//!   counter-based deterministic RNG.
//! - [`theory`]: closed-form measurement thresholds and rank-manifold
//!   dimensions, plus empirical checks of the assumptions behind them.
//! - [`measurement`]: the linear operator `X -> (<A_i, X>)_i`, its
//!   adjoint, and projection onto the affine set `{X : A(X) = y}`.
//! - [`solvers`]: nuclear-norm minimization by operator splitting, rank
//!   feasibility by alternating least squares, a null-space rank search,
//!   and an exact closed-form oracle for 2x2 instances.
//! - [`harness`]: seeded trials, phase-transition sweeps over `(n, r, m)`
//!   grids, crossing estimation, and CSV persistence.
//!
//! All randomness flows through [`linalg::Rng`], so every experiment is
//! reproducible from a single 64-bit seed regardless of thread count.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod measurement;
pub mod solvers;
pub mod theory;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
