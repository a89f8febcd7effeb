//! Covariance-matrix algebra for multimode Gaussian states.
//!
//! Everything is expressed in shot-noise units (vacuum quadrature variance
//! equal to 1) with quadratures ordered `(q1, p1, q2, p2, ...)`. Modes are
//! addressed by zero-based index.

mod conditioning;
mod covariance;
mod literal;
mod spectrum;
mod symplectic;

pub use conditioning::{heterodyne_condition, homodyne_condition, pseudo_inverse, ConditioningStrategy};
pub use covariance::{CovarianceMatrix, PhysicalityReport};
pub use literal::{joint_coefficients, literal_covariance, JointCoefficients, LiteralCovariance, LiteralKind};
pub use spectrum::{g_entropy, symplectic_eigenvalues, two_mode_symplectic_eigenvalues, von_neumann_entropy};
pub use symplectic::{apply, beam_splitter, mode_rotation, squeezer, symplectic_form, SymplecticTransform};

/// Maximum tolerated asymmetry `|S_ij - S_ji|` of a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Slack on the uncertainty bound: symplectic eigenvalues must be `>= 1 - PHYSICAL_TOL`.
pub const PHYSICAL_TOL: f64 = 1e-9;

/// Entrywise tolerance on `S Ω Sᵀ = Ω` for symplectic transforms.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// Relative eigenvalue cutoff of the spectral pseudoinverse.
pub const PINV_CUTOFF: f64 = 1e-12;
