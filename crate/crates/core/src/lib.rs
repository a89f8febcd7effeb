//! Gaussian quantum-information toolkit and simulator for single-quadrature
//! CV-QKD with an arbitrary, possibly drifting, homodyne frame.
//!
//! * [`gaussian`]: covariance matrices, symplectic transforms, conditioning, entropies.
//! * [`security`]: analytic mutual information, Holevo bound and key fraction.
//! * [`attacks`]: intercept-resend and detection statistics.
//! * [`montecarlo`]: sample-level prepare-and-measure simulation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacks;
pub mod error;
pub mod format;
pub mod gaussian;
pub mod montecarlo;
pub mod security;

pub use error::{Error, Result};
