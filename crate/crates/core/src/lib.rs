//! Random projection widths of regular polytopes and expected maxima of
//! Gaussian vectors.
//!
//! Every quantity is available through at least two independent routes:
//! closed forms or quadrature on one side, seeded Monte Carlo on the other.

pub mod error;
pub mod quadrature;
pub mod extremes;
pub mod special;
pub mod widths;
pub mod gram;
pub mod monte_carlo;
pub mod limits;
pub mod conjecture;

pub use error::{Estimate, MathError, Result};
pub use quadrature::QuadratureConfig;
