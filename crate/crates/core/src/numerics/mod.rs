//! Scalar root finding and quadrature used by the analyzer.

mod quad;
mod root;

pub use quad::{adaptive_simpson, QuadError};
pub use root::{brent, first_sign_change, RootError};
