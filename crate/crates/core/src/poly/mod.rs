//! Graded polynomials and their left-invariant calculus.

mod calc;
pub(crate) mod fit;
mod polynomial;

pub use calc::*;
pub use polynomial::*;
