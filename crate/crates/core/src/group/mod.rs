//! Stratified groups in exponential coordinates.

pub mod bch;
mod coefficients;
mod descriptor;
mod file;
mod validate;

pub use coefficients::FieldCoefficients;
pub use descriptor::*;
pub use file::{BracketRecord, DescriptorFile};
pub use validate::{ValidationReport, Violation};
