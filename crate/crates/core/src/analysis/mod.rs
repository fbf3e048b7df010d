//! Sampling-based first- and second-order analysis of h-convex functions.

mod field;
mod first_order;
mod functions;
mod hull;
mod plan;
mod second_order;

pub use field::*;
pub use first_order::*;
pub use functions::*;
pub use hull::ConvexPolytope;
pub use plan::*;
pub use second_order::*;
