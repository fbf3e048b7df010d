//! Calculus on stratified (Carnot) groups and numerical diagnostics for
//! h-convex functions.

pub mod analysis;
pub mod cli;
pub mod group;
pub mod linalg;
pub mod poly;
pub mod registry;
pub mod report;
pub mod suite;
