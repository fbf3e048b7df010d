use std::fmt;

use thiserror::Error;

use crate::group::GroupError;
use crate::poly::PolyError;

/// A real function on (a domain of) the group.
pub trait ScalarField: Send + Sync {
    fn label(&self) -> String;

    fn value(&self, x: &[f64]) -> f64;

    /// Membership in the open domain Ω.
    fn contains(&self, _x: &[f64]) -> bool {
        true
    }

    /// Exact horizontal gradient, when known.
    fn analytic_gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label())
    }
}

/// Closure-backed field, handy for tests and one-off checks.
pub struct FnField<F> {
    label: String,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(label: impl Into<String>, f: F) -> Self {
        Self {
            label: label.into(),
            f,
        }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn label(&self) -> String {
        self.label.clone()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid sampling plan: {0}")]
    InvalidPlan(String),
    #[error("no admissible sample points ({0})")]
    EmptySample(String),
    #[error("point is outside the domain")]
    OutsideDomain,
    #[error("finite-difference stencil of width {width:e} leaves the domain")]
    DomainMargin { width: f64 },
    #[error("segment x·[0,h] leaves the domain")]
    SegmentExitsDomain,
    #[error("not h-convex along h: difference quotient increases by {excess:e} as the step shrinks")]
    NotHConvex { excess: f64 },
    #[error("one-sided derivatives do not bracket the secant slope {sigma} (range {lo}..{hi})")]
    Bracketing { sigma: f64, lo: f64, hi: f64 },
    #[error("secant slope misses the sampled subdifferential by {gap:e}")]
    HyperplaneMiss { gap: f64 },
    #[error("lambda must be nonnegative, got {0}")]
    NegativeLambda(f64),
    #[error("subdifferential hull has diameter {diameter:e}: not h-differentiable at this point")]
    NotDifferentiable { diameter: f64 },
    #[error("function spec: {0}")]
    FunctionSpec(String),
    #[error("rank-deficient design in {0}")]
    RankDeficient(String),
    #[error("matrix is not symmetric (skew part {0:e})")]
    NotSymmetric(f64),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}
