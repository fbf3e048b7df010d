//! Test functions: built-in h-convex fields, polynomial literals and
//! compositions, loaded from a small JSON spec.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{hconvexity_check, AnalysisError, HConvexityReport, SamplingPlan, ScalarField};
use crate::group::{FieldCoefficients, GroupDescriptor};
use crate::linalg::{dot, norm2};
use crate::poly::{apply_field, GradedPolynomial, MultiIndex};

/// Violation allowed for a registry certificate.
pub const CERTIFICATE_TOL: f64 = 1e-10;

/// Function-spec file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Builtin {
        builtin: String,
        #[serde(default)]
        params: Value,
    },
    Polynomial {
        polynomial: String,
    },
    Composition {
        composition: Combine,
        of: Vec<FunctionSpec>,
    },
    Restricted {
        restrict: Box<FunctionSpec>,
        /// Homogeneous-distance ball around `center` (the identity if absent).
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Max,
    Sum,
}

impl FunctionSpec {
    pub fn builtin(name: &str) -> Self {
        Self::Builtin {
            builtin: name.into(),
            params: Value::Null,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, AnalysisError> {
        serde_json::from_str(text).map_err(|e| AnalysisError::FunctionSpec(e.to_string()))
    }
}

/// Parses literals such as `x1^2 + x2^2 - 0.5*x1*x2 + 3*x3` (1-based
/// variables) into a polynomial over the given degrees.
pub fn parse_polynomial(degrees: &[u32], text: &str) -> Result<GradedPolynomial, AnalysisError> {
    let bad = |msg: String| AnalysisError::FunctionSpec(format!("polynomial '{text}': {msg}"));
    let n = degrees.len();
    let mut out = GradedPolynomial::zero(degrees);
    let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty() {
        return Err(bad("empty".into()));
    }
    // split into signed terms, ignoring signs inside exponents like 1e-3
    let mut terms = Vec::new();
    let mut start = 0;
    let bytes = cleaned.as_bytes();
    for k in 1..bytes.len() {
        if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E' | b'*' | b'^') {
            terms.push(&cleaned[start..k]);
            start = k;
        }
    }
    terms.push(&cleaned[start..]);
    for term in terms {
        let (sign, body) = match term.as_bytes()[0] {
            b'+' => (1.0, &term[1..]),
            b'-' => (-1.0, &term[1..]),
            _ => (1.0, term),
        };
        if body.is_empty() {
            return Err(bad("dangling sign".into()));
        }
        let mut coef = sign;
        let mut exps = vec![0u32; n];
        for factor in body.split('*') {
            if let Some(var) = factor.strip_prefix('x') {
                let (idx, pow) = match var.split_once('^') {
                    Some((i, p)) => (i, p.parse::<u32>().map_err(|_| bad(format!("bad exponent in '{factor}'")))?),
                    None => (var, 1),
                };
                let i: usize = idx.parse().map_err(|_| bad(format!("bad variable '{factor}'")))?;
                if i == 0 || i > n {
                    return Err(bad(format!("variable x{i} out of range 1..{n}")));
                }
                exps[i - 1] += pow;
            } else {
                let c: f64 = factor.parse().map_err(|_| bad(format!("bad factor '{factor}'")))?;
                coef *= c;
            }
        }
        out = &out + &GradedPolynomial::from_terms(degrees, [(MultiIndex::new(exps), coef)]);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
enum Kind {
    Poly {
        p: GradedPolynomial,
        grads: Vec<GradedPolynomial>,
    },
    /// log Σ_k exp⟨a_k, π₁x⟩.
    LogSumExp { a: Vec<Vec<f64>> },
    /// sqrt(1 + |π₁x|²).
    SoftNorm,
    /// max_k ⟨q_k, π₁x⟩ + c_k.
    Polyhedral { planes: Vec<(Vec<f64>, f64)> },
    /// Σ |x_i| over the horizontal coordinates.
    Norm1,
    /// |x₁|.
    Abs1,
    /// |π₁x|₂.
    HNorm,
    Max(Vec<Field>),
    Sum(Vec<Field>),
    Restrict {
        inner: Box<Field>,
        center_inv: Vec<f64>,
        radius: f64,
    },
}

/// A registry or spec-built field on a fixed group.
#[derive(Clone, Debug)]
pub struct Field {
    label: String,
    m1: usize,
    kind: Kind,
    group: GroupDescriptor,
}

impl Field {
    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    /// The underlying polynomial, for polynomial fields.
    pub fn polynomial(&self) -> Option<&GradedPolynomial> {
        match &self.kind {
            Kind::Poly { p, .. } => Some(p),
            _ => None,
        }
    }
}

impl ScalarField for Field {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let h = &x[..self.m1];
        match &self.kind {
            Kind::Poly { p, .. } => p.evaluate(x),
            Kind::LogSumExp { a } => {
                let s: Vec<f64> = a.iter().map(|ak| dot(ak, h)).collect();
                let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
            }
            Kind::SoftNorm => (1.0 + dot(h, h)).sqrt(),
            Kind::Polyhedral { planes } => planes.iter().map(|(q, c)| dot(q, h) + c).fold(f64::NEG_INFINITY, f64::max),
            Kind::Norm1 => h.iter().map(|v| v.abs()).sum(),
            Kind::Abs1 => h[0].abs(),
            Kind::HNorm => norm2(h),
            Kind::Max(fs) => fs.iter().map(|f| f.value(x)).fold(f64::NEG_INFINITY, f64::max),
            Kind::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            Kind::Restrict { inner, .. } => inner.value(x),
        }
    }

    fn contains(&self, x: &[f64]) -> bool {
        match &self.kind {
            Kind::Restrict {
                inner,
                center_inv,
                radius,
            } => self.group.homogeneous_norm(&self.group.mul(center_inv, x)) < *radius && inner.contains(x),
            Kind::Max(fs) | Kind::Sum(fs) => fs.iter().all(|f| f.contains(x)),
            _ => true,
        }
    }

    fn analytic_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let h = &x[..self.m1];
        match &self.kind {
            Kind::Poly { grads, .. } => Some(grads.iter().map(|g| g.evaluate(x)).collect()),
            Kind::LogSumExp { a } => {
                let s: Vec<f64> = a.iter().map(|ak| dot(ak, h)).collect();
                let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let w: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
                let total: f64 = w.iter().sum();
                Some(
                    (0..self.m1)
                        .map(|i| a.iter().zip(&w).map(|(ak, wk)| ak[i] * wk).sum::<f64>() / total)
                        .collect(),
                )
            }
            Kind::SoftNorm => {
                let s = (1.0 + dot(h, h)).sqrt();
                Some(h.iter().map(|v| v / s).collect())
            }
            Kind::Sum(fs) => {
                let mut acc = vec![0.0; self.m1];
                for f in fs {
                    for (a, b) in acc.iter_mut().zip(f.analytic_gradient(x)?) {
                        *a += b;
                    }
                }
                Some(acc)
            }
            Kind::Restrict { inner, .. } => inner.analytic_gradient(x),
            _ => None,
        }
    }
}

fn param_f64(params: &Value, key: &str, default: f64) -> Result<f64, AnalysisError> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| AnalysisError::FunctionSpec(format!("parameter '{key}' must be a number"))),
    }
}

fn param_vec(params: &Value, key: &str) -> Result<Option<Vec<f64>>, AnalysisError> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|_| AnalysisError::FunctionSpec(format!("parameter '{key}' must be a list of numbers"))),
    }
}

fn param_matrix(params: &Value, key: &str) -> Result<Option<Vec<Vec<f64>>>, AnalysisError> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|_| AnalysisError::FunctionSpec(format!("parameter '{key}' must be a matrix"))),
    }
}

/// Names accepted by `{"builtin": …}`.
pub const BUILTIN_FUNCTIONS: &[&str] = &[
    "affine",
    "quadratic",
    "mixed",
    "euclid-quadratic",
    "logsumexp",
    "soft-norm",
    "polyhedral",
    "norm1",
    "abs1",
    "hnorm",
];

/// Builds fields on one group, sharing its frame coefficients.
pub struct FieldBuilder {
    group: GroupDescriptor,
    fc: FieldCoefficients,
}

impl FieldBuilder {
    pub fn new(g: &GroupDescriptor) -> Result<Self, AnalysisError> {
        Ok(Self {
            fc: FieldCoefficients::compute(g)?,
            group: g.clone(),
        })
    }

    pub fn coefficients(&self) -> &FieldCoefficients {
        &self.fc
    }

    fn make(&self, label: String, kind: Kind) -> Field {
        Field {
            label,
            m1: self.group.horizontal_dim(),
            kind,
            group: self.group.clone(),
        }
    }

    pub fn polynomial(&self, label: impl Into<String>, p: GradedPolynomial) -> Field {
        let grads = (0..self.group.horizontal_dim()).map(|j| apply_field(&self.fc, j, &p)).collect();
        self.make(label.into(), Kind::Poly { p, grads })
    }

    pub fn build(&self, spec: &FunctionSpec) -> Result<Field, AnalysisError> {
        match spec {
            FunctionSpec::Builtin { builtin, params } => self.builtin(builtin, params),
            FunctionSpec::Polynomial { polynomial } => {
                let p = parse_polynomial(self.group.degrees(), polynomial)?;
                Ok(self.polynomial(polynomial.clone(), p))
            }
            FunctionSpec::Composition { composition, of } => {
                if of.is_empty() {
                    return Err(AnalysisError::FunctionSpec("composition of no functions".into()));
                }
                let fs = of.iter().map(|s| self.build(s)).collect::<Result<Vec<_>, _>>()?;
                let names: Vec<String> = fs.iter().map(|f| f.label()).collect();
                Ok(match composition {
                    Combine::Max => self.make(format!("max({})", names.join(", ")), Kind::Max(fs)),
                    Combine::Sum => self.make(format!("sum({})", names.join(", ")), Kind::Sum(fs)),
                })
            }
            FunctionSpec::Restricted {
                restrict,
                radius,
                center,
            } => {
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(AnalysisError::FunctionSpec("restriction radius must be positive".into()));
                }
                let center = center.clone().unwrap_or_else(|| vec![0.0; self.group.dim()]);
                if center.len() != self.group.dim() {
                    return Err(AnalysisError::FunctionSpec(format!(
                        "restriction center has {} coordinates, group has {}",
                        center.len(),
                        self.group.dim()
                    )));
                }
                let inner = self.build(restrict)?;
                let label = format!("{} on ball({radius})", inner.label());
                Ok(self.make(
                    label,
                    Kind::Restrict {
                        inner: Box::new(inner),
                        center_inv: center.iter().map(|c| -c).collect(),
                        radius: *radius,
                    },
                ))
            }
        }
    }

    fn builtin(&self, name: &str, params: &Value) -> Result<Field, AnalysisError> {
        let g = &self.group;
        let deg = g.degrees();
        let m1 = g.horizontal_dim();
        let var = |i: usize| GradedPolynomial::variable(deg, i);
        let square = |i: usize| &var(i) * &var(i);
        let wrong_len = |key: &str, n: usize| AnalysisError::FunctionSpec(format!("parameter '{key}' must have {n} entries"));
        match name {
            "affine" => {
                let q = param_vec(params, "q")?.unwrap_or_else(|| (0..m1).map(|i| 1.0 - 0.5 * i as f64).collect());
                if q.len() != m1 {
                    return Err(wrong_len("q", m1));
                }
                let c = param_f64(params, "c", 0.0)?;
                let mut p = GradedPolynomial::constant(deg, c);
                for (i, qi) in q.iter().enumerate() {
                    p = &p + &var(i).scale(*qi);
                }
                Ok(self.polynomial("affine", p))
            }
            "quadratic" => {
                let p = (0..m1).fold(GradedPolynomial::zero(deg), |acc, i| &acc + &square(i));
                Ok(self.polynomial("quadratic", p))
            }
            "mixed" => {
                let alpha = param_f64(params, "alpha", 1.0)?;
                let mut p = (0..m1).fold(GradedPolynomial::zero(deg), |acc, i| &acc + &square(i));
                if g.dim() > m1 {
                    p = &p + &var(m1).scale(alpha);
                }
                Ok(self.polynomial(format!("mixed(alpha={alpha})"), p))
            }
            "euclid-quadratic" => {
                let s = match param_matrix(params, "S")? {
                    Some(s) => s,
                    None => (0..m1)
                        .map(|i| (0..m1).map(|j| if i == j { 2.0 - 0.5 * (i % 2) as f64 } else { 0.5 }).collect())
                        .collect(),
                };
                if s.len() != m1 || s.iter().any(|r| r.len() != m1) {
                    return Err(wrong_len("S", m1));
                }
                let mut p = GradedPolynomial::zero(deg);
                for i in 0..m1 {
                    for j in 0..m1 {
                        p = &p + &(&var(i) * &var(j)).scale(0.5 * s[i][j]);
                    }
                }
                Ok(self.polynomial("euclid-quadratic", p))
            }
            "logsumexp" => {
                let a = match param_matrix(params, "a")? {
                    Some(a) => a,
                    None => {
                        let mut a = Vec::new();
                        for i in 0..m1 {
                            let mut e = vec![0.0; m1];
                            e[i] = 1.0;
                            a.push(e.clone());
                            e[i] = -0.5;
                            a.push(e);
                        }
                        a
                    }
                };
                if a.is_empty() || a.iter().any(|r| r.len() != m1) {
                    return Err(wrong_len("a rows", m1));
                }
                Ok(self.make("logsumexp".into(), Kind::LogSumExp { a }))
            }
            "soft-norm" => Ok(self.make("soft-norm".into(), Kind::SoftNorm)),
            "polyhedral" => {
                let planes = match param_matrix(params, "planes")? {
                    Some(rows) => {
                        if rows.is_empty() || rows.iter().any(|r| r.len() != m1 + 1) {
                            return Err(wrong_len("planes rows", m1 + 1));
                        }
                        rows.into_iter().map(|mut r| {
                            let c = r.pop().expect("nonempty");
                            (r, c)
                        }).collect()
                    }
                    None => {
                        let mut planes = Vec::new();
                        for i in 0..m1 {
                            let mut e = vec![0.0; m1];
                            e[i] = 1.0;
                            planes.push((e.clone(), 0.1 * i as f64));
                            e[i] = -1.5;
                            planes.push((e, 0.0));
                        }
                        planes.push((vec![0.5; m1], 0.2));
                        planes
                    }
                };
                Ok(self.make("polyhedral".into(), Kind::Polyhedral { planes }))
            }
            "norm1" => Ok(self.make("norm1".into(), Kind::Norm1)),
            "abs1" => Ok(self.make("abs1".into(), Kind::Abs1)),
            "hnorm" => Ok(self.make("hnorm".into(), Kind::HNorm)),
            other => Err(AnalysisError::FunctionSpec(format!(
                "unknown builtin '{other}' (known: {})",
                BUILTIN_FUNCTIONS.join(", ")
            ))),
        }
    }
}

/// A registered field with its h-convexity certificate.
#[derive(Clone, Debug)]
pub struct FunctionEntry {
    pub name: &'static str,
    pub field: Field,
    pub smooth: bool,
    pub certificate: HConvexityReport,
}

const SMOOTH: &[&str] = &["affine", "quadratic", "mixed", "euclid-quadratic", "logsumexp", "soft-norm"];
const POLYHEDRAL: &[&str] = &["polyhedral", "norm1", "abs1"];

/// Whether a builtin is piecewise affine.
pub fn is_polyhedral(name: &str) -> bool {
    POLYHEDRAL.contains(&name)
}

/// Every builtin on `g`, each certified with `plan`.
pub fn function_registry(g: &GroupDescriptor, plan: &SamplingPlan) -> Result<Vec<FunctionEntry>, AnalysisError> {
    let b = FieldBuilder::new(g)?;
    BUILTIN_FUNCTIONS
        .iter()
        .map(|&name| {
            let field = b.build(&FunctionSpec::builtin(name))?;
            let certificate = hconvexity_check(g, &field, plan)?;
            Ok(FunctionEntry {
                name,
                field,
                smooth: SMOOTH.contains(&name),
                certificate,
            })
        })
        .collect()
}

/// The smooth part of the registry.
pub fn smooth_suite(g: &GroupDescriptor, plan: &SamplingPlan) -> Result<Vec<FunctionEntry>, AnalysisError> {
    Ok(function_registry(g, plan)?.into_iter().filter(|e| e.smooth).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn parses_literals() {
        let g = registry::heisenberg(1);
        let p = parse_polynomial(g.degrees(), "x1^2 + x2^2 - 0.5*x1*x2 + 3*x3 - 1e-1").unwrap();
        let x = [0.3, -0.2, 0.7];
        let want = 0.09 + 0.04 + 0.5 * 0.06 + 2.1 - 0.1;
        assert!((p.evaluate(&x) - want).abs() < 1e-14);
        assert!(parse_polynomial(g.degrees(), "x4").is_err());
        assert!(parse_polynomial(g.degrees(), "x1 + ").is_err());
        assert!(parse_polynomial(g.degrees(), "y1").is_err());
    }

    #[test]
    fn spec_formats_round_trip() {
        let text = r#"{"composition": "max", "of": [{"builtin": "abs1"}, {"polynomial": "x2"}]}"#;
        let spec = FunctionSpec::from_json(text).unwrap();
        let g = registry::heisenberg(1);
        let f = FieldBuilder::new(&g).unwrap().build(&spec).unwrap();
        assert_eq!(f.value(&[-2.0, 1.0, 0.0]), 2.0);
        assert_eq!(f.value(&[0.5, 1.0, 0.0]), 1.0);
        let restricted = r#"{"restrict": {"builtin": "quadratic"}, "radius": 0.5}"#;
        let f = FieldBuilder::new(&g).unwrap().build(&FunctionSpec::from_json(restricted).unwrap()).unwrap();
        assert!(f.contains(&[0.1, 0.1, 0.0]));
        assert!(!f.contains(&[1.0, 0.0, 0.0]));
        assert!(FunctionSpec::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn polynomial_gradient_is_left_invariant_frame() {
        let g = registry::heisenberg(1);
        let f = FieldBuilder::new(&g).unwrap().build(&FunctionSpec::builtin("mixed")).unwrap();
        // X₁u = 2x₁ − x₂/2, X₂u = 2x₂ + x₁/2
        let grad = f.analytic_gradient(&[0.4, -0.2, 3.0]).unwrap();
        assert!((grad[0] - 0.9).abs() < 1e-14);
        assert!((grad[1] - (-0.4 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn registry_is_certified() {
        let plan = SamplingPlan::default();
        for g in registry::builtin_groups() {
            for e in function_registry(&g, &plan).unwrap() {
                assert!(
                    e.certificate.max_violation <= CERTIFICATE_TOL,
                    "{} on {}: {}",
                    e.name,
                    g.name(),
                    e.certificate.max_violation
                );
            }
        }
    }
}
