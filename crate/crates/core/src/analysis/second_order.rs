//! Second difference quotients, the second-order h-expansion, the extended
//! differential, and the combined second-order characterization.

use rand::Rng;
use serde::Serialize;

use super::{
    certified_gradient, horizontal_fd_gradient, subdifferential_hull, AnalysisError, ConvexPolytope, SamplingPlan,
    ScalarField,
};
use crate::group::{FieldCoefficients, GroupDescriptor};
use crate::linalg::{self, dot, max_abs_diff, norm2, Matrix};
use crate::poly::{jet_coefficients, poly_from_jet2, sample_quasi_sphere, GradedPolynomial, Jet2};

/// Largest skew part tolerated by [`psd_check`].
pub const SKEW_TOL: f64 = 1e-12;
/// Excess below which the subdifferential-quotient inclusion counts as met.
pub const MIGNOT_TOL: f64 = 1e-2;
/// Largest halving of τ₀ tried while looking for an admissible ladder.
const TAU_SHRINKS: usize = 30;

/// Operational convergence: the last value is below `tol` and none of the
/// last three steps grows by more than `tol/10` (noise floor).
pub fn curve_converges(curve: &[f64], tol: f64) -> bool {
    let Some(&last) = curve.last() else {
        return false;
    };
    let steps = curve.len().saturating_sub(1).min(3);
    last.is_finite()
        && last < tol
        && curve[curve.len() - 1 - steps..]
            .windows(2)
            .all(|w| w[1] <= w[0] + tol / 10.0)
}

/// ∇_H u(x) together with u(x), certified by a singleton hull.
#[derive(Clone, Debug, Serialize)]
pub struct SecondOrderBase {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hull_diameter: f64,
}

impl SecondOrderBase {
    pub fn new(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<Self, AnalysisError> {
        let hull = subdifferential_hull(g, u, x, plan)?;
        let gradient = certified_gradient(g, u, x, plan)?;
        Ok(Self {
            x: x.to_vec(),
            value: u.value(x),
            gradient,
            hull_diameter: hull.diameter(),
        })
    }

    /// Δ²_{x,τ}u(w) = (u(xδ_τw) − u(x) − τ⟨∇_H u(x), π₁w⟩)/τ².
    pub fn second_quotient(&self, g: &GroupDescriptor, u: &dyn ScalarField, tau: f64, w: &[f64]) -> Result<f64, AnalysisError> {
        let y = g.mul(&self.x, &g.dilate_slice(tau, w));
        if !u.contains(&y) {
            return Err(AnalysisError::OutsideDomain);
        }
        let m1 = self.gradient.len();
        Ok((u.value(&y) - self.value - tau * dot(&self.gradient, &w[..m1])) / (tau * tau))
    }

    /// (hull at xδ_τw − ∇_H u(x))/τ, with the sampling plan shrunk by τ so
    /// that the hull spread does not blow up under the division.
    pub fn subdiff_quotient(
        &self,
        g: &GroupDescriptor,
        u: &dyn ScalarField,
        tau: f64,
        w: &[f64],
        plan: &SamplingPlan,
    ) -> Result<ConvexPolytope, AnalysisError> {
        let y = g.mul(&self.x, &g.dilate_slice(tau, w));
        let hull = subdifferential_hull(g, u, &y, &plan.scaled(tau.min(1.0)))?;
        let pts: Vec<Vec<f64>> = hull
            .polytope
            .vertices()
            .iter()
            .map(|p| p.iter().zip(&self.gradient).map(|(a, b)| (a - b) / tau).collect())
            .collect();
        Ok(ConvexPolytope::from_points(&pts).expect("hull has vertices"))
    }
}

/// Second quotient at a point, certifying differentiability first.
pub fn second_quotient(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    tau: f64,
    w: &[f64],
    plan: &SamplingPlan,
) -> Result<f64, AnalysisError> {
    SecondOrderBase::new(g, u, x, plan)?.second_quotient(g, u, tau, w)
}

/// Subdifferential quotient at a point, certifying differentiability first.
pub fn subdiff_quotient(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    tau: f64,
    w: &[f64],
    plan: &SamplingPlan,
) -> Result<ConvexPolytope, AnalysisError> {
    SecondOrderBase::new(g, u, x, plan)?.subdiff_quotient(g, u, tau, w, plan)
}

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    out
}

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Halton points of [−1,1]ⁿ pushed onto the unit quasi-sphere by dilation,
/// followed by ± each second-layer basis vector.
pub fn direction_set(g: &GroupDescriptor, count: usize) -> Vec<Vec<f64>> {
    let n = g.dim();
    assert!(n <= PRIMES.len(), "direction set supports up to {} coordinates", PRIMES.len());
    let mut out = Vec::with_capacity(count);
    let mut k = 1u64;
    while out.len() < count {
        let v: Vec<f64> = (0..n).map(|i| 2.0 * radical_inverse(k, PRIMES[i]) - 1.0).collect();
        k += 1;
        let r = g.homogeneous_norm(&v);
        if r > 1e-3 {
            out.push(g.dilate_slice(1.0 / r, &v));
        }
    }
    if let Some(second) = g.cumulative_dims().get(2) {
        for l in g.horizontal_dim()..*second {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; n];
                e[l] = s;
                out.push(e);
            }
        }
    }
    out
}

/// Table of second quotients over a τ ladder and a direction set.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientGrid {
    pub base: SecondOrderBase,
    pub taus: Vec<f64>,
    pub directions: Vec<Vec<f64>>,
    /// `values[k][w]` = Δ²_{x,τ_k}u(w).
    pub values: Vec<Vec<f64>>,
}

/// Evaluates the quotient table, halving τ₀ until every x·δ_τw lies in Ω.
pub fn quotient_grid(g: &GroupDescriptor, u: &dyn ScalarField, base: SecondOrderBase, plan: &SamplingPlan) -> Result<QuotientGrid, AnalysisError> {
    let directions = direction_set(g, plan.direction_count);
    let mut tau0 = plan.tau0;
    let mut shrinks = 0;
    while !directions.iter().all(|w| u.contains(&g.mul(&base.x, &g.dilate_slice(tau0, w)))) {
        shrinks += 1;
        if shrinks > TAU_SHRINKS {
            return Err(AnalysisError::DomainMargin { width: plan.tau0 });
        }
        tau0 *= 0.5;
    }
    let taus: Vec<f64> = (0..plan.tau_levels).map(|k| tau0 * 0.5f64.powi(k as i32)).collect();
    let values = taus
        .iter()
        .map(|&t| directions.iter().map(|w| base.second_quotient(g, u, t, w)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QuotientGrid {
        base,
        taus,
        directions,
        values,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionFit {
    pub jet: Jet2,
    pub taus: Vec<f64>,
    /// max_w |Δ²_{x,τ}u(w) − P̂⁽²⁾(w)| per τ, against the finest-scale fit.
    pub residuals: Vec<f64>,
    /// Fitted ∇_{V₂}u(x) at each scale.
    pub v2_per_scale: Vec<Vec<f64>>,
    pub converged: bool,
}

impl ExpansionFit {
    /// P̂⁽²⁾(w) = ⟨v₂, π₂w⟩ + ½⟨Hπ₁w, π₁w⟩.
    pub fn model(&self, w: &[f64]) -> f64 {
        model_value(&self.jet.v2, &self.jet.h, w)
    }

    /// The full expansion P̂_x as a polynomial in w.
    pub fn polynomial(&self, degrees: &[u32]) -> GradedPolynomial {
        poly_from_jet2(degrees, &self.jet)
    }
}

fn model_value(v2: &[f64], h: &Matrix, w: &[f64]) -> f64 {
    let m1 = h.len();
    let quad: f64 = (0..m1).map(|i| (0..m1).map(|j| h[i][j] * w[i] * w[j]).sum::<f64>()).sum();
    dot(v2, &w[m1..m1 + v2.len()]) + 0.5 * quad
}

fn design_row(m1: usize, k2: usize, w: &[f64]) -> Vec<f64> {
    let mut row: Vec<f64> = w[m1..m1 + k2].to_vec();
    for i in 0..m1 {
        for j in i..m1 {
            row.push(if i == j { 0.5 * w[i] * w[i] } else { w[i] * w[j] });
        }
    }
    row
}

fn unpack(m1: usize, k2: usize, theta: &[f64]) -> (Vec<f64>, Matrix) {
    let v2 = theta[..k2].to_vec();
    let mut h = linalg::zeros(m1, m1);
    let mut k = k2;
    for i in 0..m1 {
        for j in i..m1 {
            h[i][j] = theta[k];
            h[j][i] = theta[k];
            k += 1;
        }
    }
    (v2, h)
}

/// Least-squares fit of the quotients against ⟨v₂, π₂w⟩ + ½⟨Hπ₁w, π₁w⟩ with
/// H symmetric, at every scale; the finest scale gives the estimate.
pub fn fit_expansion(fc: &FieldCoefficients, grid: &QuotientGrid, plan: &SamplingPlan) -> Result<ExpansionFit, AnalysisError> {
    let m1 = fc.horizontal_dim();
    let k2 = fc.second_layer_end() - m1;
    let rows: Vec<Vec<f64>> = grid.directions.iter().map(|w| design_row(m1, k2, w)).collect();
    let mut fits = Vec::with_capacity(grid.taus.len());
    for vals in &grid.values {
        let theta = linalg::lstsq(&rows, vals).ok_or_else(|| AnalysisError::RankDeficient("expansion design".into()))?;
        fits.push(unpack(m1, k2, &theta));
    }
    let (v2, h) = fits.last().cloned().expect("nonempty ladder");
    let residuals: Vec<f64> = grid
        .values
        .iter()
        .map(|vals| {
            grid.directions
                .iter()
                .zip(vals)
                .map(|(w, q)| (q - model_value(&v2, &h, w)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let contraction = fc.contract_second_layer(&v2);
    let mut a = linalg::zeros(m1, m1);
    for i in 0..m1 {
        for j in 0..m1 {
            a[j][i] = h[i][j] + contraction[i][j];
        }
    }
    let converged = curve_converges(&residuals, plan.tolerances.fitted);
    Ok(ExpansionFit {
        jet: Jet2 {
            value: grid.base.value,
            g: grid.base.gradient.clone(),
            v2,
            h,
            a,
        },
        taus: grid.taus.clone(),
        residuals,
        v2_per_scale: fits.into_iter().map(|(v, _)| v).collect(),
        converged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MignotPoint {
    pub tau: f64,
    /// max over sampled w of the excess of Δ_{x,τ}∂_H u(w) over {Âπ₁w}.
    pub excess: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedDiffFit {
    /// `a[j][i]` = ∂(X_j u)/∂w_i at w = 0.
    pub a: Matrix,
    pub radii: Vec<f64>,
    /// sup |∇_H u(xw) − ∇_H u(x) − Âπ₁w| / ‖w‖ per radius.
    pub residuals: Vec<f64>,
    pub samples: usize,
    pub converged: bool,
    pub mignot: Vec<MignotPoint>,
    pub mignot_converged: bool,
}

fn gradient_at(g: &GroupDescriptor, u: &dyn ScalarField, y: &[f64], step: f64, plan: &SamplingPlan) -> Option<Vec<f64>> {
    if let Some(grad) = u.analytic_gradient(y) {
        return Some(grad);
    }
    let g1 = horizontal_fd_gradient(g, u, y, step).ok()?;
    let g2 = horizontal_fd_gradient(g, u, y, step / 2.0).ok()?;
    let scale = 1.0 + g1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (max_abs_diff(&g1, &g2) <= plan.tolerances.fd_stability * scale).then_some(g1)
}

/// Fits Â in ∇_H u(xw) ≈ ∇_H u(x) + Âπ₁w on shrinking balls, then runs the
/// subdifferential-quotient inclusion over the τ ladder.
pub fn fit_extended_differential(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    base: &SecondOrderBase,
    plan: &SamplingPlan,
) -> Result<ExtendedDiffFit, AnalysisError> {
    let m1 = g.horizontal_dim();
    let mut per_radius: Vec<(Vec<Vec<f64>>, Vec<Vec<f64>>)> = Vec::new();
    let mut samples = 0;
    for (k, &rho) in plan.ext_radii.iter().enumerate() {
        let mut rng = plan.rng("extended", k as u64);
        let step = plan.fd_step.min(rho / 10.0);
        let (mut ws, mut ds) = (Vec::new(), Vec::new());
        for _ in 0..4 * plan.samples_per_shell {
            if ws.len() == plan.samples_per_shell {
                break;
            }
            let v = sample_quasi_sphere(g.layer_dims(), &mut rng);
            let w = g.dilate_slice(rho * rng.random_range(0.5..=1.0), &v);
            let y = g.mul(&base.x, &w);
            if !u.contains(&y) {
                continue;
            }
            if let Some(grad) = gradient_at(g, u, &y, step, plan) {
                ds.push(linalg::sub(&grad, &base.gradient));
                ws.push(w);
            }
        }
        if ws.len() < 2 * m1 {
            return Err(AnalysisError::EmptySample(format!("stable gradients in ball of radius {rho:e}")));
        }
        samples += ws.len();
        per_radius.push((ws, ds));
    }
    let (ws, ds) = per_radius.last().expect("validated plan has ext radii");
    let rows: Vec<Vec<f64>> = ws.iter().map(|w| w[..m1].to_vec()).collect();
    let mut a = linalg::zeros(m1, m1);
    for j in 0..m1 {
        let rhs: Vec<f64> = ds.iter().map(|d| d[j]).collect();
        a[j] = linalg::lstsq(&rows, &rhs).ok_or_else(|| AnalysisError::RankDeficient("extended differential design".into()))?;
    }
    let residuals: Vec<f64> = per_radius
        .iter()
        .map(|(ws, ds)| {
            ws.iter()
                .zip(ds)
                .map(|(w, d)| {
                    let pred = linalg::mat_vec(&a, &w[..m1]);
                    norm2(&linalg::sub(d, &pred)) / g.homogeneous_norm(w)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let converged = curve_converges(&residuals, plan.tolerances.fitted);

    let mut mignot = Vec::new();
    for (k, tau) in plan.tau_ladder().into_iter().enumerate() {
        let mut rng = plan.rng("mignot", k as u64);
        let mut excess: f64 = 0.0;
        let mut seen = 0;
        for _ in 0..4 * plan.mignot_samples {
            if seen == plan.mignot_samples {
                break;
            }
            let w = sample_quasi_sphere(g.layer_dims(), &mut rng);
            if !u.contains(&g.mul(&base.x, &g.dilate_slice(tau, &w))) {
                continue;
            }
            let q = match base.subdiff_quotient(g, u, tau, &w, plan) {
                Ok(q) => q,
                Err(AnalysisError::EmptySample(_) | AnalysisError::DomainMargin { .. } | AnalysisError::OutsideDomain) => continue,
                Err(e) => return Err(e),
            };
            seen += 1;
            let target = linalg::mat_vec(&a, &w[..m1]);
            let single = ConvexPolytope::singleton(target);
            excess = excess.max(q.excess_over(&single));
        }
        if seen > 0 {
            mignot.push(MignotPoint { tau, excess });
        }
    }
    let curve: Vec<f64> = mignot.iter().map(|m| m.excess).collect();
    let mignot_converged = curve_converges(&curve, MIGNOT_TOL);
    Ok(ExtendedDiffFit {
        a,
        radii: plan.ext_radii.clone(),
        residuals,
        samples,
        converged,
        mignot,
        mignot_converged,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Minimum eigenvalue of a symmetric matrix by cyclic Jacobi.
pub fn psd_check(h: &Matrix, tol: f64) -> Result<PsdReport, AnalysisError> {
    let skew = linalg::skew_part(h)
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0, f64::max);
    if skew > SKEW_TOL {
        return Err(AnalysisError::NotSymmetric(skew));
    }
    let min_eigenvalue = linalg::jacobi_eigenvalues(h).first().copied().unwrap_or(0.0);
    Ok(PsdReport {
        min_eigenvalue,
        tolerance: tol,
        passed: min_eigenvalue >= -tol,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Equivalence {
    BothConverge,
    ConsistentNeither,
    ExpansionOnly,
    ExtendedOnly,
}

impl Equivalence {
    pub fn consistent(&self) -> bool {
        matches!(self, Self::BothConverge | Self::ConsistentNeither)
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Self::BothConverge => "both converge",
            Self::ConsistentNeither => "consistent: neither",
            Self::ExpansionOnly => "inconsistent: expansion only",
            Self::ExtendedOnly => "inconsistent: extended differential only",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubVerdict {
    pub id: &'static str,
    pub passed: bool,
    pub applicable: bool,
    pub metric: f64,
    pub tolerance: f64,
}

impl SubVerdict {
    fn check(id: &'static str, metric: f64, tolerance: f64) -> Self {
        Self {
            id,
            passed: metric.is_finite() && metric <= tolerance,
            applicable: true,
            metric,
            tolerance,
        }
    }

    fn not_applicable(id: &'static str, tolerance: f64) -> Self {
        Self {
            id,
            passed: true,
            applicable: false,
            metric: f64::NAN,
            tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremReport {
    pub x: Vec<f64>,
    pub hull_diameter: f64,
    pub equivalence: Equivalence,
    pub expansion: Option<ExpansionFit>,
    pub extended: Option<ExtendedDiffFit>,
    /// Residual matrix H − (Âᵀ − Σ a v₂) (when both fits exist).
    pub claim3: Option<Matrix>,
    pub min_eigenvalue: Option<f64>,
    /// equiv, c1, c2, c3, psd in that order.
    pub verdicts: Vec<SubVerdict>,
    /// Why a fit was unavailable, if any.
    pub notes: Vec<String>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn verdict(&self, id: &str) -> Option<&SubVerdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }
}

/// Runs the expansion fit and the extended-differential fit independently
/// and checks that they agree with each other and with the claims relating
/// v₂, H and Â. Fit failures become report entries; only an invalid group
/// or plan is an error.
pub fn verify_theorem_1_1(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<TheoremReport, AnalysisError> {
    plan.validate()?;
    let fc = FieldCoefficients::compute(g)?;
    let tol = plan.tolerances.fitted;
    let mut notes = Vec::new();
    let hull_diameter = subdifferential_hull(g, u, x, plan).map(|h| h.diameter()).unwrap_or(f64::NAN);
    let base = match SecondOrderBase::new(g, u, x, plan) {
        Ok(b) => Some(b),
        Err(e) => {
            notes.push(format!("base point: {e}"));
            None
        }
    };
    let expansion = base.clone().and_then(|b| {
        quotient_grid(g, u, b, plan)
            .and_then(|grid| fit_expansion(&fc, &grid, plan))
            .map_err(|e| notes.push(format!("expansion: {e}")))
            .ok()
    });
    let extended = base.as_ref().and_then(|b| {
        fit_extended_differential(g, u, b, plan)
            .map_err(|e| notes.push(format!("extended differential: {e}")))
            .ok()
    });
    let exp_ok = expansion.as_ref().is_some_and(|e| e.converged);
    let ext_ok = extended.as_ref().is_some_and(|e| e.converged);
    let equivalence = match (exp_ok, ext_ok) {
        (true, true) => Equivalence::BothConverge,
        (false, false) => Equivalence::ConsistentNeither,
        (true, false) => Equivalence::ExpansionOnly,
        (false, true) => Equivalence::ExtendedOnly,
    };
    let mut verdicts = vec![SubVerdict {
        id: "equiv",
        passed: equivalence.consistent(),
        applicable: true,
        metric: if equivalence.consistent() { 0.0 } else { 1.0 },
        tolerance: 0.0,
    }];
    let mut claim3 = None;
    let mut min_eigenvalue = None;
    match (&expansion, &extended) {
        (Some(exp), Some(ext)) if exp_ok && ext_ok => {
            let n = exp.v2_per_scale.len();
            let c1 = if exp.jet.v2.iter().all(|v| v.is_finite()) {
                if n >= 2 { max_abs_diff(&exp.v2_per_scale[n - 1], &exp.v2_per_scale[n - 2]) } else { 0.0 }
            } else {
                f64::INFINITY
            };
            verdicts.push(SubVerdict::check("c1", c1, tol));

            // reassemble P̂ and recompute the finest quotients from it
            let p = exp.polynomial(g.degrees());
            let tau = *exp.taus.last().expect("nonempty");
            let grid = quotient_grid(g, u, base.clone().expect("base exists"), plan)?;
            let c2 = grid
                .directions
                .iter()
                .zip(grid.values.last().expect("nonempty"))
                .map(|(w, q)| {
                    let tw = g.dilate_slice(tau, w);
                    let from_poly = (p.evaluate(&tw) - exp.jet.value - tau * dot(&exp.jet.g, &w[..exp.jet.g.len()])) / (tau * tau);
                    (from_poly - q).abs()
                })
                .fold(0.0, f64::max);
            verdicts.push(SubVerdict::check("c2", c2, tol));

            // H against Â and a^{li}_j v₂, and XᵢXⱼP̂ against Â
            let with_ext = Jet2 {
                a: ext.a.clone(),
                ..exp.jet.clone()
            };
            let r = with_ext.claim3_residual(&fc);
            let mut c3 = r.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
            let pairs = jet_coefficients(&fc, &p)?.pairs;
            for i in 0..pairs.len() {
                for j in 0..pairs.len() {
                    c3 = c3.max((pairs[i][j] - ext.a[j][i]).abs());
                }
            }
            claim3 = Some(r);
            verdicts.push(SubVerdict::check("c3", c3, tol));

            let psd = psd_check(&exp.jet.h, 1e-6)?;
            min_eigenvalue = Some(psd.min_eigenvalue);
            verdicts.push(SubVerdict {
                id: "psd",
                passed: psd.passed,
                applicable: true,
                metric: psd.min_eigenvalue,
                tolerance: psd.tolerance,
            });
        }
        _ => {
            verdicts.push(SubVerdict::not_applicable("c1", tol));
            verdicts.push(SubVerdict::not_applicable("c2", tol));
            verdicts.push(SubVerdict::not_applicable("c3", tol));
            verdicts.push(SubVerdict::not_applicable("psd", 1e-6));
        }
    }
    Ok(TheoremReport {
        x: x.to_vec(),
        hull_diameter,
        equivalence,
        expansion,
        extended,
        claim3,
        min_eigenvalue,
        verdicts,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convergence_rule() {
        assert!(curve_converges(&[1.0, 0.1, 0.01, 1e-4], 1e-3));
        assert!(!curve_converges(&[1.0, 0.1, 0.01, 2e-3], 1e-3));
        // growth beyond the noise allowance
        assert!(!curve_converges(&[1.0, 1e-5, 1e-5, 5e-4], 1e-3));
        assert!(curve_converges(&[1e-14, 2e-14, 1e-14], 1e-3));
        assert!(!curve_converges(&[], 1.0));
    }

    #[test]
    fn psd_examples() {
        assert_eq!(psd_check(&linalg::identity(2).iter().map(|r| r.iter().map(|v| 2.0 * v).collect()).collect(), 0.0).unwrap().min_eigenvalue, 2.0);
        let m = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let r = psd_check(&m, 1e-6).unwrap();
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12 && !r.passed);
        assert_eq!(psd_check(&linalg::zeros(3, 3), 0.0).unwrap().min_eigenvalue, 0.0);
        assert!(matches!(psd_check(&vec![vec![1.0, 1.0], vec![0.0, 1.0]], 0.0), Err(AnalysisError::NotSymmetric(_))));
    }

    #[test]
    fn halton_directions_are_unit() {
        let g = crate::registry::engel();
        let d = direction_set(&g, 20);
        assert_eq!(d.len(), 22);
        for w in &d {
            assert!((g.homogeneous_norm(w) - 1.0).abs() < 1e-12);
        }
    }
}
