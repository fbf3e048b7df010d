//! First-order nonsmooth analysis of h-convex functions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{AnalysisError, ConvexPolytope, SamplingPlan, ScalarField};
use crate::group::GroupDescriptor;
use crate::linalg::{dot, norm2, sub};
use crate::poly::sample_quasi_sphere;

/// Safety multiple of the FD step that must stay inside the domain.
const MARGIN_SAFETY: f64 = 4.0;
/// Step in t for derivatives of t ↦ u(x δ_t h) in the mean-value search.
const MVT_STEP: f64 = 1e-6;
const BISECTION_STEPS: usize = 60;
const PHI_GRID: usize = 257;

pub(crate) fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

/// x·δ_t h for t on a grid of `checks` interior points plus the end points.
pub fn segment_in_domain(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], h: &[f64], checks: usize) -> bool {
    (0..=checks + 1).all(|k| {
        let t = k as f64 / (checks + 1) as f64;
        u.contains(&g.along(x, h, t))
    })
}

/// Uniform point of the box [−s, s]ⁿ.
fn box_point(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| s * rng.random_range(-1.0..=1.0)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ViolationSite {
    pub x: Vec<f64>,
    pub h: Vec<f64>,
    pub lambda: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HConvexityReport {
    pub pairs: usize,
    pub evaluations: usize,
    /// Largest positive part of u(xδ_λh) − λu(xh) − (1−λ)u(x).
    pub max_violation: f64,
    pub worst: Option<ViolationSite>,
}

/// Samples base points, horizontal increments and the λ grid, and reports
/// the largest violation of the h-convexity inequality.
pub fn hconvexity_check(g: &GroupDescriptor, u: &dyn ScalarField, plan: &SamplingPlan) -> Result<HConvexityReport, AnalysisError> {
    plan.validate()?;
    let m1 = g.horizontal_dim();
    let mut rng = plan.rng("hconvexity", 0);
    let target = 4 * plan.direction_count;
    let mut pairs = 0;
    let mut evaluations = 0;
    let mut max_violation: f64 = 0.0;
    let mut worst = None;
    for _ in 0..8 * target {
        if pairs == target {
            break;
        }
        let x = box_point(&mut rng, g.dim(), plan.base_scale);
        let h = scaled(&random_unit(&mut rng, m1), plan.base_scale * rng.random_range(0.05..=1.0));
        if !u.contains(&x) || !segment_in_domain(g, u, &x, &h, plan.segment_checks) {
            continue;
        }
        pairs += 1;
        let ux = u.value(&x);
        let uy = u.value(&g.along(&x, &h, 1.0));
        for &lam in &plan.lambda_grid {
            let v = u.value(&g.along(&x, &h, lam)) - lam * uy - (1.0 - lam) * ux;
            evaluations += 1;
            if v > max_violation {
                max_violation = v;
                worst = Some(ViolationSite {
                    x: x.clone(),
                    h: h.clone(),
                    lambda: lam,
                });
            }
        }
    }
    if pairs == 0 {
        return Err(AnalysisError::EmptySample("no base point with an admissible horizontal segment".into()));
    }
    Ok(HConvexityReport {
        pairs,
        evaluations,
        max_violation,
        worst,
    })
}

/// Central differences of t ↦ u(x · t eᵢ) for the horizontal directions.
pub fn horizontal_fd_gradient(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], eta: f64) -> Result<Vec<f64>, AnalysisError> {
    let m1 = g.horizontal_dim();
    let mut grad = Vec::with_capacity(m1);
    for i in 0..m1 {
        let mut e = vec![0.0; m1];
        e[i] = 1.0;
        for s in [-MARGIN_SAFETY, MARGIN_SAFETY] {
            if !u.contains(&g.along(x, &e, s * eta)) {
                return Err(AnalysisError::DomainMargin {
                    width: MARGIN_SAFETY * eta,
                });
            }
        }
        let fp = u.value(&g.along(x, &e, eta));
        let fm = u.value(&g.along(x, &e, -eta));
        grad.push((fp - fm) / (2.0 * eta));
    }
    Ok(grad)
}

/// Gradients sampled on one shell around a base point.
#[derive(Clone, Debug, Serialize)]
pub struct ShellSample {
    pub radius: f64,
    pub step: f64,
    pub points: Vec<Vec<f64>>,
    pub gradients: Vec<Vec<f64>>,
    /// Points discarded because the two FD step sizes disagreed.
    pub unstable: usize,
    /// Points discarded because they (or their stencil) left the domain.
    pub outside: usize,
}

fn sample_shell(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    radius: f64,
    plan: &SamplingPlan,
    rng: &mut ChaCha8Rng,
) -> ShellSample {
    let step = plan.shell_step(radius);
    let mut out = ShellSample {
        radius,
        step,
        points: Vec::new(),
        gradients: Vec::new(),
        unstable: 0,
        outside: 0,
    };
    let tol = plan.tolerances.fd_stability;
    for _ in 0..4 * plan.samples_per_shell {
        if out.gradients.len() == plan.samples_per_shell {
            break;
        }
        let v = sample_quasi_sphere(g.layer_dims(), rng);
        let rho = radius * rng.random_range(0.5..=1.0);
        let y = g.mul(x, &g.dilate_slice(rho, &v));
        if !u.contains(&y) {
            out.outside += 1;
            continue;
        }
        let (g1, g2) = match (
            horizontal_fd_gradient(g, u, &y, step),
            horizontal_fd_gradient(g, u, &y, step / 2.0),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                out.outside += 1;
                continue;
            }
        };
        let scale = 1.0 + g1.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if crate::linalg::max_abs_diff(&g1, &g2) > tol * scale {
            out.unstable += 1;
            continue;
        }
        out.points.push(y);
        out.gradients.push(g1);
    }
    out
}

/// Reachable-gradient sample: FD gradients at stable points of each shell
/// B_{x, r_m}, tagged by shell.
pub fn reachable_gradient_sample(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    plan: &SamplingPlan,
) -> Result<Vec<ShellSample>, AnalysisError> {
    plan.validate()?;
    if !u.contains(x) {
        return Err(AnalysisError::OutsideDomain);
    }
    let mut shells = Vec::with_capacity(plan.radii.len());
    for (m, &r) in plan.radii.iter().enumerate() {
        let mut rng = plan.rng("shell", m as u64);
        let s = sample_shell(g, u, x, r, plan, &mut rng);
        if s.gradients.is_empty() {
            return Err(AnalysisError::EmptySample(format!("shell of radius {r:e}")));
        }
        shells.push(s);
    }
    Ok(shells)
}

/// Values u(x) and u(x·h) over a fixed set of admissible horizontal probes,
/// shared by every membership query at the same base point.
#[derive(Clone, Debug)]
pub struct MembershipProbe {
    pub h: Vec<Vec<f64>>,
    norm2: Vec<f64>,
    ux: f64,
    uxh: Vec<f64>,
}

impl MembershipProbe {
    /// Probes along ±eᵢ and `direction_count` random directions, at lengths
    /// `scale · 10^{-k}`, k = 0..4.
    pub fn new(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], scale: f64, plan: &SamplingPlan) -> Result<Self, AnalysisError> {
        if !u.contains(x) {
            return Err(AnalysisError::OutsideDomain);
        }
        let m1 = g.horizontal_dim();
        let mut rng = plan.rng("membership", 0);
        let mut dirs = Vec::new();
        for i in 0..m1 {
            for s in [1.0, -1.0] {
                let mut e = vec![0.0; m1];
                e[i] = s;
                dirs.push(e);
            }
        }
        for _ in 0..plan.direction_count {
            dirs.push(random_unit(&mut rng, m1));
        }
        let mut probe = Self {
            h: Vec::new(),
            norm2: Vec::new(),
            ux: u.value(x),
            uxh: Vec::new(),
        };
        for d in &dirs {
            for k in 0..4 {
                let h = scaled(d, scale * 10f64.powi(-k));
                if !segment_in_domain(g, u, x, &h, plan.segment_checks) {
                    continue;
                }
                probe.uxh.push(u.value(&g.along(x, &h, 1.0)));
                probe.norm2.push(dot(&h, &h));
                probe.h.push(h);
            }
        }
        if probe.h.is_empty() {
            return Err(AnalysisError::EmptySample("no admissible horizontal probe".into()));
        }
        Ok(probe)
    }

    /// max_h u(x) + ⟨p, h⟩ − λ‖h‖² − u(xh). With λ = 0 the subtracted term is
    /// an exact zero, so the result is bitwise that of the plain test.
    pub fn violation(&self, p: &[f64], lambda: f64) -> f64 {
        self.h
            .iter()
            .zip(&self.norm2)
            .zip(&self.uxh)
            .map(|((h, n2), uxh)| self.ux + dot(p, h) - lambda * n2 - uxh)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Largest sampled violation of u(xh) ≥ u(x) + ⟨p, h⟩.
pub fn subdiff_membership(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], p: &[f64], plan: &SamplingPlan) -> Result<f64, AnalysisError> {
    Ok(MembershipProbe::new(g, u, x, plan.base_scale, plan)?.violation(p, 0.0))
}

/// Largest sampled violation of u(xh) ≥ u(x) + ⟨p, h⟩ − λ‖h‖².
pub fn lambda_subdiff_membership(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    p: &[f64],
    lambda: f64,
    plan: &SamplingPlan,
) -> Result<f64, AnalysisError> {
    if !(lambda >= 0.0) {
        return Err(AnalysisError::NegativeLambda(lambda));
    }
    Ok(MembershipProbe::new(g, u, x, plan.base_scale, plan)?.violation(p, lambda))
}

#[derive(Clone, Debug, Serialize)]
pub struct HullEstimate {
    pub polytope: ConvexPolytope,
    /// Membership violation of each vertex, probed at a local scale.
    pub vertex_violations: Vec<f64>,
    /// Indices of vertices whose violation exceeds the membership tolerance.
    pub flagged: Vec<usize>,
    pub samples: usize,
    pub unstable: usize,
}

impl HullEstimate {
    pub fn diameter(&self) -> f64 {
        self.polytope.diameter()
    }

    pub fn is_singleton(&self, plan: &SamplingPlan) -> bool {
        self.diameter() < plan.tolerances.singleton
    }
}

/// Convex hull of the finest-shell reachable gradients.
pub fn subdifferential_hull(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<HullEstimate, AnalysisError> {
    plan.validate()?;
    if !u.contains(x) {
        return Err(AnalysisError::OutsideDomain);
    }
    let r = plan.finest_radius();
    let mut rng = plan.rng("shell", (plan.radii.len() - 1) as u64);
    let shell = sample_shell(g, u, x, r, plan, &mut rng);
    let polytope = ConvexPolytope::from_points(&shell.gradients)
        .ok_or_else(|| AnalysisError::EmptySample(format!("shell of radius {r:e}")))?;
    // vertices are gradients at points up to r away; probe at a scale where
    // that offset is negligible against the membership tolerance
    let probe = MembershipProbe::new(g, u, x, 100.0 * r, plan)?;
    let vertex_violations: Vec<f64> = polytope.vertices().iter().map(|p| probe.violation(p, 0.0)).collect();
    let flagged = vertex_violations
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > plan.tolerances.membership)
        .map(|(i, _)| i)
        .collect();
    Ok(HullEstimate {
        polytope,
        vertex_violations,
        flagged,
        samples: shell.gradients.len(),
        unstable: shell.unstable,
    })
}

/// ∇_H u(x) at a point certified as h-differentiable by a singleton hull.
pub fn certified_gradient(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<Vec<f64>, AnalysisError> {
    let hull = subdifferential_hull(g, u, x, plan)?;
    let d = hull.diameter();
    if d >= plan.tolerances.singleton {
        return Err(AnalysisError::NotDifferentiable { diameter: d });
    }
    match u.analytic_gradient(x) {
        Some(grad) => Ok(grad),
        None => horizontal_fd_gradient(g, u, x, plan.fd_step),
    }
}

/// One-sided horizontal directional derivative u′(x, h).
///
/// Quotients q_k = (u(xδ_{λ_k}h) − u(x))/λ_k on a halving ladder must be
/// nonincreasing; the limit is Richardson-extrapolated and clamped to the
/// bracket [−q_K(−h), q_K] that convexity provides.
pub fn directional_derivative(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    h: &[f64],
    plan: &SamplingPlan,
) -> Result<f64, AnalysisError> {
    let ux = u.value(x);
    let minus: Vec<f64> = h.iter().map(|c| -c).collect();
    let mut q = Vec::with_capacity(plan.dd_levels);
    let mut lower = f64::NEG_INFINITY;
    for k in 0..plan.dd_levels {
        let lam = plan.dd_lambda0 * 0.5f64.powi(k as i32);
        let yp = g.along(x, h, lam);
        let ym = g.along(x, &minus, lam);
        if !u.contains(&yp) || !u.contains(&ym) {
            return Err(AnalysisError::DomainMargin { width: lam });
        }
        let qk = (u.value(&yp) - ux) / lam;
        let roundoff = 64.0 * f64::EPSILON * (1.0 + ux.abs() + u.value(&yp).abs()) / lam;
        if let Some(&prev) = q.last() {
            if qk > prev + roundoff {
                return Err(AnalysisError::NotHConvex { excess: qk - prev });
            }
        }
        q.push(qk);
        lower = lower.max(-(u.value(&ym) - ux) / lam);
    }
    let k = q.len() - 1;
    let rich = 2.0 * q[k] - q[k - 1];
    Ok(rich.clamp(lower.min(q[k]), q[k]))
}

#[derive(Clone, Debug, Serialize)]
pub struct DermaxReport {
    pub directions: usize,
    /// max_h |u′(x, h) − max_{p ∈ hull} ⟨p, h⟩|.
    pub max_discrepancy: f64,
    /// max positive part of u′(x, h₁+h₂) − u′(x, h₁) − u′(x, h₂).
    pub subadditivity_violation: f64,
}

pub fn dermax_check(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<DermaxReport, AnalysisError> {
    let hull = subdifferential_hull(g, u, x, plan)?;
    let mut rng = plan.rng("dermax", 0);
    let m1 = g.horizontal_dim();
    let dirs: Vec<Vec<f64>> = (0..plan.direction_count).map(|_| random_unit(&mut rng, m1)).collect();
    let mut derivs = Vec::with_capacity(dirs.len());
    let mut max_discrepancy: f64 = 0.0;
    for h in &dirs {
        let d = directional_derivative(g, u, x, h, plan)?;
        max_discrepancy = max_discrepancy.max((d - hull.polytope.support(h)).abs());
        derivs.push(d);
    }
    let mut subadditivity_violation: f64 = 0.0;
    for k in 0..dirs.len() {
        let k2 = (k + 1) % dirs.len();
        let sum: Vec<f64> = dirs[k].iter().zip(&dirs[k2]).map(|(a, b)| a + b).collect();
        if norm2(&sum) < 1e-9 {
            continue;
        }
        let d = directional_derivative(g, u, x, &sum, plan)?;
        subadditivity_violation = subadditivity_violation.max(d - derivs[k] - derivs[k2]);
    }
    Ok(DermaxReport {
        directions: dirs.len(),
        max_discrepancy,
        subadditivity_violation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MvtWitness {
    pub t: f64,
    pub p: Vec<f64>,
    /// |u(xh) − u(x) − ⟨p, h⟩|.
    pub residual: f64,
    pub sigma: f64,
    /// Distance from σ to the sampled support range (0 when inside).
    pub gap: f64,
}

fn slope_witness(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    h: &[f64],
    t: f64,
    sigma: f64,
    plan: &SamplingPlan,
) -> Result<(Vec<f64>, f64, f64, Vec<f64>), AnalysisError> {
    let y = g.along(x, h, t);
    let hull = subdifferential_hull(g, u, &y, plan)?;
    let (p, gap) = hull.polytope.hyperplane_point(h, sigma);
    if gap > plan.tolerances.hyperplane_gap {
        return Err(AnalysisError::HyperplaneMiss { gap });
    }
    let residual = (sigma - dot(&p, h)).abs();
    Ok((p, gap, residual, y))
}

/// Mean-value witness: t ∈ [0,1] and p ∈ ∂_H u(xδ_t h) with ⟨p, h⟩ equal to
/// the secant slope σ = u(xh) − u(x).
pub fn mean_value_witness(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    h: &[f64],
    plan: &SamplingPlan,
) -> Result<MvtWitness, AnalysisError> {
    if !segment_in_domain(g, u, x, h, plan.segment_checks) {
        return Err(AnalysisError::SegmentExitsDomain);
    }
    let gt = |t: f64| u.value(&g.along(x, h, t));
    let (u0, u1) = (gt(0.0), gt(1.0));
    let sigma = u1 - u0;
    let eta = MVT_STEP;
    let tol = 1e-8 * (1.0 + u0.abs() + u1.abs());
    let right0 = (gt(eta) - u0) / eta;
    let left1 = (u1 - gt(1.0 - eta)) / eta;
    if right0 > sigma + tol || left1 < sigma - tol {
        return Err(AnalysisError::Bracketing {
            sigma,
            lo: right0,
            hi: left1,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        let slope = (gt(mid + eta) - gt(mid - eta)) / (2.0 * eta);
        if slope < sigma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let (p, gap, residual, _) = slope_witness(g, u, x, h, t, sigma, plan)?;
    Ok(MvtWitness {
        t,
        p,
        residual,
        sigma,
        gap,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaMvtWitness {
    pub t: f64,
    pub p: Vec<f64>,
    pub residual: f64,
    pub sigma: f64,
    pub lambda: f64,
    /// λ-subdifferential membership violation of p at xδ_t h.
    pub lambda_violation: f64,
}

/// Mean-value witness for functions that are h-convex up to a quadratic
/// perturbation: t is an interior extremum of φ(t) = u(xδ_t h) − σt and p is
/// tested for λ-subdifferential membership there.
pub fn lambda_mean_value_witness(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    h: &[f64],
    lambda: f64,
    plan: &SamplingPlan,
) -> Result<LambdaMvtWitness, AnalysisError> {
    if !(lambda >= 0.0) {
        return Err(AnalysisError::NegativeLambda(lambda));
    }
    if !segment_in_domain(g, u, x, h, plan.segment_checks) {
        return Err(AnalysisError::SegmentExitsDomain);
    }
    let gt = |t: f64| u.value(&g.along(x, h, t));
    let u0 = gt(0.0);
    let sigma = gt(1.0) - u0;
    let phi = |t: f64| gt(t) - sigma * t - u0;
    let grid: Vec<(f64, f64)> = (0..PHI_GRID)
        .map(|k| {
            let t = k as f64 / (PHI_GRID - 1) as f64;
            (t, phi(t))
        })
        .collect();
    let imin = (0..PHI_GRID).min_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1)).expect("grid");
    let imax = (0..PHI_GRID).max_by(|&a, &b| grid[a].1.total_cmp(&grid[b].1)).expect("grid");
    let (i, sign) = if grid[imax].1.abs() > grid[imin].1.abs() { (imax, -1.0) } else { (imin, 1.0) };
    let t = if grid[i].1.abs() < 1e-14 * (1.0 + u0.abs()) {
        0.5
    } else {
        // golden-section refinement of sign·φ around the grid extremum
        let dt = 1.0 / (PHI_GRID - 1) as f64;
        let (mut a, mut b) = ((grid[i].0 - dt).max(0.0), (grid[i].0 + dt).min(1.0));
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let f = |t: f64| sign * phi(t);
        let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..80 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - r * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + r * (b - a);
                fd = f(d);
            }
        }
        0.5 * (a + b)
    };
    let (p, _, residual, y) = slope_witness(g, u, x, h, t, sigma, plan)?;
    let probe = MembershipProbe::new(g, u, &y, plan.base_scale, plan)?;
    Ok(LambdaMvtWitness {
        t,
        lambda_violation: probe.violation(&p, lambda),
        p,
        residual,
        sigma,
        lambda,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedGraphSequence {
    pub direction: Vec<f64>,
    pub radii: Vec<f64>,
    pub limit: Vec<f64>,
    /// |p_K − p_{K−1}|, the uncertainty of the limit estimate.
    pub last_gap: f64,
    pub violation: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClosedGraphReport {
    pub sequences: Vec<ClosedGraphSequence>,
    pub passed: bool,
}

/// Follows x_k = x·δ_{r_k}v → x with p_k a fixed extreme point of the hull at
/// x_k, and tests the limit for membership in ∂_H u(x). The tolerance is
/// widened by the last step of the sequence times the probe length.
pub fn closed_graph_diagnostic(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<ClosedGraphReport, AnalysisError> {
    plan.validate()?;
    let m1 = g.horizontal_dim();
    let radii: Vec<f64> = plan
        .radii
        .iter()
        .copied()
        .filter(|r| *r >= 100.0 * plan.finest_radius())
        .collect();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..m1 {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; g.dim()];
            e[i] = s;
            dirs.push(e);
        }
    }
    let mut rng = plan.rng("closed-graph", 0);
    for _ in 0..4 {
        dirs.push(sample_quasi_sphere(g.layer_dims(), &mut rng));
    }
    let probe = MembershipProbe::new(g, u, x, plan.base_scale, plan)?;
    let mut sequences = Vec::new();
    for v in dirs {
        let mut d = v[..m1].to_vec();
        let n = norm2(&d);
        if n < 1e-12 {
            d = vec![0.0; m1];
            d[0] = 1.0;
        } else {
            d.iter_mut().for_each(|c| *c /= n);
        }
        let mut ps: Vec<Vec<f64>> = Vec::new();
        let mut used = Vec::new();
        for &r in &radii {
            let xk = g.mul(x, &g.dilate_slice(r, &v));
            if !u.contains(&xk) {
                continue;
            }
            let hull = subdifferential_hull(g, u, &xk, plan)?;
            ps.push(hull.polytope.argmax(&d).to_vec());
            used.push(r);
        }
        let Some(limit) = ps.last().cloned() else {
            continue;
        };
        let last_gap = if ps.len() >= 2 { norm2(&sub(&ps[ps.len() - 1], &ps[ps.len() - 2])) } else { 0.0 };
        let violation = probe.violation(&limit, 0.0);
        let passed = violation <= plan.tolerances.membership + last_gap * plan.base_scale;
        sequences.push(ClosedGraphSequence {
            direction: v,
            radii: used,
            limit,
            last_gap,
            violation,
            passed,
        });
    }
    if sequences.is_empty() {
        return Err(AnalysisError::EmptySample("no approaching sequence inside the domain".into()));
    }
    let passed = sequences.iter().all(|s| s.passed);
    Ok(ClosedGraphReport { sequences, passed })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualLadder {
    pub radii: Vec<f64>,
    /// sup_{‖w‖ ≤ ρ} |u(xw) − u(x) − ⟨p, π₁w⟩| / ‖w‖ per radius.
    pub residuals: Vec<f64>,
    pub converging: bool,
}

/// Absolute level below which a ladder counts as converged regardless of its
/// starting value (roundoff floor).
const LADDER_FLOOR: f64 = 1e-8;

pub fn first_order_residual_ladder(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    p: &[f64],
    plan: &SamplingPlan,
) -> Result<ResidualLadder, AnalysisError> {
    let ux = u.value(x);
    let mut residuals = Vec::with_capacity(plan.radii.len());
    for (m, &rho) in plan.radii.iter().enumerate() {
        let mut rng = plan.rng("ladder", m as u64);
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for k in 0..2 * plan.direction_count {
            let v = sample_quasi_sphere(g.layer_dims(), &mut rng);
            let r = if k % 2 == 0 { rho } else { 0.5 * rho };
            let w = g.dilate_slice(r, &v);
            let y = g.mul(x, &w);
            if !u.contains(&y) {
                continue;
            }
            count += 1;
            let lin = dot(p, &w[..p.len()]);
            worst = worst.max((u.value(&y) - ux - lin).abs() / r);
        }
        if count == 0 {
            return Err(AnalysisError::EmptySample(format!("ladder radius {rho:e}")));
        }
        residuals.push(worst);
    }
    let first = residuals[0];
    let last = *residuals.last().expect("nonempty");
    let converging = last < 1e-2 && (last <= 0.1 * first || last <= LADDER_FLOOR);
    Ok(ResidualLadder {
        radii: plan.radii.clone(),
        residuals,
        converging,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstOrderReport {
    pub diameter: f64,
    pub singleton: bool,
    pub ladder: ResidualLadder,
    /// Singleton hull ⟺ converging ladder.
    pub agree: bool,
}

/// Both sides of the first-order characterization at one point; p is the
/// hull centroid.
pub fn first_order_characterization(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    plan: &SamplingPlan,
) -> Result<FirstOrderReport, AnalysisError> {
    let hull = subdifferential_hull(g, u, x, plan)?;
    let p = hull.polytope.centroid();
    let ladder = first_order_residual_ladder(g, u, x, &p, plan)?;
    let diameter = hull.diameter();
    let singleton = diameter < plan.tolerances.singleton;
    Ok(FirstOrderReport {
        diameter,
        singleton,
        agree: singleton == ladder.converging,
        ladder,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EquiboundReport {
    pub lipschitz: f64,
    pub max_vertex_norm: f64,
    pub passed: bool,
}

/// Hull vertices at the given points are bounded by 1.1 times the measured
/// horizontal Lipschitz constant near those points.
pub fn equiboundedness(g: &GroupDescriptor, u: &dyn ScalarField, points: &[Vec<f64>], plan: &SamplingPlan) -> Result<EquiboundReport, AnalysisError> {
    let m1 = g.horizontal_dim();
    let mut rng = plan.rng("equibound", 0);
    let step = 1e-4;
    let mut lipschitz: f64 = 0.0;
    let mut max_vertex_norm: f64 = 0.0;
    for x in points {
        let hull = subdifferential_hull(g, u, x, plan)?;
        let mut dirs: Vec<Vec<f64>> = (0..plan.direction_count).map(|_| random_unit(&mut rng, m1)).collect();
        for v in hull.polytope.vertices() {
            let n = norm2(v);
            max_vertex_norm = max_vertex_norm.max(n);
            if n > 1e-12 {
                dirs.push(scaled(v, 1.0 / n));
            }
        }
        let mut bases = vec![x.clone()];
        for _ in 0..8 {
            let v = sample_quasi_sphere(g.layer_dims(), &mut rng);
            bases.push(g.mul(x, &g.dilate_slice(plan.radii[0] * rng.random::<f64>(), &v)));
        }
        for y in bases.iter().filter(|y| u.contains(y)) {
            let uy = u.value(y);
            for d in &dirs {
                for s in [step, -step] {
                    let z = g.along(y, d, s);
                    if u.contains(&z) {
                        lipschitz = lipschitz.max((u.value(&z) - uy).abs() / step);
                    }
                }
            }
        }
    }
    Ok(EquiboundReport {
        lipschitz,
        max_vertex_norm,
        passed: max_vertex_norm <= 1.1 * lipschitz + plan.tolerances.membership,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GarSubRatio {
    pub r: f64,
    pub sup_norm: f64,
    pub mean_abs: f64,
    pub ratio: f64,
}

/// sup_{y ∈ B_{x,r}, p ∈ ∂_H u(y)} |p| / ((1/r) · mean_{B_{x,15r}} |u|) over a
/// ladder of r. Only finiteness is meaningful; no constant is asserted.
pub fn garsub_ratios(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], radii: &[f64], plan: &SamplingPlan) -> Result<Vec<GarSubRatio>, AnalysisError> {
    let mut out = Vec::new();
    let q: f64 = g.degrees().iter().map(|&d| d as f64).sum();
    for (m, &r) in radii.iter().enumerate() {
        let mut rng = plan.rng("garsub", m as u64);
        let mut sup_norm: f64 = 0.0;
        for _ in 0..4 {
            let v = sample_quasi_sphere(g.layer_dims(), &mut rng);
            let y = g.mul(x, &g.dilate_slice(r * rng.random::<f64>(), &v));
            if !u.contains(&y) {
                continue;
            }
            let hull = subdifferential_hull(g, u, &y, plan)?;
            sup_norm = sup_norm.max(hull.polytope.vertices().iter().map(|p| norm2(p)).fold(0.0, f64::max));
        }
        let mut total = 0.0;
        let mut count = 0;
        for _ in 0..plan.samples_per_shell {
            let v = sample_quasi_sphere(g.layer_dims(), &mut rng);
            // radial law r^{Q-1} of the homogeneous dimension Q
            let rad = 15.0 * r * rng.random::<f64>().powf(1.0 / q);
            let y = g.mul(x, &g.dilate_slice(rad, &v));
            if u.contains(&y) {
                total += u.value(&y).abs();
                count += 1;
            }
        }
        if count == 0 {
            return Err(AnalysisError::EmptySample(format!("ball of radius {}", 15.0 * r)));
        }
        let mean_abs = total / count as f64;
        out.push(GarSubRatio {
            r,
            sup_norm,
            mean_abs,
            ratio: if mean_abs > 0.0 { sup_norm * r / mean_abs } else { f64::INFINITY },
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct SubJetReport {
    pub candidates: usize,
    /// Candidates passing the o(‖h‖)-relaxed inequality on the ρ ladder.
    pub relaxed: usize,
    /// Of those, how many also pass strict membership.
    pub strict: usize,
    pub agree: bool,
}

/// Sub-jet versus subdifferential at x: a candidate p passes the relaxed test
/// when sup_{‖h‖ ≤ ρ} (u(x) + ⟨p,h⟩ − u(xh))⁺/‖h‖ decreases along the ρ
/// ladder to below the membership tolerance.
pub fn subjet_check(
    g: &GroupDescriptor,
    u: &dyn ScalarField,
    x: &[f64],
    candidates: &[Vec<f64>],
    plan: &SamplingPlan,
) -> Result<SubJetReport, AnalysisError> {
    let m1 = g.horizontal_dim();
    let mut rng = plan.rng("subjet", 0);
    let dirs: Vec<Vec<f64>> = (0..plan.direction_count).map(|_| random_unit(&mut rng, m1)).collect();
    let probe = MembershipProbe::new(g, u, x, plan.base_scale, plan)?;
    let ux = u.value(x);
    let mut relaxed = 0;
    let mut strict = 0;
    for p in candidates {
        let mut last = f64::INFINITY;
        for &rho in &plan.radii {
            let mut worst: f64 = 0.0;
            for d in &dirs {
                for s in [rho, 0.5 * rho] {
                    let h = scaled(d, s);
                    let y = g.along(x, &h, 1.0);
                    if u.contains(&y) {
                        worst = worst.max((ux + dot(p, &h) - u.value(&y)) / s);
                    }
                }
            }
            last = worst;
        }
        if last <= plan.tolerances.membership {
            relaxed += 1;
            if probe.violation(p, 0.0) <= plan.tolerances.membership {
                strict += 1;
            }
        }
    }
    Ok(SubJetReport {
        candidates: candidates.len(),
        relaxed,
        strict,
        agree: relaxed == strict,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellContainment {
    pub coarse: f64,
    pub fine: f64,
    /// Excess of the fine-shell hull over the coarse-shell hull.
    pub excess: f64,
    /// Observed gradient oscillation on the fine shell (its hull diameter).
    pub oscillation: f64,
    pub passed: bool,
}

/// Hulls from successive shells: the finer hull should sit inside the coarser
/// one up to the gradient oscillation seen on the finer shell.
pub fn shell_containment(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], plan: &SamplingPlan) -> Result<Vec<ShellContainment>, AnalysisError> {
    let shells = reachable_gradient_sample(g, u, x, plan)?;
    let hulls: Vec<ConvexPolytope> = shells
        .iter()
        .map(|s| ConvexPolytope::from_points(&s.gradients).expect("nonempty shell"))
        .collect();
    Ok(shells
        .windows(2)
        .zip(hulls.windows(2))
        .map(|(s, h)| {
            let excess = h[1].excess_over(&h[0]);
            let oscillation = h[1].diameter();
            ShellContainment {
                coarse: s[0].radius,
                fine: s[1].radius,
                excess,
                oscillation,
                passed: excess <= oscillation + 1e-9,
            }
        })
        .collect())
}
