//! Left-invariant calculus on polynomials of homogeneous degree at most two.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use thiserror::Error;

use super::fit::fit_in_basis;
use super::{monomials_up_to_weight, GradedPolynomial, MultiIndex};
use crate::group::{FieldCoefficients, GroupDescriptor};
use crate::linalg::{self, Matrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("homogeneous degree {found} exceeds the supported maximum {max}")]
    DegreeTooHigh { found: u32, max: u32 },
    #[error("polynomial has {got} variables, group has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("left translation fit failed (residual {0:e})")]
    TranslationFit(f64),
}

fn require_deg2(p: &GradedPolynomial) -> Result<(), PolyError> {
    match p.hdeg() {
        Some(d) if d > 2 => Err(PolyError::DegreeTooHigh { found: d, max: 2 }),
        _ => Ok(()),
    }
}

fn require_dim(fc: &FieldCoefficients, p: &GradedPolynomial) -> Result<(), PolyError> {
    if p.nvars() != fc.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: fc.dim(),
            got: p.nvars(),
        });
    }
    Ok(())
}

/// X_j P = ∂_j P + Σ_l a^l_j ∂_l P, computed exactly.
pub fn apply_field(fc: &FieldCoefficients, j: usize, p: &GradedPolynomial) -> GradedPolynomial {
    let mut out = p.partial(j);
    for (l, a) in fc.frame(j) {
        let d = p.partial(*l);
        if !d.is_zero() {
            out = &out + &(a * &d);
        }
    }
    out
}

/// Values X^I P(0) for the words I with d(I) ≤ 2 used by the jet map:
/// the empty word, single fields up to the second layer, and horizontal pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetCoefficients {
    pub value: f64,
    /// X_l P(0) for l < m₂.
    pub first: Vec<f64>,
    /// `pairs[i][j]` = X_i X_j P(0) for horizontal i, j.
    pub pairs: Matrix,
}

pub fn jet_coefficients(fc: &FieldCoefficients, p: &GradedPolynomial) -> Result<JetCoefficients, PolyError> {
    require_dim(fc, p)?;
    require_deg2(p)?;
    let n = fc.dim();
    let origin = vec![0.0; n];
    let m1 = fc.horizontal_dim();
    let m2 = fc.second_layer_end();
    let singles: Vec<GradedPolynomial> = (0..m2).map(|l| apply_field(fc, l, p)).collect();
    let first = singles.iter().map(|q| q.evaluate(&origin)).collect();
    let mut pairs = linalg::zeros(m1, m1);
    for (i, row) in pairs.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = apply_field(fc, i, &singles[j]).evaluate(&origin);
        }
    }
    Ok(JetCoefficients {
        value: p.evaluate(&origin),
        first,
        pairs,
    })
}

/// Second-order package at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Jet2 {
    pub value: f64,
    /// ∇_H u(x).
    pub g: Vec<f64>,
    /// ∇_{V₂} u(x).
    pub v2: Vec<f64>,
    /// Symmetrized horizontal Hessian.
    pub h: Matrix,
    /// `a[j][i]` = A^i_j, so that X_j P(w) = Σ_i A^i_j w_i.
    pub a: Matrix,
}

impl Jet2 {
    pub fn zero(m1: usize, m2_minus_m1: usize) -> Self {
        Self {
            value: 0.0,
            g: vec![0.0; m1],
            v2: vec![0.0; m2_minus_m1],
            h: linalg::zeros(m1, m1),
            a: linalg::zeros(m1, m1),
        }
    }

    pub fn from_polynomial(fc: &FieldCoefficients, p: &GradedPolynomial) -> Result<Self, PolyError> {
        let jc = jet_coefficients(fc, p)?;
        let m1 = fc.horizontal_dim();
        Ok(Self {
            value: jc.value,
            g: jc.first[..m1].to_vec(),
            v2: jc.first[m1..].to_vec(),
            h: linalg::symmetric_part(&jc.pairs),
            a: linalg::transpose(&jc.pairs),
        })
    }

    /// Entrywise H_ij − (A^i_j − Σ_l a^{li}_j v_l).
    pub fn claim3_residual(&self, fc: &FieldCoefficients) -> Matrix {
        let contraction = fc.contract_second_layer(&self.v2);
        let m1 = self.g.len();
        let mut r = linalg::zeros(m1, m1);
        for i in 0..m1 {
            for j in 0..m1 {
                r[i][j] = self.h[i][j] - (self.a[j][i] - contraction[i][j]);
            }
        }
        r
    }
}

/// The h-degree ≤ 2 polynomial with the given value, first-order data and
/// symmetrized Hessian:
/// `value + ⟨g, π₁w⟩ + ⟨v₂, π₂w⟩ + ½⟨H π₁w, π₁w⟩`.
pub fn poly_from_jet2(degrees: &[u32], jet: &Jet2) -> GradedPolynomial {
    let n = degrees.len();
    let m1 = jet.g.len();
    let mut terms = vec![(MultiIndex::zero(n), jet.value)];
    for (i, &gi) in jet.g.iter().enumerate() {
        terms.push((MultiIndex::unit(n, i), gi));
    }
    for (l, &vl) in jet.v2.iter().enumerate() {
        terms.push((MultiIndex::unit(n, m1 + l), vl));
    }
    for i in 0..m1 {
        for j in 0..m1 {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            terms.push((MultiIndex::new(e), 0.5 * jet.h[i][j]));
        }
    }
    GradedPolynomial::from_terms(degrees, terms)
}

/// Inverse of [`jet_coefficients`]. The skew part of `pairs` is fixed by the
/// second-layer values and is not free data.
pub fn poly_from_jet_coefficients(fc: &FieldCoefficients, jc: &JetCoefficients) -> GradedPolynomial {
    let m1 = fc.horizontal_dim();
    let jet = Jet2 {
        value: jc.value,
        g: jc.first[..m1].to_vec(),
        v2: jc.first[m1..].to_vec(),
        h: linalg::symmetric_part(&jc.pairs),
        a: linalg::transpose(&jc.pairs),
    };
    poly_from_jet2(fc.degrees(), &jet)
}

/// Symmetrized horizontal Hessian (X_iX_j + X_jX_i)P/2 and the second-layer
/// gradient (X_l P) for l in V₂. Both are constant when hdeg(P) ≤ 2.
pub fn sym_hessian(fc: &FieldCoefficients, p: &GradedPolynomial) -> Result<(Matrix, Vec<f64>), PolyError> {
    let jc = jet_coefficients(fc, p)?;
    let m1 = fc.horizontal_dim();
    Ok((linalg::symmetric_part(&jc.pairs), jc.first[m1..].to_vec()))
}

/// Symmetric horizontal coefficients (c_ij + c_ji)/2 of P = ½Σ c_ij x_i x_j + ….
pub fn horizontal_quadratic_coefficients(m1: usize, p: &GradedPolynomial) -> Matrix {
    let n = p.nvars();
    let mut c = linalg::zeros(m1, m1);
    for i in 0..m1 {
        for j in i..m1 {
            let mut e = vec![0; n];
            e[i] += 1;
            e[j] += 1;
            let coef = p.coefficient(&MultiIndex::new(e));
            if i == j {
                c[i][i] = 2.0 * coef;
            } else {
                c[i][j] = coef;
                c[j][i] = coef;
            }
        }
    }
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct AlijCheck {
    /// `residual[i][j]` for the horizontal pair (i, j).
    pub residual: Matrix,
    pub max_abs: f64,
}

/// Residual of X_iX_jP = (c_ij + c_ji)/2 + Σ_l X_lP a^{li}_j.
pub fn check_alij(fc: &FieldCoefficients, p: &GradedPolynomial) -> Result<AlijCheck, PolyError> {
    require_dim(fc, p)?;
    require_deg2(p)?;
    let m1 = fc.horizontal_dim();
    let m2 = fc.second_layer_end();
    let origin = vec![0.0; fc.dim()];
    let c = horizontal_quadratic_coefficients(m1, p);
    let xl: Vec<f64> = (m1..m2).map(|l| apply_field(fc, l, p).evaluate(&origin)).collect();
    let a_term = fc.contract_second_layer(&xl);
    let mut residual = linalg::zeros(m1, m1);
    let mut max_abs: f64 = 0.0;
    for i in 0..m1 {
        for j in 0..m1 {
            let lhs = apply_field(fc, i, &apply_field(fc, j, p)).evaluate(&origin);
            let r = lhs - c[i][j] - a_term[i][j];
            residual[i][j] = r;
            max_abs = max_abs.max(r.abs());
        }
    }
    Ok(AlijCheck { residual, max_abs })
}

/// Point on the homogeneous unit sphere built layer by layer: layer s
/// receives a unit direction scaled by ρ_s^s, with Σ ρ_s = 1.
fn sphere_point(layer_dims: &[usize], dirs: &[Vec<f64>], rho: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for (s, (dir, r)) in dirs.iter().zip(rho).enumerate() {
        debug_assert_eq!(dir.len(), layer_dims[s]);
        let scale = r.powi(s as i32 + 1);
        out.extend(dir.iter().map(|d| d * scale));
    }
    out
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = linalg::norm2(&v);
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Uniform-ish sample of the unit quasi-sphere ‖w‖ = 1.
pub fn sample_quasi_sphere(layer_dims: &[usize], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let dirs: Vec<Vec<f64>> = layer_dims.iter().map(|&k| random_unit(rng, k)).collect();
    let mut rho: Vec<f64> = (0..layer_dims.len()).map(|_| rng.random::<f64>()).collect();
    let total: f64 = rho.iter().sum();
    if total <= 0.0 {
        rho = vec![0.0; layer_dims.len()];
        rho[0] = 1.0;
    } else {
        rho.iter_mut().for_each(|r| *r /= total);
    }
    sphere_point(layer_dims, &dirs, &rho)
}

/// Sampled lower bound for λ = max_{‖w‖=1} |P^{(2)}(w)|.
#[derive(Clone, Debug, Serialize)]
pub struct LambdaEstimate {
    pub lambda: f64,
    pub samples: usize,
    pub note: String,
}

pub const LAMBDA_SAMPLES: usize = 10_000;
/// Factor applied wherever a sampled λ feeds a later check.
pub const LAMBDA_SAFETY: f64 = 1.05;

pub fn lambda_max(g: &GroupDescriptor, p: &GradedPolynomial, seed: u64) -> Result<LambdaEstimate, PolyError> {
    if p.nvars() != g.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: g.dim(),
            got: p.nvars(),
        });
    }
    require_deg2(p)?;
    let q = p.homogeneous_part(2);
    if q.is_zero() {
        return Ok(LambdaEstimate {
            lambda: 0.0,
            samples: 0,
            note: "zero quadratic part".into(),
        });
    }
    let dims = g.layer_dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scored: Vec<(f64, Vec<f64>)> = (0..LAMBDA_SAMPLES)
        .map(|_| {
            let w = sample_quasi_sphere(dims, &mut rng);
            (q.evaluate(&w).abs(), w)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = scored[0].0;
    // hill-climb from the best few samples, renormalizing onto the sphere
    for (start_val, start) in scored.into_iter().take(8) {
        let (mut val, mut w) = (start_val, start);
        let mut step = 0.1;
        while step > 1e-9 {
            let mut improved = false;
            for _ in 0..4 * w.len() {
                let d = random_unit(&mut rng, w.len());
                let trial: Vec<f64> = w.iter().zip(&d).map(|(a, b)| a + step * b).collect();
                let nrm = g.homogeneous_norm(&trial);
                if nrm < 1e-12 {
                    continue;
                }
                let trial = g.dilate_slice(1.0 / nrm, &trial);
                let tv = q.evaluate(&trial).abs();
                if tv > val {
                    val = tv;
                    w = trial;
                    improved = true;
                }
            }
            // pull toward the horizontal equator, which random steps reach only
            // at the √ rate of the quasi-norm
            let mut damped = w.clone();
            for x in damped.iter_mut().skip(g.horizontal_dim()) {
                *x *= 0.5;
            }
            let nrm = g.homogeneous_norm(&damped);
            if nrm > 1e-12 {
                let trial = g.dilate_slice(1.0 / nrm, &damped);
                let tv = q.evaluate(&trial).abs();
                if tv > val {
                    val = tv;
                    w = trial;
                    improved = true;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.max(val);
    }
    Ok(LambdaEstimate {
        lambda: best,
        samples: LAMBDA_SAMPLES,
        note: format!("sampled maximum over {LAMBDA_SAMPLES} sphere points plus local refinement; lower bound"),
    })
}

const TRANSLATE_SEED: u64 = 0x7a51_a7e5;
const TRANSLATE_TOL: f64 = 1e-9;

/// The polynomial h ↦ P(x·h), recovered by exact fitting over the
/// weight-≤2 monomials.
pub fn left_translate_poly(g: &GroupDescriptor, p: &GradedPolynomial, x: &[f64]) -> Result<GradedPolynomial, PolyError> {
    if p.nvars() != g.dim() || x.len() != g.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: g.dim(),
            got: if p.nvars() != g.dim() { p.nvars() } else { x.len() },
        });
    }
    require_deg2(p)?;
    let deg = g.degrees();
    let basis = monomials_up_to_weight(deg, 2);
    let scale = 1.0 + p.max_abs_coefficient() * (1.0 + linalg::norm2(x)).powi(2);
    let fit = fit_in_basis(deg, &basis, |h| p.evaluate(&g.mul(x, h)), TRANSLATE_SEED, 1e-14)
        .ok_or(PolyError::TranslationFit(f64::INFINITY))?;
    if fit.holdout_residual > TRANSLATE_TOL * scale {
        return Err(PolyError::TranslationFit(fit.holdout_residual));
    }
    Ok(fit.poly.pruned(1e-13 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    fn h1() -> (GroupDescriptor, FieldCoefficients) {
        let g = registry::heisenberg(1);
        let fc = FieldCoefficients::compute(&g).unwrap();
        (g, fc)
    }

    fn var(g: &GroupDescriptor, i: usize) -> GradedPolynomial {
        GradedPolynomial::variable(g.degrees(), i)
    }

    fn close(a: &GradedPolynomial, b: &GradedPolynomial, tol: f64) -> bool {
        (a - b).max_abs_coefficient() <= tol
    }

    #[test]
    fn fields_on_vertical_coordinate() {
        let (g, fc) = h1();
        let x3 = var(&g, 2);
        assert!(close(&apply_field(&fc, 0, &x3), &var(&g, 1).scale(-0.5), 1e-14));
        assert!(close(&apply_field(&fc, 1, &x3), &var(&g, 0).scale(0.5), 1e-14));
        let one = GradedPolynomial::constant(g.degrees(), 1.0);
        assert!(close(&apply_field(&fc, 0, &var(&g, 0)), &one, 0.0));
    }

    #[test]
    fn jet_of_vertical_coordinate() {
        let (g, fc) = h1();
        let jc = jet_coefficients(&fc, &var(&g, 2)).unwrap();
        assert_eq!(jc.first, vec![0.0, 0.0, 1.0]);
        assert!((jc.pairs[0][1] - 0.5).abs() < 1e-14);
        assert!((jc.pairs[1][0] + 0.5).abs() < 1e-14);
        let back = poly_from_jet_coefficients(&fc, &jc);
        assert!(close(&back, &var(&g, 2), 1e-14));
    }

    #[test]
    fn jet_rejects_cubic() {
        let (g, fc) = h1();
        let p = &var(&g, 0) * &var(&g, 2);
        assert_eq!(
            jet_coefficients(&fc, &p).unwrap_err(),
            PolyError::DegreeTooHigh { found: 3, max: 2 }
        );
    }

    #[test]
    fn hessian_examples() {
        let (g, fc) = h1();
        let p = &(&var(&g, 0) * &var(&g, 0)) + &(&var(&g, 1) * &var(&g, 1));
        let (h, v) = sym_hessian(&fc, &p).unwrap();
        assert_eq!(h, vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        assert_eq!(v, vec![0.0]);
        let (h, v) = sym_hessian(&fc, &var(&g, 2)).unwrap();
        assert!(h.iter().flatten().all(|x| x.abs() < 1e-15));
        assert_eq!(v, vec![1.0]);
        // ½x₁x₂ is c₁₂ = 1, c₂₁ = 0 in the ½Σ c_ij x_i x_j normalization
        let (h, _) = sym_hessian(&fc, &(&var(&g, 0) * &var(&g, 1)).scale(0.5)).unwrap();
        assert!((h[0][1] - 0.5).abs() < 1e-15 && (h[1][0] - 0.5).abs() < 1e-15);
        let (h, _) = sym_hessian(&fc, &(&var(&g, 0) * &var(&g, 1))).unwrap();
        assert!((h[0][1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn jet_assembly_matches_expanded_form() {
        let (g, fc) = h1();
        let alpha = 0.7;
        let jet = Jet2 {
            value: 0.0,
            g: vec![0.0, 0.0],
            v2: vec![alpha],
            h: vec![vec![2.0, 0.0], vec![0.0, 2.0]],
            a: linalg::zeros(2, 2),
        };
        let p = poly_from_jet2(g.degrees(), &jet);
        let expected = &(&(&var(&g, 0) * &var(&g, 0)) + &(&var(&g, 1) * &var(&g, 1))) + &var(&g, 2).scale(alpha);
        assert!(close(&p, &expected, 1e-15));
        let back = Jet2::from_polynomial(&fc, &p).unwrap();
        assert!(linalg::mat_max_abs_diff(&back.h, &jet.h) < 1e-14);
        assert!((back.v2[0] - alpha).abs() < 1e-14);
    }

    #[test]
    fn claim3_on_mixed_quadratic() {
        let (g, fc) = h1();
        let p = &(&(&var(&g, 0) * &var(&g, 0)) + &(&var(&g, 1) * &var(&g, 1))) + &var(&g, 2);
        let jet = Jet2::from_polynomial(&fc, &p).unwrap();
        // A = [[2, -1/2], [1/2, 2]] from X₁u = 2x₁ − x₂/2, X₂u = 2x₂ + x₁/2
        let want = vec![vec![2.0, -0.5], vec![0.5, 2.0]];
        assert!(linalg::mat_max_abs_diff(&jet.a, &want) < 1e-14);
        let r = jet.claim3_residual(&fc);
        assert!(r.iter().flatten().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn alij_on_horizontal_quadratic_has_no_correction() {
        let (g, fc) = h1();
        let p = &(&var(&g, 0) * &var(&g, 1)).scale(3.0) + &(&var(&g, 0) * &var(&g, 0));
        let r = check_alij(&fc, &p).unwrap();
        assert!(r.max_abs < 1e-14);
    }

    #[test]
    fn lambda_of_horizontal_square() {
        let (g, _) = h1();
        let p = &(&var(&g, 0) * &var(&g, 0)) + &(&var(&g, 1) * &var(&g, 1));
        let est = lambda_max(&g, &p, 1).unwrap();
        assert!((est.lambda - 1.0).abs() < 1e-6, "{}", est.lambda);
        let zero = GradedPolynomial::zero(g.degrees());
        assert_eq!(lambda_max(&g, &zero, 1).unwrap().lambda, 0.0);
    }

    #[test]
    fn translate_vertical_coordinate() {
        let (g, _) = h1();
        let t = left_translate_poly(&g, &var(&g, 2), &[1.0, 0.0, 0.0]).unwrap();
        let want = &var(&g, 2) + &var(&g, 1).scale(0.5);
        assert!(close(&t, &want, 1e-12), "{t}");
        let same = left_translate_poly(&g, &var(&g, 2), &[0.0; 3]).unwrap();
        assert!(close(&same, &var(&g, 2), 1e-12));
    }
}
