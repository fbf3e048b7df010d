//! Recovering polynomials of known support from point values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GradedPolynomial, MultiIndex};
use crate::linalg;

/// Deterministic sample points in `[-1, 1]^n`.
pub(crate) fn sample_cube(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Result of fitting a black-box function to a fixed monomial basis.
pub(crate) struct PolyFit {
    pub poly: GradedPolynomial,
    /// Largest absolute misfit at held-out points.
    pub holdout_residual: f64,
}

/// Fits `f` in the span of `basis` by least squares on twice as many sample
/// points as unknowns, then checks the fit at held-out points.
///
/// Coefficients below `snap · max|c|` are treated as roundoff and dropped.
pub(crate) fn fit_in_basis<F>(
    degrees: &[u32],
    basis: &[MultiIndex],
    f: F,
    seed: u64,
    snap: f64,
) -> Option<PolyFit>
where
    F: Fn(&[f64]) -> f64,
{
    let n = degrees.len();
    if basis.is_empty() {
        let pts = sample_cube(n, 8, seed ^ 0x5eed);
        let resid = pts.iter().map(|p| f(p).abs()).fold(0.0, f64::max);
        return Some(PolyFit {
            poly: GradedPolynomial::zero(degrees),
            holdout_residual: resid,
        });
    }
    let count = 2 * basis.len() + 8;
    let pts = sample_cube(n, count, seed);
    let unit = |a: &MultiIndex, x: &[f64]| GradedPolynomial::from_terms(degrees, [(a.clone(), 1.0)]).evaluate(x);
    let rows: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| basis.iter().map(|a| unit(a, p)).collect())
        .collect();
    let rhs: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let coeffs = linalg::lstsq(&rows, &rhs)?;
    let cmax = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
    let poly = GradedPolynomial::from_terms(
        degrees,
        basis
            .iter()
            .cloned()
            .zip(coeffs)
            .filter(|(_, c)| c.abs() > snap * cmax),
    );
    let holdout = sample_cube(n, 8, seed ^ 0x5eed);
    let holdout_residual = holdout
        .iter()
        .map(|p| (poly.evaluate(p) - f(p)).abs())
        .fold(0.0, f64::max);
    Some(PolyFit {
        poly,
        holdout_residual,
    })
}
