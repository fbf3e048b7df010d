//! Small dense linear algebra used across the crate.
//!
//! Matrices cross module boundaries as row-major `Vec<Vec<f64>>`; nalgebra is
//! used internally for factorizations.

use nalgebra::{DMatrix, DVector};

pub type Matrix = Vec<Vec<f64>>;

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    vec![vec![0.0; cols]; rows]
}

pub fn identity(n: usize) -> Matrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn mat_vec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// Largest absolute entry of `a - b`.
pub fn mat_max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| max_abs_diff(ra, rb))
        .fold(0.0, f64::max)
}

pub fn transpose(m: &Matrix) -> Matrix {
    if m.is_empty() {
        return Vec::new();
    }
    let (r, c) = (m.len(), m[0].len());
    (0..c).map(|j| (0..r).map(|i| m[i][j]).collect()).collect()
}

/// `(m + mᵀ) / 2`.
pub fn symmetric_part(m: &Matrix) -> Matrix {
    let t = transpose(m);
    m.iter()
        .zip(&t)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect())
        .collect()
}

/// `(m - mᵀ) / 2`.
pub fn skew_part(m: &Matrix) -> Matrix {
    let t = transpose(m);
    m.iter()
        .zip(&t)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * (x - y)).collect())
        .collect()
}

fn to_dmatrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

/// Numerical rank of the matrix whose rows are `rows`.
pub fn rank(rows: &[Vec<f64>], cols: usize, rel_tol: f64) -> usize {
    if rows.is_empty() || cols == 0 {
        return 0;
    }
    let m = to_dmatrix(rows, cols);
    let sv = m.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Least-squares solution of `A x ≈ b` via SVD. Returns `None` when `A` does
/// not have full column rank at relative tolerance `1e-12`.
pub fn lstsq(rows: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let cols = rows.first()?.len();
    if rows.len() < cols {
        return None;
    }
    let a = to_dmatrix(rows, cols);
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 || svd.singular_values.iter().any(|&s| s <= 1e-12 * smax) {
        return None;
    }
    let x = svd.solve(&b, 0.0).ok()?;
    Some(x.iter().cloned().collect())
}

/// Solves a square system by LU with partial pivoting.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let m = to_dmatrix(a, n);
    let x = m.lu().solve(&DVector::from_column_slice(b))?;
    Some(x.iter().cloned().collect())
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.len();
    let inv = to_dmatrix(a, n).try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method, ascending.
pub fn jacobi_eigenvalues(sym: &Matrix) -> Vec<f64> {
    let n = sym.len();
    let mut a = sym.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_characteristic_polynomial() {
        // [[1,2],[2,1]]: λ² - 2λ - 3 = 0 -> {-1, 3}
        let ev = jacobi_eigenvalues(&vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!((ev[0] + 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_three_by_three() {
        // tridiagonal (2,-1) has eigenvalues 2 - √2, 2, 2 + √2
        let m = vec![
            vec![2.0, -1.0, 0.0],
            vec![-1.0, 2.0, -1.0],
            vec![0.0, -1.0, 2.0],
        ];
        let ev = jacobi_eigenvalues(&m);
        let s = 2f64.sqrt();
        assert!((ev[0] - (2.0 - s)).abs() < 1e-13);
        assert!((ev[1] - 2.0).abs() < 1e-13);
        assert!((ev[2] - (2.0 + s)).abs() < 1e-13);
    }

    #[test]
    fn lstsq_rejects_rank_deficient() {
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]];
        assert!(lstsq(&rows, &[1.0, 2.0, 3.0]).is_none());
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let x = lstsq(&rows, &[1.0, 2.0, 3.0]).unwrap();
        assert!(max_abs_diff(&x, &[1.0, 2.0]) < 1e-14);
    }

    #[test]
    fn rank_counts_independent_rows() {
        let rows = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]];
        assert_eq!(rank(&rows, 3, 1e-10), 2);
    }
}
