//! Coordinate coefficients of the left-invariant frame.
//!
//! In exponential coordinates the left-invariant field extending e_j reads
//!
//! ```text
//! X_j = ∂_j + Σ_{l : d_l > d_j} a^l_j(x) ∂_l
//! ```
//!
//! with a^l_j a (d_l − d_j)-homogeneous polynomial. Since `X_j f(x) =
//! d/dt f(x · t e_j)|_{t=0}`, a^l_j(x) is the t-linear coefficient of
//! `(x · t e_j)_l`, which is a polynomial of degree ≤ ι in t.

use super::{GroupDescriptor, GroupError};
use crate::linalg;
use crate::poly::fit::fit_in_basis;
use crate::poly::{monomials_of_weight, GradedPolynomial};

const FIT_SEED: u64 = 0x00c0_ffee;
const SNAP: f64 = 1e-13;
const FIT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct FieldCoefficients {
    degrees: Vec<u32>,
    m1: usize,
    m2: usize,
    /// `frame[j]` lists `(l, a^l_j)` for every l with d_l > d_j.
    frame: Vec<Vec<(usize, GradedPolynomial)>>,
    /// a^{li}_j stored at `[(l - m1) * m1 + i] * m1 + j`.
    second_layer: Vec<f64>,
}

impl FieldCoefficients {
    /// Extracts all frame coefficients of a validated descriptor.
    pub fn compute(g: &GroupDescriptor) -> Result<Self, GroupError> {
        let report = g.validate();
        if !report.passed() {
            return Err(GroupError::Invalid {
                name: g.name().to_string(),
                summary: report.summary(),
            });
        }
        let n = g.dim();
        let deg = g.degrees().to_vec();
        let inv = g.interpolation_inverse();
        let linear_row = &inv[1];
        let nodes = g.step() + 1;

        // t-linear coefficient of (x · t e_j)_l for all l at once
        let linear_part = |x: &[f64], j: usize| -> Vec<f64> {
            let mut acc = vec![0.0; n];
            for t in 1..=nodes {
                let mut e = vec![0.0; n];
                e[j] = t as f64;
                let z = g.mul(x, &e);
                for l in 0..n {
                    acc[l] += linear_row[t - 1] * z[l];
                }
            }
            acc
        };

        let mut frame = Vec::with_capacity(n);
        for j in 0..n {
            let mut row = Vec::new();
            for l in 0..n {
                if deg[l] <= deg[j] {
                    continue;
                }
                let w = deg[l] - deg[j];
                let basis = monomials_of_weight(&deg, w);
                let fit = fit_in_basis(&deg, &basis, |x| linear_part(x, j)[l], FIT_SEED, SNAP)
                    .ok_or(GroupError::CoefficientFit {
                        j: j + 1,
                        l: l + 1,
                        residual: f64::INFINITY,
                    })?;
                if fit.holdout_residual > FIT_TOL {
                    return Err(GroupError::CoefficientFit {
                        j: j + 1,
                        l: l + 1,
                        residual: fit.holdout_residual,
                    });
                }
                row.push((l, fit.poly));
            }
            frame.push(row);
        }

        let m1 = g.horizontal_dim();
        let m2 = g.cumulative_dims().get(2).copied().unwrap_or(m1);
        let mut second_layer = vec![0.0; (m2 - m1) * m1 * m1];
        for i in 0..m1 {
            let ei = g.basis(i);
            for j in 0..m1 {
                let lin = linear_part(&ei, j);
                for l in m1..m2 {
                    second_layer[((l - m1) * m1 + i) * m1 + j] = lin[l];
                }
            }
        }

        Ok(Self {
            degrees: deg,
            m1,
            m2,
            frame,
            second_layer,
        })
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn horizontal_dim(&self) -> usize {
        self.m1
    }

    /// m₂, the end of the second layer (equal to m₁ in step 1).
    pub fn second_layer_end(&self) -> usize {
        self.m2
    }

    /// The polynomial a^l_j (0-based); `None` unless d_l > d_j.
    pub fn coefficient(&self, j: usize, l: usize) -> Option<&GradedPolynomial> {
        self.frame[j].iter().find(|(k, _)| *k == l).map(|(_, p)| p)
    }

    /// `(l, a^l_j)` pairs for field `j`.
    pub fn frame(&self, j: usize) -> &[(usize, GradedPolynomial)] {
        &self.frame[j]
    }

    /// a^{li}_j for l in the second layer and i, j horizontal (all 0-based).
    pub fn alij(&self, l: usize, i: usize, j: usize) -> f64 {
        self.second_layer[((l - self.m1) * self.m1 + i) * self.m1 + j]
    }

    /// max |a^{li}_j + a^{lj}_i|.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in self.m1..self.m2 {
            for i in 0..self.m1 {
                for j in 0..self.m1 {
                    worst = worst.max((self.alij(l, i, j) + self.alij(l, j, i)).abs());
                }
            }
        }
        worst
    }

    /// Σ_l a^{li}_j v_l as an m₁×m₁ matrix indexed `[i][j]`, for `v` over the
    /// second layer.
    pub fn contract_second_layer(&self, v: &[f64]) -> linalg::Matrix {
        let mut out = linalg::zeros(self.m1, self.m1);
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = (self.m1..self.m2)
                    .map(|l| self.alij(l, i, j) * v[l - self.m1])
                    .sum();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn heisenberg_constants() {
        let g = registry::heisenberg(1);
        let fc = FieldCoefficients::compute(&g).unwrap();
        assert!((fc.alij(2, 0, 1) - 0.5).abs() < 1e-14);
        assert!((fc.alij(2, 1, 0) + 0.5).abs() < 1e-14);
        assert!(fc.alij(2, 0, 0).abs() < 1e-14);
        // X₁ = ∂₁ − (x₂/2)∂₃, X₂ = ∂₂ + (x₁/2)∂₃
        let a31 = fc.coefficient(0, 2).unwrap();
        let a32 = fc.coefficient(1, 2).unwrap();
        assert!((a31.evaluate(&[0.3, 0.8, 5.0]) + 0.4).abs() < 1e-14);
        assert!((a32.evaluate(&[0.3, 0.8, 5.0]) - 0.15).abs() < 1e-14);
        assert!(fc.coefficient(2, 0).is_none());
    }

    #[test]
    fn abelian_frame_is_trivial() {
        let fc = FieldCoefficients::compute(&registry::euclidean(3)).unwrap();
        for j in 0..3 {
            assert!(fc.frame(j).is_empty());
        }
        assert_eq!(fc.antisymmetry_residual(), 0.0);
    }

    #[test]
    fn engel_third_layer_coefficients_are_quadratic() {
        let g = registry::engel();
        let fc = FieldCoefficients::compute(&g).unwrap();
        for j in 0..2 {
            let a = fc.coefficient(j, 3).unwrap();
            assert!(a.hdeg().unwrap_or(2) == 2);
            let x = [0.4, -0.7, 0.3, 0.9];
            let r = 1.7;
            let scaled = a.evaluate(&g.dilate_slice(r, &x));
            assert!((scaled - r * r * a.evaluate(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_descriptor() {
        let g = GroupDescriptor::new("flat", vec![2, 1], vec![]).unwrap();
        assert!(matches!(FieldCoefficients::compute(&g), Err(GroupError::Invalid { .. })));
    }
}
