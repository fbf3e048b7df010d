//! Invariant checks for stratified Lie algebras.

use std::fmt;

use serde::Serialize;

use super::GroupDescriptor;
use crate::linalg;

/// One violated invariant. Indices are 1-based, as in descriptor files.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Antisymmetry { i: usize, j: usize, k: usize, sum: f64 },
    Grading { i: usize, j: usize, k: usize },
    Jacobi { i: usize, j: usize, k: usize, residual: f64 },
    Stratification { layer: usize, rank: usize, expected: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Antisymmetry { i, j, k, sum } => {
                write!(f, "antisymmetry: c^{k}_({i},{j}) + c^{k}_({j},{i}) = {sum}")
            }
            Violation::Grading { i, j, k } => {
                write!(f, "grading: [e{i}, e{j}] has a component on e{k} outside the expected layer")
            }
            Violation::Jacobi { i, j, k, residual } => {
                write!(f, "jacobi: triple ({i},{j},{k}) residual {residual:e}")
            }
            Violation::Stratification { layer, rank, expected } => {
                write!(f, "stratification: [V1, V{}] spans rank {rank}, layer {layer} has dimension {expected}", layer - 1)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        if self.passed() {
            return "pass".into();
        }
        self.violations
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

const JACOBI_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;

pub(crate) fn validate(g: &GroupDescriptor) -> ValidationReport {
    let n = g.dim();
    let deg = g.degrees();
    let mut violations = Vec::new();

    for i in 0..n {
        for j in i..n {
            for k in 0..n {
                let s = g.constant(i, j, k) + g.constant(j, i, k);
                let diag = if i == j { g.constant(i, i, k) } else { 0.0 };
                if s != 0.0 || diag != 0.0 {
                    violations.push(Violation::Antisymmetry {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        sum: s,
                    });
                }
            }
        }
    }

    let mut off_grade = std::collections::BTreeSet::new();
    for &(i, j, k, _) in g.nonzero_constants() {
        if deg[k] != deg[i] + deg[j] {
            off_grade.insert((i.min(j), i.max(j), k));
        }
    }
    for (i, j, k) in off_grade {
        violations.push(Violation::Grading {
            i: i + 1,
            j: j + 1,
            k: k + 1,
        });
    }

    let scale = g
        .nonzero_constants()
        .iter()
        .map(|c| c.3.abs())
        .fold(0.0, f64::max)
        .max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (ei, ej, ek) = (g.basis(i), g.basis(j), g.basis(k));
                let a = g.bracket(&g.bracket(&ei, &ej), &ek);
                let b = g.bracket(&g.bracket(&ej, &ek), &ei);
                let c = g.bracket(&g.bracket(&ek, &ei), &ej);
                let residual = (0..n)
                    .map(|m| (a[m] + b[m] + c[m]).abs())
                    .fold(0.0, f64::max);
                if residual > JACOBI_TOL * scale * scale {
                    violations.push(Violation::Jacobi {
                        i: i + 1,
                        j: j + 1,
                        k: k + 1,
                        residual,
                    });
                }
            }
        }
    }

    for s in 2..=g.step() {
        let target = g.layer_range(s);
        let mut rows = Vec::new();
        for i in g.layer_range(1) {
            for j in g.layer_range(s - 1) {
                let v = g.bracket(&g.basis(i), &g.basis(j));
                rows.push(v[target.clone()].to_vec());
            }
        }
        let expected = target.len();
        let rank = linalg::rank(&rows, expected, RANK_TOL);
        if rank != expected {
            violations.push(Violation::Stratification {
                layer: s,
                rank,
                expected,
            });
        }
    }

    ValidationReport { violations }
}
