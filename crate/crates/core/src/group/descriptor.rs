use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Deref, Range};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::bch::DynkinSeries;
use super::validate::{self, ValidationReport};
use crate::linalg;

/// Largest step for which the Dynkin word table is built.
pub const MAX_STEP: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupError {
    #[error("a group needs at least one layer")]
    NoLayers,
    #[error("layer dimensions must be positive, got {0:?}")]
    EmptyLayer(Vec<usize>),
    #[error("step {0} exceeds the supported maximum of {MAX_STEP}")]
    StepTooLarge(usize),
    #[error("bracket [e{i}, e{j}] -> e{k} refers to a basis index outside 1..={dim}")]
    BracketIndex {
        i: usize,
        j: usize,
        k: usize,
        dim: usize,
    },
    #[error("structure constant for [e{i}, e{j}] -> e{k} is not finite")]
    NonFiniteConstant { i: usize, j: usize, k: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinates must be finite")]
    NonFinite,
    #[error("dilation factor must be positive, got {0}")]
    NonPositiveDilation(f64),
    #[error("layer index {index} out of range 1..={step}")]
    LayerOutOfRange { index: usize, step: usize },
    #[error("descriptor '{name}' failed validation: {summary}")]
    Invalid { name: String, summary: String },
    #[error("cannot parse descriptor: {0}")]
    Parse(String),
    #[error("field coefficient fit for a^{l}_{j} left residual {residual:e}")]
    CoefficientFit { j: usize, l: usize, residual: f64 },
}

/// One declared bracket `[e_i, e_j] ∋ c e_k`, 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub c: f64,
}

/// A point of the group in exponential coordinates of the first kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPoint(Vec<f64>);

impl GroupPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self, GroupError> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GroupError::NonFinite);
        }
        Ok(Self(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GroupPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for GroupPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A stratified Lie algebra together with its derived group law.
///
/// Coordinates are graded: the first `m₁` belong to the horizontal layer, the
/// next `m₂ - m₁` to the second layer, and so on. Structure constants are
/// stored densely as `c[i][j][k]` with `[eᵢ, eⱼ] = Σ_k c^k_{ij} e_k`.
#[derive(Clone)]
pub struct GroupDescriptor {
    name: String,
    layer_dims: Vec<usize>,
    offsets: Vec<usize>,
    degrees: Vec<u32>,
    dim: usize,
    constants: Vec<f64>,
    nonzero: Vec<(usize, usize, usize, f64)>,
    declared: Vec<BracketEntry>,
    series: DynkinSeries,
}

impl fmt::Debug for GroupDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupDescriptor")
            .field("name", &self.name)
            .field("layer_dims", &self.layer_dims)
            .field("brackets", &self.declared)
            .finish()
    }
}

impl GroupDescriptor {
    /// Builds the descriptor without checking the Lie-algebra invariants; use
    /// [`GroupDescriptor::validate`] for those.
    ///
    /// A declared entry `(i, j, k, c)` also fixes `c^k_{ji} = -c` unless the
    /// reversed entry is declared separately, in which case both are kept as
    /// given and any inconsistency shows up as an antisymmetry violation.
    pub fn new(
        name: impl Into<String>,
        layer_dims: Vec<usize>,
        brackets: Vec<BracketEntry>,
    ) -> Result<Self, GroupError> {
        if layer_dims.is_empty() {
            return Err(GroupError::NoLayers);
        }
        if layer_dims.contains(&0) {
            return Err(GroupError::EmptyLayer(layer_dims));
        }
        let step = layer_dims.len();
        if step > MAX_STEP {
            return Err(GroupError::StepTooLarge(step));
        }
        let mut offsets = vec![0];
        let mut degrees = Vec::new();
        for (s, &d) in layer_dims.iter().enumerate() {
            offsets.push(offsets[s] + d);
            degrees.extend(std::iter::repeat_n(s as u32 + 1, d));
        }
        let dim = offsets[step];

        let mut raw: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
        for b in &brackets {
            if b.i >= dim || b.j >= dim || b.k >= dim {
                return Err(GroupError::BracketIndex {
                    i: b.i + 1,
                    j: b.j + 1,
                    k: b.k + 1,
                    dim,
                });
            }
            if !b.c.is_finite() {
                return Err(GroupError::NonFiniteConstant {
                    i: b.i + 1,
                    j: b.j + 1,
                    k: b.k + 1,
                });
            }
            *raw.entry((b.i, b.j, b.k)).or_insert(0.0) += b.c;
        }
        let mut constants = vec![0.0; dim * dim * dim];
        for (&(i, j, k), &c) in &raw {
            constants[(i * dim + j) * dim + k] = c;
            if !raw.contains_key(&(j, i, k)) && i != j {
                constants[(j * dim + i) * dim + k] = -c;
            }
        }
        let mut nonzero = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let c = constants[(i * dim + j) * dim + k];
                    if c != 0.0 {
                        nonzero.push((i, j, k, c));
                    }
                }
            }
        }
        Ok(Self {
            name: name.into(),
            layer_dims,
            offsets,
            degrees,
            dim,
            constants,
            nonzero,
            declared: brackets,
            series: DynkinSeries::new(step),
        })
    }

    /// Like [`GroupDescriptor::new`] but rejects descriptors that fail validation.
    pub fn new_validated(
        name: impl Into<String>,
        layer_dims: Vec<usize>,
        brackets: Vec<BracketEntry>,
    ) -> Result<Self, GroupError> {
        let g = Self::new(name, layer_dims, brackets)?;
        let report = g.validate();
        if !report.passed() {
            return Err(GroupError::Invalid {
                name: g.name.clone(),
                summary: report.summary(),
            });
        }
        Ok(g)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of layers ι.
    pub fn step(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    /// Dilation exponents d₁…d_n.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    /// m₁, the dimension of the horizontal layer.
    pub fn horizontal_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// m_s for s = 0..=ι (m₀ = 0).
    pub fn cumulative_dims(&self) -> &[usize] {
        &self.offsets
    }

    /// Coordinate range of layer `s` (1-based).
    pub fn layer_range(&self, s: usize) -> Range<usize> {
        self.offsets[s - 1]..self.offsets[s]
    }

    pub fn declared_brackets(&self) -> &[BracketEntry] {
        &self.declared
    }

    /// c^k_{ij}, 0-based.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.constants[(i * self.dim + j) * self.dim + k]
    }

    pub fn nonzero_constants(&self) -> &[(usize, usize, usize, f64)] {
        &self.nonzero
    }

    pub fn dynkin_series(&self) -> &DynkinSeries {
        &self.series
    }

    /// Lie bracket of two algebra elements.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        for &(i, j, k, c) in &self.nonzero {
            z[k] += c * x[i] * y[j];
        }
        z
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), GroupError> {
        if x.len() != self.dim {
            return Err(GroupError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Group product `x · y`.
    pub fn bch_product(&self, x: &GroupPoint, y: &GroupPoint) -> Result<GroupPoint, GroupError> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        Ok(GroupPoint(self.mul(x, y)))
    }

    /// Unchecked product on raw coordinate slices.
    pub fn mul(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        self.series.evaluate(x, y, |a, b| self.bracket(a, b))
    }

    pub fn inverse(&self, x: &GroupPoint) -> GroupPoint {
        GroupPoint(x.iter().map(|c| -c).collect())
    }

    /// δ_r x.
    pub fn dilate(&self, r: f64, x: &GroupPoint) -> Result<GroupPoint, GroupError> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(GroupError::NonPositiveDilation(r));
        }
        self.check_dim(x)?;
        Ok(GroupPoint(self.dilate_slice(r, x)))
    }

    pub fn dilate_slice(&self, r: f64, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.degrees)
            .map(|(c, &d)| c * r.powi(d as i32))
            .collect()
    }

    /// ‖x‖ = Σ_s |π_s x|₂^{1/s}.
    pub fn homogeneous_norm(&self, x: &[f64]) -> f64 {
        (1..=self.step())
            .map(|s| {
                let r = self.layer_range(s);
                linalg::norm2(&x[r]).powf(1.0 / s as f64)
            })
            .sum()
    }

    /// d(x, y) = ‖x⁻¹ y‖.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let xinv: Vec<f64> = x.iter().map(|c| -c).collect();
        self.homogeneous_norm(&self.mul(&xinv, y))
    }

    /// π_s x for a 1-based layer index.
    pub fn project_layer(&self, x: &[f64], s: usize) -> Result<Vec<f64>, GroupError> {
        if s == 0 || s > self.step() {
            return Err(GroupError::LayerOutOfRange {
                index: s,
                step: self.step(),
            });
        }
        self.check_dim(x)?;
        Ok(x[self.layer_range(s)].to_vec())
    }

    /// Embeds a horizontal vector as the point `(h, 0, …, 0)`.
    pub fn horizontal_point(&self, h: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        p[..h.len()].copy_from_slice(h);
        p
    }

    /// x · δ_t h for horizontal `h`.
    pub fn along(&self, x: &[f64], h: &[f64], t: f64) -> Vec<f64> {
        let th: Vec<f64> = h.iter().map(|c| c * t).collect();
        self.mul(x, &self.horizontal_point(&th))
    }

    /// Basis vector e_i as a point.
    pub fn basis(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim];
        e[i] = 1.0;
        e
    }

    /// Coefficients in t of `t ↦ (x · t e_j)_l` for every coordinate `l`,
    /// obtained by interpolating at t = 1, …, ι + 1.
    ///
    /// Row `l` holds the coefficients of powers 0..=ι.
    pub fn line_polynomials(&self, x: &[f64], j: usize) -> Vec<Vec<f64>> {
        let inv = self.interpolation_inverse();
        let nodes = self.step() + 1;
        let samples: Vec<Vec<f64>> = (1..=nodes)
            .map(|t| {
                let mut e = vec![0.0; self.dim];
                e[j] = t as f64;
                self.mul(x, &e)
            })
            .collect();
        (0..self.dim)
            .map(|l| {
                let v: Vec<f64> = samples.iter().map(|s| s[l]).collect();
                linalg::mat_vec(&inv, &v)
            })
            .collect()
    }

    /// Inverse of the Vandermonde matrix at nodes 1..=ι+1.
    pub(crate) fn interpolation_inverse(&self) -> linalg::Matrix {
        let nodes = self.step() + 1;
        let v: linalg::Matrix = (1..=nodes)
            .map(|t| (0..nodes).map(|p| (t as f64).powi(p as i32)).collect())
            .collect();
        linalg::inverse(&v).expect("Vandermonde at distinct nodes is invertible")
    }
}
