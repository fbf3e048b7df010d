use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Exponent vector α of a monomial x^α.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Self(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Homogeneous weight d(α) = Σ dᵢ αᵢ.
    pub fn weight(&self, degrees: &[u32]) -> u32 {
        self.0.iter().zip(degrees).map(|(a, d)| a * d).sum()
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(a, _)| **a > 0)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }
}

/// All multi-indices of weight exactly `w`, in increasing order.
pub fn monomials_of_weight(degrees: &[u32], w: u32) -> Vec<MultiIndex> {
    fn rec(degrees: &[u32], pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == degrees.len() {
            if left == 0 {
                out.push(MultiIndex(cur.clone()));
            }
            return;
        }
        let d = degrees[pos];
        let mut a = 0;
        while a * d <= left {
            cur.push(a);
            rec(degrees, pos + 1, left - a * d, cur, out);
            cur.pop();
            a += 1;
        }
    }
    let mut out = Vec::new();
    rec(degrees, 0, w, &mut Vec::with_capacity(degrees.len()), &mut out);
    out.sort();
    out
}

/// All multi-indices of weight ≤ `w`, grouped by increasing weight.
pub fn monomials_up_to_weight(degrees: &[u32], w: u32) -> Vec<MultiIndex> {
    (0..=w).flat_map(|k| monomials_of_weight(degrees, k)).collect()
}

/// Sparse polynomial in graded coordinates.
///
/// The dilation exponents travel with the polynomial so that homogeneous
/// degree bookkeeping needs no group reference. The zero polynomial has no
/// homogeneous degree: [`GradedPolynomial::hdeg`] returns `None` for it.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct GradedPolynomial {
    degrees: Vec<u32>,
    terms: BTreeMap<MultiIndex, f64>,
}

impl fmt::Debug for GradedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for GradedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (a, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            for (i, &e) in a.exponents().iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", i + 1)?,
                    _ => write!(f, "·x{}^{e}", i + 1)?,
                }
            }
        }
        Ok(())
    }
}

impl GradedPolynomial {
    pub fn zero(degrees: &[u32]) -> Self {
        Self {
            degrees: degrees.to_vec(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(degrees: &[u32], c: f64) -> Self {
        Self::from_terms(degrees, [(MultiIndex::zero(degrees.len()), c)])
    }

    /// The coordinate function x_i (0-based).
    pub fn variable(degrees: &[u32], i: usize) -> Self {
        Self::from_terms(degrees, [(MultiIndex::unit(degrees.len(), i), 1.0)])
    }

    /// Builds a polynomial, summing repeated monomials and dropping zeros.
    pub fn from_terms<I>(degrees: &[u32], terms: I) -> Self
    where
        I: IntoIterator<Item = (MultiIndex, f64)>,
    {
        let mut p = Self::zero(degrees);
        for (a, c) in terms {
            assert_eq!(a.exponents().len(), degrees.len(), "multi-index length");
            *p.terms.entry(a).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn nvars(&self) -> usize {
        self.degrees.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(a, c)| (a, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    pub fn coefficient(&self, a: &MultiIndex) -> f64 {
        self.terms.get(a).copied().unwrap_or(0.0)
    }

    /// Homogeneous degree; `None` for the zero polynomial.
    pub fn hdeg(&self) -> Option<u32> {
        self.terms.keys().map(|a| a.weight(&self.degrees)).max()
    }

    /// The j-homogeneous part P^{(j)}.
    pub fn homogeneous_part(&self, j: u32) -> Self {
        Self {
            degrees: self.degrees.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(a, _)| a.weight(&self.degrees) == j)
                .map(|(a, c)| (a.clone(), *c))
                .collect(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(a, c)| c * a.eval(x)).sum()
    }

    /// ∂P/∂x_i.
    pub fn partial(&self, i: usize) -> Self {
        let terms = self.terms.iter().filter_map(|(a, c)| {
            let e = a.exponents()[i];
            if e == 0 {
                return None;
            }
            let mut b = a.exponents().to_vec();
            b[i] -= 1;
            Some((MultiIndex(b), c * e as f64))
        });
        Self::from_terms(&self.degrees, terms)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(&self.degrees, self.terms.iter().map(|(a, c)| (a.clone(), c * s)))
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            degrees: self.degrees.clone(),
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol)
                .map(|(a, c)| (a.clone(), *c))
                .collect(),
        }
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms.values().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// P(δ_r x) as a polynomial in x.
    pub fn dilated(&self, r: f64) -> Self {
        Self::from_terms(
            &self.degrees,
            self.terms
                .iter()
                .map(|(a, c)| (a.clone(), c * r.powi(a.weight(&self.degrees) as i32))),
        )
    }
}

impl Add for &GradedPolynomial {
    type Output = GradedPolynomial;
    fn add(self, rhs: &GradedPolynomial) -> GradedPolynomial {
        GradedPolynomial::from_terms(
            &self.degrees,
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|(a, c)| (a.clone(), *c)),
        )
    }
}

impl Sub for &GradedPolynomial {
    type Output = GradedPolynomial;
    fn sub(self, rhs: &GradedPolynomial) -> GradedPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &GradedPolynomial {
    type Output = GradedPolynomial;
    fn neg(self) -> GradedPolynomial {
        self.scale(-1.0)
    }
}

impl Mul for &GradedPolynomial {
    type Output = GradedPolynomial;
    fn mul(self, rhs: &GradedPolynomial) -> GradedPolynomial {
        let mut terms = Vec::with_capacity(self.len() * rhs.len());
        for (a, c) in &self.terms {
            for (b, d) in &rhs.terms {
                terms.push((a.add(b), c * d));
            }
        }
        GradedPolynomial::from_terms(&self.degrees, terms)
    }
}

impl Add for GradedPolynomial {
    type Output = GradedPolynomial;
    fn add(self, rhs: GradedPolynomial) -> GradedPolynomial {
        &self + &rhs
    }
}

impl Sub for GradedPolynomial {
    type Output = GradedPolynomial;
    fn sub(self, rhs: GradedPolynomial) -> GradedPolynomial {
        &self - &rhs
    }
}

impl Mul for GradedPolynomial {
    type Output = GradedPolynomial;
    fn mul(self, rhs: GradedPolynomial) -> GradedPolynomial {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const H1: [u32; 3] = [1, 1, 2];

    fn x(i: usize) -> GradedPolynomial {
        GradedPolynomial::variable(&H1, i)
    }

    #[test]
    fn hdeg_examples() {
        assert_eq!(x(2).hdeg(), Some(2));
        assert_eq!((&x(0) * &x(1)).hdeg(), Some(2));
        assert_eq!((&x(0) * &x(2)).hdeg(), Some(3));
        assert_eq!(GradedPolynomial::constant(&H1, 4.0).hdeg(), Some(0));
        assert_eq!(GradedPolynomial::zero(&H1).hdeg(), None);
    }

    #[test]
    fn homogeneous_parts() {
        let one = GradedPolynomial::constant(&H1, 1.0);
        let p = &(&one + &x(0)) + &x(2);
        assert_eq!(p.homogeneous_part(2), x(2));
        assert_eq!(p.homogeneous_part(0), one);
        assert_eq!(p.homogeneous_part(1), x(0));
        let sum = (0..=2).fold(GradedPolynomial::zero(&H1), |acc, j| &acc + &p.homogeneous_part(j));
        assert_eq!(sum, p);
    }

    #[test]
    fn arithmetic_cancels_to_zero() {
        let p = &x(0) * &x(1);
        assert!((&p - &p).is_zero());
    }

    #[test]
    fn partial_derivative() {
        let p = &(&x(0) * &x(0)) * &x(2);
        let d = p.partial(0);
        assert_eq!(d, (&x(0) * &x(2)).scale(2.0));
        assert!(p.partial(1).is_zero());
    }

    #[test]
    fn monomial_enumeration() {
        let w2 = monomials_of_weight(&H1, 2);
        // x1², x1x2, x2², x3
        assert_eq!(w2.len(), 4);
        assert_eq!(monomials_up_to_weight(&H1, 2).len(), 1 + 2 + 4);
        assert!(w2.iter().all(|a| a.weight(&H1) == 2));
    }
}
