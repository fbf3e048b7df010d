//! Dynkin form of the Baker–Campbell–Hausdorff series.
//!
//! For a nilpotent algebra of step ι every bracket of more than ι letters
//! vanishes, so summing all Dynkin terms of total degree ≤ ι gives `log(exp X
//! exp Y)` exactly.
//!
//! ```text
//! Z = Σ_{n≥1} (-1)^{n-1}/n Σ  [X^{r1} Y^{s1} … X^{rn} Y^{sn}] / (N · Π rᵢ! sᵢ!)
//! ```
//!
//! where each pair satisfies `rᵢ + sᵢ ≥ 1`, `N = Σ (rᵢ + sᵢ)` and the bracket
//! of a word is right-nested: `[w₁, [w₂, … [w_{N-1}, w_N]]]`.

use std::collections::BTreeMap;

/// A letter of a bracket word: `false` is X, `true` is Y.
type Word = Vec<bool>;

#[derive(Clone, Debug)]
pub struct DynkinSeries {
    depth: usize,
    terms: Vec<(Word, f64)>,
}

impl DynkinSeries {
    /// All nonvanishing words of degree ≤ `depth` with merged coefficients.
    pub fn new(depth: usize) -> Self {
        let mut acc: BTreeMap<Word, f64> = BTreeMap::new();
        for n in 1..=depth {
            let mut pairs = Vec::with_capacity(n);
            enumerate_pairs(n, depth, &mut pairs, &mut acc);
        }
        let terms = acc
            .into_iter()
            .filter(|(w, c)| c.abs() > 1e-15 && !trivially_zero(w))
            .collect();
        Self { depth, terms }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Merged words and their coefficients, sorted by word.
    pub fn terms(&self) -> &[(Vec<bool>, f64)] {
        &self.terms
    }

    /// Sums the series for `x`, `y` using `bracket` as the Lie bracket.
    pub fn evaluate<F>(&self, x: &[f64], y: &[f64], bracket: F) -> Vec<f64>
    where
        F: Fn(&[f64], &[f64]) -> Vec<f64>,
    {
        let mut z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        for (word, coeff) in &self.terms {
            if word.len() < 2 {
                continue;
            }
            let letter = |b: bool| if b { y } else { x };
            let mut v = bracket(letter(word[word.len() - 2]), letter(word[word.len() - 1]));
            for &b in word[..word.len() - 2].iter().rev() {
                if v.iter().all(|&c| c == 0.0) {
                    break;
                }
                v = bracket(letter(b), &v);
            }
            for (zi, vi) in z.iter_mut().zip(&v) {
                *zi += coeff * vi;
            }
        }
        z
    }
}

fn trivially_zero(word: &[bool]) -> bool {
    word.len() >= 2 && word[word.len() - 1] == word[word.len() - 2]
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn enumerate_pairs(
    n: usize,
    depth: usize,
    pairs: &mut Vec<(usize, usize)>,
    acc: &mut BTreeMap<Word, f64>,
) {
    let used: usize = pairs.iter().map(|(r, s)| r + s).sum();
    if pairs.len() == n {
        let (rn, sn) = *pairs.last().unwrap();
        // the innermost bracket vanishes unless the word ends in a single
        // letter of its final block
        if sn > 1 || (sn == 0 && rn > 1) {
            return;
        }
        let total = used;
        let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
        let denom: f64 = pairs
            .iter()
            .map(|&(r, s)| factorial(r) * factorial(s))
            .product::<f64>()
            * total as f64
            * n as f64;
        let mut word = Vec::with_capacity(total);
        for &(r, s) in pairs.iter() {
            word.extend(std::iter::repeat_n(false, r));
            word.extend(std::iter::repeat_n(true, s));
        }
        *acc.entry(word).or_insert(0.0) += sign / denom;
        return;
    }
    // leave at least one letter for each remaining pair
    let remaining_pairs = n - pairs.len() - 1;
    let budget = depth - used - remaining_pairs;
    for r in 0..=budget {
        for s in 0..=(budget - r) {
            if r + s == 0 {
                continue;
            }
            pairs.push((r, s));
            enumerate_pairs(n, depth, pairs, acc);
            pairs.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeff(series: &DynkinSeries, w: &str) -> f64 {
        let word: Vec<bool> = w.chars().map(|c| c == 'Y').collect();
        series
            .terms()
            .iter()
            .find(|(t, _)| *t == word)
            .map(|(_, c)| *c)
            .unwrap_or(0.0)
    }

    #[test]
    fn degree_two_series_is_half_bracket() {
        let s = DynkinSeries::new(2);
        let net = coeff(&s, "XY") - coeff(&s, "YX");
        assert!((net - 0.5).abs() < 1e-15, "{net}");
    }

    type M4 = [[f64; 4]; 4];

    fn mm(a: &M4, b: &M4) -> M4 {
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    }

    fn flat(a: &M4) -> Vec<f64> {
        a.iter().flatten().copied().collect()
    }

    fn unflat(v: &[f64]) -> M4 {
        let mut a = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                a[i][j] = v[4 * i + j];
            }
        }
        a
    }

    // exp of a strictly upper triangular 4x4 matrix (N⁴ = 0)
    fn expm(a: &M4) -> M4 {
        let a2 = mm(a, a);
        let a3 = mm(&a2, a);
        let mut e = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                e[i][j] = if i == j { 1.0 } else { 0.0 } + a[i][j] + a2[i][j] / 2.0 + a3[i][j] / 6.0;
            }
        }
        e
    }

    #[test]
    fn matches_matrix_exponential_in_step_three() {
        let s = DynkinSeries::new(3);
        let x: M4 = [[0.0, 0.3, -1.2, 0.7], [0.0, 0.0, 0.9, 0.4], [0.0, 0.0, 0.0, -0.8], [0.0; 4]];
        let y: M4 = [[0.0, -0.6, 0.5, 1.1], [0.0, 0.0, 0.2, -0.3], [0.0, 0.0, 0.0, 1.4], [0.0; 4]];
        let bracket = |a: &[f64], b: &[f64]| {
            let (a, b) = (unflat(a), unflat(b));
            let (ab, ba) = (mm(&a, &b), mm(&b, &a));
            let mut c = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    c[i][j] = ab[i][j] - ba[i][j];
                }
            }
            flat(&c)
        };
        let z = unflat(&s.evaluate(&flat(&x), &flat(&y), bracket));
        let lhs = expm(&z);
        let rhs = mm(&expm(&x), &expm(&y));
        for i in 0..4 {
            for j in 0..4 {
                assert!((lhs[i][j] - rhs[i][j]).abs() < 1e-14, "({i},{j})");
            }
        }
    }
}
