//! Built-in groups.

use crate::group::{BracketEntry, GroupDescriptor, GroupError};

fn entry(i: usize, j: usize, k: usize) -> BracketEntry {
    BracketEntry { i, j, k, c: 1.0 }
}

fn build(name: String, layers: Vec<usize>, brackets: Vec<BracketEntry>) -> GroupDescriptor {
    GroupDescriptor::new_validated(name, layers, brackets).expect("built-in descriptor is valid")
}

/// Abelian ℝⁿ, a single layer.
pub fn euclidean(n: usize) -> GroupDescriptor {
    assert!(n > 0, "euclidean dimension must be positive");
    build(format!("euclidean:{n}"), vec![n], Vec::new())
}

/// Heisenberg group Hⁿ: layers (2n, 1), [e_{2i−1}, e_{2i}] = e_{2n+1}.
pub fn heisenberg(n: usize) -> GroupDescriptor {
    assert!(n > 0, "heisenberg index must be positive");
    let br = (0..n).map(|i| entry(2 * i, 2 * i + 1, 2 * n)).collect();
    build(format!("heisenberg:{n}"), vec![2 * n, 1], br)
}

/// Free step-two group on m generators: [e_i, e_j] = e_{ij} for i < j, with
/// the pairs ordered lexicographically.
pub fn free_step2(m: usize) -> GroupDescriptor {
    assert!(m >= 2, "free step-two group needs at least two generators");
    let mut br = Vec::new();
    let mut k = m;
    for i in 0..m {
        for j in (i + 1)..m {
            br.push(entry(i, j, k));
            k += 1;
        }
    }
    build(format!("free-step2:{m}"), vec![m, m * (m - 1) / 2], br)
}

/// Engel group: layers (2, 1, 1), [e₁, e₂] = e₃, [e₁, e₃] = e₄.
pub fn engel() -> GroupDescriptor {
    build("engel".into(), vec![2, 1, 1], vec![entry(0, 1, 2), entry(0, 2, 3)])
}

/// The groups exercised by the test batteries.
pub fn builtin_groups() -> Vec<GroupDescriptor> {
    vec![heisenberg(1), heisenberg(2), free_step2(3), engel()]
}

/// Resolves names like `heisenberg:1`, `euclidean:3`, `free-step2:3`, `engel`.
pub fn group_by_name(spec: &str) -> Result<GroupDescriptor, GroupError> {
    let unknown = || GroupError::Invalid {
        name: spec.to_string(),
        summary: "unknown built-in group (expected euclidean:N, heisenberg:N, free-step2:M or engel)".into(),
    };
    let (kind, arg) = match spec.split_once(':') {
        Some((k, a)) => (k, Some(a.parse::<usize>().map_err(|_| unknown())?)),
        None => (spec, None),
    };
    match (kind, arg) {
        ("euclidean", Some(n)) if n > 0 => Ok(euclidean(n)),
        ("heisenberg", Some(n)) if n > 0 => Ok(heisenberg(n)),
        ("heisenberg", None) => Ok(heisenberg(1)),
        ("free-step2", Some(m)) if m >= 2 => Ok(free_step2(m)),
        ("engel", None) => Ok(engel()),
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert_eq!(group_by_name("heisenberg:2").unwrap().dim(), 5);
        assert_eq!(group_by_name("free-step2:3").unwrap().layer_dims(), &[3, 3]);
        assert_eq!(group_by_name("engel").unwrap().step(), 3);
        assert!(group_by_name("heisenberg:x").is_err());
        assert!(group_by_name("sl2").is_err());
    }
}
