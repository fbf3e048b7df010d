use carnot::analysis::*;
use carnot::group::{FieldCoefficients, GroupDescriptor};
use carnot::linalg;
use carnot::poly::{apply_field, left_translate_poly, monomials_up_to_weight, GradedPolynomial, Jet2};
use carnot::registry;
use proptest::prelude::*;

fn group(k: usize) -> GroupDescriptor {
    match k {
        0 => registry::heisenberg(1),
        1 => registry::heisenberg(2),
        2 => registry::free_step2(3),
        _ => registry::engel(),
    }
}

fn coords() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 8)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn quadratic(g: &GroupDescriptor, coeffs: &[f64]) -> GradedPolynomial {
    let mons = monomials_up_to_weight(g.degrees(), 2);
    assert!(mons.len() <= coeffs.len());
    GradedPolynomial::from_terms(g.degrees(), mons.into_iter().zip(coeffs.iter().copied()).collect::<Vec<_>>())
}

fn step(g: &GroupDescriptor, x: &[f64], j: usize, t: f64) -> Vec<f64> {
    let mut e = vec![0.0; g.dim()];
    e[j] = t;
    g.mul(x, &e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn product_is_associative(k in 0..4usize, x in coords(), y in coords(), z in coords()) {
        let g = group(k);
        let n = g.dim();
        let (x, y, z) = (&x[..n], &y[..n], &z[..n]);
        prop_assert!(max_diff(&g.mul(&g.mul(x, y), z), &g.mul(x, &g.mul(y, z))) < 1e-12);
    }

    #[test]
    fn dilations_are_automorphisms(k in 0..4usize, x in coords(), y in coords(), r in 0.1..3.0f64) {
        let g = group(k);
        let n = g.dim();
        let (x, y) = (&x[..n], &y[..n]);
        let lhs = g.dilate_slice(r, &g.mul(x, y));
        let rhs = g.mul(&g.dilate_slice(r, x), &g.dilate_slice(r, y));
        prop_assert!(max_diff(&lhs, &rhs) < 1e-12 * (1.0 + r.powi(g.step() as i32) * 10.0));
        prop_assert!((g.homogeneous_norm(&g.dilate_slice(r, x)) - r * g.homogeneous_norm(x)).abs() < 1e-12);
    }

    #[test]
    fn distance_is_left_invariant(k in 0..4usize, u in coords(), x in coords(), y in coords()) {
        let g = group(k);
        let n = g.dim();
        let (u, x, y) = (&u[..n], &x[..n], &y[..n]);
        let d = g.distance(x, y);
        prop_assert!((g.distance(&g.mul(u, x), &g.mul(u, y)) - d).abs() < 1e-12, "d = {}", d);
    }

    #[test]
    fn products_with_a_line_are_polynomial_in_t(k in 0..4usize, x in coords(), j in 0..8usize, t in -2.0..2.0f64) {
        let g = group(k);
        let (x, j) = (&x[..g.dim()], j % g.dim());
        // Lagrange interpolation through step+1 nodes reproduces any other t
        let nodes: Vec<f64> = (0..=g.step()).map(|i| i as f64 - 1.0).collect();
        let vals: Vec<Vec<f64>> = nodes.iter().map(|&s| step(&g, x, j, s)).collect();
        let mut interp = vec![0.0; g.dim()];
        for (a, va) in nodes.iter().zip(&vals) {
            let w: f64 = nodes.iter().filter(|b| *b != a).map(|b| (t - b) / (a - b)).product();
            for (o, v) in interp.iter_mut().zip(va) {
                *o += w * v;
            }
        }
        prop_assert!(max_diff(&interp, &step(&g, x, j, t)) < 1e-12 * (1.0 + 4f64.powi(g.step() as i32)));
    }

    #[test]
    fn abelian_product_is_addition(n in 1..6usize, x in coords(), y in coords()) {
        let g = registry::euclidean(n);
        let sum: Vec<f64> = x[..n].iter().zip(&y[..n]).map(|(a, b)| a + b).collect();
        prop_assert_eq!(g.mul(&x[..n], &y[..n]), sum);
    }

    #[test]
    fn apply_field_matches_line_derivative(k in 0..4usize, c in prop::collection::vec(-1.0..1.0f64, 32), x in coords(), j in 0..8usize) {
        let g = group(k);
        let fc = FieldCoefficients::compute(&g).unwrap();
        let p = quadratic(&g, &c);
        let (x, j) = (&x[..g.dim()], j % g.horizontal_dim());
        let eps = 1e-4;
        let fd = (p.evaluate(&step(&g, x, j, eps)) - p.evaluate(&step(&g, x, j, -eps))) / (2.0 * eps);
        let exact = apply_field(&fc, j, &p).evaluate(x);
        prop_assert!((fd - exact).abs() <= 1e-7 * (1.0 + exact.abs()), "{} vs {}", fd, exact);
    }

    #[test]
    fn translated_linear_part_is_the_gradient(k in 0..4usize, c in prop::collection::vec(-1.0..1.0f64, 32), x in coords()) {
        let g = group(k);
        let fc = FieldCoefficients::compute(&g).unwrap();
        let p = quadratic(&g, &c);
        let x = &x[..g.dim()];
        let lin = left_translate_poly(&g, &p, x).unwrap().homogeneous_part(1);
        for j in 0..g.horizontal_dim() {
            let want = apply_field(&fc, j, &p).evaluate(x);
            prop_assert!((lin.evaluate(&g.basis(j)) - want).abs() < 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn claim3_holds_for_polynomial_jets(k in 0..4usize, c in prop::collection::vec(-1.0..1.0f64, 32)) {
        let g = group(k);
        let fc = FieldCoefficients::compute(&g).unwrap();
        let p = quadratic(&g, &c);
        let jet = Jet2::from_polynomial(&fc, &p).unwrap();
        let r = jet.claim3_residual(&fc);
        prop_assert!(r.iter().flatten().all(|v| v.abs() < 1e-10));
        // A^i_j is X_iX_jP, independently from the product
        let zero = vec![0.0; g.dim()];
        for i in 0..g.horizontal_dim() {
            for j in 0..g.horizontal_dim() {
                let f = |s: f64, t: f64| p.evaluate(&step(&g, &step(&g, &zero, i, s), j, t));
                let xixj = (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / 4.0;
                prop_assert!((jet.a[j][i] - xixj).abs() < 1e-12);
            }
        }
        // skew part of Â is carried entirely by the second-layer contraction
        let skew = linalg::skew_part(&jet.a);
        let contraction = fc.contract_second_layer(&jet.v2);
        for i in 0..g.horizontal_dim() {
            for j in 0..g.horizontal_dim() {
                prop_assert!((skew[j][i] - contraction[i][j]).abs() < 1e-10);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn subdifferential_contains_gradient_of_smooth_fields(k in 0..4usize, x in coords(), which in 0..6usize) {
        let g = group(k);
        let plan = SamplingPlan::default();
        let name = ["affine", "quadratic", "mixed", "euclid-quadratic", "logsumexp", "soft-norm"][which];
        let u = FieldBuilder::new(&g).unwrap().build(&FunctionSpec::builtin(name)).unwrap();
        let x: Vec<f64> = x[..g.dim()].iter().map(|v| 0.8 * v).collect();
        let grad = u.analytic_gradient(&x).unwrap();
        prop_assert!(subdiff_membership(&g, &u, &x, &grad, &plan).unwrap() <= plan.tolerances.membership);
        let hull = subdifferential_hull(&g, &u, &x, &plan).unwrap();
        prop_assert!(max_diff(&hull.polytope.centroid(), &grad) < plan.tolerances.singleton);
    }

    #[test]
    fn lambda_relaxation_is_monotone(x in coords(), p in prop::collection::vec(-3.0..3.0f64, 2), l in 0.0..2.0f64) {
        let g = registry::heisenberg(1);
        let plan = SamplingPlan::default();
        let u = FieldBuilder::new(&g).unwrap().build(&FunctionSpec::builtin("norm1")).unwrap();
        let x = &x[..3];
        let a = lambda_subdiff_membership(&g, &u, x, &p, l, &plan).unwrap();
        let b = lambda_subdiff_membership(&g, &u, x, &p, l + 0.5, &plan).unwrap();
        prop_assert!(b <= a + 1e-15);
    }
}
