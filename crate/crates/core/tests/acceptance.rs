//! Acceptance battery: one PASS/FAIL line per criterion, each checked
//! against an oracle computed here rather than inside the library.

use std::io::Write;
use std::time::{Duration, Instant};

use carnot::analysis::*;
use carnot::cli::{run_command, Cli, RunConfig};
use carnot::group::{FieldCoefficients, GroupDescriptor};
use carnot::linalg;
use carnot::poly::{check_alij, lambda_max, GradedPolynomial, LAMBDA_SAFETY};
use carnot::registry;
use carnot::suite::random_quadratic;
use clap::Parser;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn cube(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| s * rng.random_range(-1.0..=1.0)).collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// x · (t e_j) for horizontal or second-layer basis directions.
fn step(g: &GroupDescriptor, x: &[f64], j: usize, t: f64) -> Vec<f64> {
    let mut e = vec![0.0; g.dim()];
    e[j] = t;
    g.mul(x, &e)
}

/// Central difference of u along s ↦ x·(s e_j).
fn fd_field(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64], j: usize, eps: f64) -> f64 {
    (u.value(&step(g, x, j, eps)) - u.value(&step(g, x, j, -eps))) / (2.0 * eps)
}

fn fd_gradient(g: &GroupDescriptor, u: &dyn ScalarField, x: &[f64]) -> Vec<f64> {
    (0..g.horizontal_dim()).map(|j| fd_field(g, u, x, j, 1e-6)).collect()
}

fn time_budget(start: Instant, budget: Duration) -> (bool, String) {
    let el = start.elapsed();
    (el < budget, format!("{:.2}s of {:.0}s", el.as_secs_f64(), budget.as_secs_f64()))
}

fn second_layer(g: &GroupDescriptor) -> std::ops::Range<usize> {
    if g.step() >= 2 {
        g.layer_range(2)
    } else {
        0..0
    }
}

fn groups() -> Vec<GroupDescriptor> {
    vec![registry::heisenberg(1), registry::heisenberg(2), registry::free_step2(3), registry::engel()]
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut assoc, mut exact, mut dil): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for g in groups() {
        let n = g.dim();
        let zero = vec![0.0; n];
        for _ in 0..1000 {
            let (x, y, z) = (cube(&mut rng, n, 1.0), cube(&mut rng, n, 1.0), cube(&mut rng, n, 1.0));
            assoc = assoc.max(max_diff(&g.mul(&g.mul(&x, &y), &z), &g.mul(&x, &g.mul(&y, &z))));
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            exact = exact
                .max(max_diff(&g.mul(&x, &zero), &x))
                .max(max_diff(&g.mul(&zero, &x), &x))
                .max(max_diff(&g.mul(&x, &neg), &zero))
                .max(max_diff(&g.mul(&neg, &x), &zero));
            // δ_r by hand: layer s scales by r^s
            let r: f64 = rng.random_range(0.1..=3.0);
            let d = |v: &[f64]| -> Vec<f64> { v.iter().zip(g.degrees()).map(|(c, &s)| c * r.powi(s as i32)).collect() };
            let lhs = d(&g.mul(&x, &y));
            let scale = lhs.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            dil = dil.max(max_diff(&lhs, &g.mul(&d(&x), &d(&y))) / scale);
        }
    }
    let (fast, t) = time_budget(start, Duration::from_secs(5));
    outcome(
        assoc < 1e-12 && exact <= 1e-14 && dil < 1e-12 && fast,
        format!("assoc {assoc:.1e}, identity/inverse {exact:.1e}, dilation {dil:.1e}, {t}"),
    )
}

fn criterion_2() -> Outcome {
    let g = registry::heisenberg(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (x, y) = (cube(&mut rng, 3, 1.0), cube(&mut rng, 3, 1.0));
        let hand = [x[0] + y[0], x[1] + y[1], x[2] + y[2] + 0.5 * (x[0] * y[1] - x[1] * y[0])];
        worst = worst.max(max_diff(&g.mul(&x, &y), &hand));
    }
    outcome(worst < 1e-14, format!("max deviation from the closed form {worst:.1e}"))
}

/// a^{li}_j read off the product: for l in the second layer the l-th
/// component of e_i·(t e_j) is t·a^{li}_j (linear in t and in e_i).
fn alij_oracle(g: &GroupDescriptor, l: usize, i: usize, j: usize) -> f64 {
    let ei = g.basis(i);
    (step(g, &ei, j, 1.0)[l] - step(g, &ei, j, -1.0)[l]) / 2.0
}

fn criterion_3() -> Outcome {
    let h1 = FieldCoefficients::compute(&registry::heisenberg(1)).unwrap();
    let exact = (h1.alij(2, 0, 1) - 0.5).abs().max((h1.alij(2, 1, 0) + 0.5).abs());
    let (mut anti, mut vs_oracle): (f64, f64) = (0.0, 0.0);
    for g in registry::builtin_groups() {
        let fc = FieldCoefficients::compute(&g).unwrap();
        let m1 = g.horizontal_dim();
        for l in second_layer(&g) {
            for i in 0..m1 {
                for j in 0..m1 {
                    anti = anti.max((fc.alij(l, i, j) + fc.alij(l, j, i)).abs());
                    vs_oracle = vs_oracle.max((fc.alij(l, i, j) - alij_oracle(&g, l, i, j)).abs());
                }
            }
        }
    }
    outcome(
        exact <= 1e-14 && anti <= 1e-14 && vs_oracle <= 1e-14,
        format!("a^31_2, a^32_1 error {exact:.1e}, antisymmetry {anti:.1e}, product oracle {vs_oracle:.1e}"),
    )
}

/// X_i X_j P at x from the product: P(x·(s e_i)·(t e_j)) has degree ≤ 2
/// in (s, t) so the mixed central difference is exact.
fn xixj_oracle(g: &GroupDescriptor, p: &GradedPolynomial, x: &[f64], i: usize, j: usize) -> f64 {
    let f = |s: f64, t: f64| p.evaluate(&step(g, &step(g, x, i, s), j, t));
    (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / 4.0
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut lib, mut oracle): (f64, f64) = (0.0, 0.0);
    for g in registry::builtin_groups() {
        let fc = FieldCoefficients::compute(&g).unwrap();
        let m1 = g.horizontal_dim();
        for _ in 0..100 {
            let p = random_quadratic(&g, &mut rng);
            lib = lib.max(check_alij(&fc, &p).unwrap().max_abs);
            let x = cube(&mut rng, g.dim(), 1.0);
            // Euclidean Hessian of P in the horizontal variables, by exact second differences
            let c = |i: usize, j: usize| {
                let f = |s: f64, t: f64| {
                    let mut y = x.clone();
                    y[i] += s;
                    y[j] += t;
                    p.evaluate(&y)
                };
                (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / 4.0
            };
            for i in 0..m1 {
                for j in 0..m1 {
                    let mut rhs = c(i, j);
                    for l in second_layer(&g) {
                        // X_l P for a second-layer direction is linear in t
                        let xl = (p.evaluate(&step(&g, &x, l, 1.0)) - p.evaluate(&step(&g, &x, l, -1.0))) / 2.0;
                        rhs += xl * alij_oracle(&g, l, i, j);
                    }
                    let lhs = xixj_oracle(&g, &p, &x, i, j);
                    oracle = oracle.max((lhs - rhs).abs() / (1.0 + lhs.abs()));
                }
            }
        }
    }
    outcome(
        lib < 1e-10 && oracle < 1e-10,
        format!("library residual {lib:.1e}, product-derivative oracle {oracle:.1e}"),
    )
}

fn point_segment(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let ap: Vec<f64> = a.iter().zip(p).map(|(x, y)| y - x).collect();
    let den = linalg::dot(&ab, &ab);
    let t = if den > 0.0 { (linalg::dot(&ap, &ab) / den).clamp(0.0, 1.0) } else { 0.0 };
    let q: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    linalg::norm2(&p.iter().zip(&q).map(|(x, y)| x - y).collect::<Vec<_>>())
}

fn in_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> bool {
    let cross = |o: &[f64], u: &[f64], v: &[f64]| (u[0] - o[0]) * (v[1] - o[1]) - (u[1] - o[1]) * (v[0] - o[0]);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let eps = 1e-12;
    !((d1 < -eps || d2 < -eps || d3 < -eps) && (d1 > eps || d2 > eps || d3 > eps))
}

/// Distance from p to conv(V) in the plane.
fn dist_to_hull(p: &[f64], v: &[Vec<f64>]) -> f64 {
    let n = v.len();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                if in_triangle(p, &v[a], &v[b], &v[c]) {
                    return 0.0;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for a in 0..n {
        for b in a..n {
            best = best.min(point_segment(p, &v[a], &v[b]));
        }
    }
    best
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let g = registry::heisenberg(1);
    let plan = SamplingPlan::default();
    let reg = function_registry(&g, &plan).unwrap();
    let norm1 = &reg.iter().find(|e| e.name == "norm1").unwrap().field;
    let hull = subdifferential_hull(&g, norm1, &[0.0; 3], &plan).unwrap();
    let v = hull.polytope.vertices();
    // Hausdorff distance to the square: vertices to the square, corners to the hull
    let out = v.iter().map(|p| {
        let q: Vec<f64> = p.iter().map(|c| c.clamp(-1.0, 1.0)).collect();
        max_diff(p, &q).max(linalg::norm2(&p.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>()))
    });
    let corners = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
    let back = corners.iter().map(|c| dist_to_hull(c, v));
    let haus = out.chain(back).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut diam, mut grad_err): (f64, f64) = (0.0, 0.0);
    for e in reg.iter().filter(|e| e.smooth) {
        for _ in 0..20 {
            let x = cube(&mut rng, 3, 0.8);
            let h = subdifferential_hull(&g, &e.field, &x, &plan).unwrap();
            diam = diam.max(h.diameter());
            grad_err = grad_err.max(max_diff(&h.polytope.centroid(), &fd_gradient(&g, &e.field, &x)));
        }
    }
    let (fast, t) = time_budget(start, Duration::from_secs(20));
    outcome(
        haus < 0.05 && diam < 1e-3 && grad_err < 1e-3 && fast,
        format!("norm1 Hausdorff {haus:.1e}, smooth diameter {diam:.1e}, centroid vs FD gradient {grad_err:.1e}, {t}"),
    )
}

fn criterion_6() -> Outcome {
    let plan = SamplingPlan::default();
    let mut disagree = 0;
    let mut notes = Vec::new();
    for g in groups() {
        let reg = function_registry(&g, &plan).unwrap();
        let smooth: Vec<&FunctionEntry> = reg.iter().filter(|e| e.smooth).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k in 0..20 {
            let x = cube(&mut rng, g.dim(), 0.8);
            let r = first_order_characterization(&g, &smooth[k % smooth.len()].field, &x, &plan).unwrap();
            if !(r.singleton && r.ladder.converging && r.agree) {
                disagree += 1;
            }
        }
        let abs1 = &reg.iter().find(|e| e.name == "abs1").unwrap().field;
        let k = first_order_characterization(&g, abs1, &vec![0.0; g.dim()], &plan).unwrap();
        let last = *k.ladder.residuals.last().unwrap();
        // |x₁| at 0: the first-order residual at every radius is exactly 1 for p = 0
        let stalls = !k.ladder.converging && last > 0.5;
        if !(k.diameter >= 1.9 && stalls && k.agree) {
            disagree += 1;
        }
        notes.push(format!("{} kink diameter {:.3}", g.name(), k.diameter));
    }
    outcome(disagree == 0, format!("{disagree} disagreements; {}", notes.join(", ")))
}

fn criterion_7() -> Outcome {
    let plan = SamplingPlan::default();
    let (mut smooth_res, mut poly_res, mut grad_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for g in groups() {
        let reg = function_registry(&g, &plan).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for e in reg.iter().filter(|e| e.smooth || is_polyhedral(e.name)) {
            for _ in 0..100 {
                let x = cube(&mut rng, g.dim(), 0.8);
                let h = cube(&mut rng, g.horizontal_dim(), 1.0);
                let w = mean_value_witness(&g, &e.field, &x, &h, &plan).unwrap();
                // recompute |u(xh) − u(x) − ⟨p, h⟩| here
                let xh = g.mul(&x, &g.horizontal_point(&h));
                let res = (e.field.value(&xh) - e.field.value(&x) - linalg::dot(&w.p, &h)).abs();
                if e.smooth {
                    smooth_res = smooth_res.max(res);
                    let y = g.along(&x, &h, w.t);
                    grad_err = grad_err.max(max_diff(&w.p, &fd_gradient(&g, &e.field, &y)));
                } else {
                    poly_res = poly_res.max(res);
                }
            }
        }
    }

    // λ-version on H¹ with P = −x₁² + x₃; by hand max |P⁽²⁾| on the unit
    // quasi-sphere is 1 (at w = e₁ or w = ±e₃)
    let g = registry::heisenberg(1);
    let p = parse_polynomial(g.degrees(), "-1*x1^2 + x3").unwrap();
    let est = lambda_max(&g, &p, plan.seed).unwrap().lambda;
    let lambda = LAMBDA_SAFETY * est;
    let u = FieldBuilder::new(&g)
        .unwrap()
        .build(&FunctionSpec::from_json(r#"{"composition": "sum", "of": [{"builtin": "norm1"}, {"polynomial": "-1*x1^2 + x3"}]}"#).unwrap())
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut viol, mut lres): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let x = cube(&mut rng, 3, 0.8);
        let h = cube(&mut rng, 2, 1.0);
        let w = lambda_mean_value_witness(&g, &u, &x, &h, lambda, &plan).unwrap();
        viol = viol.max(w.lambda_violation);
        lres = lres.max(w.residual);
    }
    outcome(
        smooth_res < 1e-8 && poly_res < 1e-4 && grad_err < 1e-4 && (est - 1.0).abs() < 1e-2 && viol <= plan.tolerances.membership && lres < 1e-4,
        format!(
            "smooth {smooth_res:.1e}, polyhedral {poly_res:.1e}, witness gradient {grad_err:.1e}, lambda {est:.4}, lambda violation {viol:.1e}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let plan = SamplingPlan {
        direction_count: 50,
        ..SamplingPlan::default()
    };
    let (mut disc, mut sub, mut oracle): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for g in groups() {
        let reg = function_registry(&g, &plan).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for e in &reg {
            for _ in 0..10 {
                let x = cube(&mut rng, g.dim(), 0.8);
                let r = dermax_check(&g, &e.field, &x, &plan).unwrap();
                disc = disc.max(r.max_discrepancy);
                sub = sub.max(r.subadditivity_violation);
                // one-sided difference quotient against the hull support function
                let hull = subdifferential_hull(&g, &e.field, &x, &plan).unwrap();
                for _ in 0..5 {
                    let h = cube(&mut rng, g.horizontal_dim(), 1.0);
                    let t = 1e-7;
                    let q = (e.field.value(&g.along(&x, &h, t)) - e.field.value(&x)) / t;
                    let support = hull.polytope.vertices().iter().map(|p| linalg::dot(p, &h)).fold(f64::NEG_INFINITY, f64::max);
                    oracle = oracle.max((q - support).abs());
                }
            }
        }
    }
    outcome(
        disc < 1e-2 && oracle < 1e-2 && sub <= plan.tolerances.membership,
        format!("discrepancy {disc:.1e}, quotient oracle {oracle:.1e}, subadditivity {sub:.1e}"),
    )
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let g = registry::heisenberg(1);
    let plan = SamplingPlan::default();
    let u = FnField::new("x1^2 + x2^2 + x3", |x: &[f64]| x[0] * x[0] + x[1] * x[1] + x[2]);
    let r = verify_theorem_1_1(&g, &u, &[0.0; 3], &plan).unwrap();
    let (Some(exp), Some(ext)) = (&r.expansion, &r.extended) else {
        return outcome(false, format!("missing fits: {:?}", r.notes));
    };
    // by hand: X₁u = 2x₁ − x₂/2, X₂u = 2x₂ + x₁/2, P₀(w) = w₁² + w₂² + w₃
    let a_err = linalg::mat_max_abs_diff(&ext.a, &vec![vec![2.0, -0.5], vec![0.5, 2.0]]);
    let h_err = linalg::mat_max_abs_diff(&exp.jet.h, &vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
    let v_err = (exp.jet.v2[0] - 1.0).abs();
    // skew identity by hand: row r of Â is ∇(X_r u), a^{31}_2 = ½ = −a^{32}_1,
    // and Â minus the v₂ contraction must be 2I
    let v2 = exp.jet.v2[0];
    let c3 = [
        ext.a[0][0] - 2.0,
        ext.a[0][1] + 0.5 * v2,
        ext.a[1][0] - 0.5 * v2,
        ext.a[1][1] - 2.0,
    ]
    .iter()
    .fold(0.0_f64, |m, v| m.max(v.abs()));
    let min_eig = r.min_eigenvalue.unwrap_or(f64::NEG_INFINITY);
    let (fast, t) = time_budget(start, Duration::from_secs(30));
    let ok = a_err < 1e-3
        && h_err < 1e-3
        && v_err < 1e-3
        && c3 < 1e-3
        && r.claim3.as_ref().map(|m| m.iter().flatten().all(|v| v.abs() < 1e-3)).unwrap_or(false)
        && min_eig >= -1e-6
        && r.equivalence.describe() == "both converge"
        && r.passed()
        && fast;
    outcome(
        ok,
        format!(
            "A {a_err:.1e}, H {h_err:.1e}, v2 {v_err:.1e}, skew identity {c3:.1e}, min eig {min_eig:.3}, {}, {t}",
            r.equivalence.describe()
        ),
    )
}

fn criterion_10() -> Outcome {
    let g = registry::euclidean(2);
    let plan = SamplingPlan::default();
    let s = [[3.0, 0.7], [0.7, 1.5]];
    let u = FnField::new("half Sx.x", move |x: &[f64]| {
        0.5 * (s[0][0] * x[0] * x[0] + 2.0 * s[0][1] * x[0] * x[1] + s[1][1] * x[1] * x[1])
    });
    let base = SecondOrderBase::new(&g, &u, &[0.3, -0.1], &plan).unwrap();
    let fit = fit_extended_differential(&g, &u, &base, &plan).unwrap();
    let err = linalg::mat_max_abs_diff(&fit.a, &s.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
    let skew = (fit.a[0][1] - fit.a[1][0]).abs() / 2.0;
    outcome(err < 1e-4 && skew < 1e-6, format!("|A − S| {err:.1e}, skew {skew:.1e}"))
}

fn criterion_11() -> Outcome {
    let plan = SamplingPlan::default();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for g in groups() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for e in smooth_suite(&g, &plan).unwrap() {
            let x = cube(&mut rng, g.dim(), 0.5);
            let base = SecondOrderBase::new(&g, &e.field, &x, &plan).unwrap();
            let fit = fit_extended_differential(&g, &e.field, &base, &plan).unwrap();
            let ex: Vec<f64> = fit.mignot.iter().map(|m| m.excess).collect();
            let taus: Vec<f64> = fit.mignot.iter().map(|m| m.tau).collect();
            let last = *ex.last().unwrap();
            worst = worst.max(last);
            let shrinking = taus.windows(2).all(|w| w[1] < w[0]) && last <= ex[0] + 1e-3;
            if !(fit.mignot_converged && last < 1e-2 && shrinking) {
                failures.push(format!("{}:{}", g.name(), e.name));
            }
        }
    }
    outcome(failures.is_empty(), format!("worst final excess {worst:.1e}; failing {failures:?}"))
}

fn criterion_12() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let cli = Cli::parse_from(["carnot", "suite", "--seed", "12", "--out", d.path().to_str().unwrap()]);
        let report = run_command(&RunConfig::from_cli(&cli).unwrap()).unwrap();
        if !report.passed {
            return outcome(false, "suite failed");
        }
    }
    let mut same = true;
    for f in ["report.json", "summary.txt", "curves.csv"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        same &= !a.is_empty() && a == b;
    }
    outcome(same, "two suite runs with seed 12 compared byte for byte")
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("group law exactness", criterion_1),
        ("heisenberg closed form", criterion_2),
        ("structure constants", criterion_3),
        ("second-layer identity", criterion_4),
        ("subdifferential hulls", criterion_5),
        ("first-order characterization", criterion_6),
        ("mean value witnesses", criterion_7),
        ("dermax and subadditivity", criterion_8),
        ("second-order characterization on x1^2+x2^2+x3", criterion_9),
        ("euclidean degeneration", criterion_10),
        ("mignot inclusion", criterion_11),
        ("determinism", criterion_12),
    ];
    let mut failed = Vec::new();
    // written straight to stdout so the lines survive test output capture
    let mut out = std::io::stdout().lock();
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{tag} criterion {:>2} {name}: {}", k + 1, o.detail);
        let _ = out.flush();
        if !o.passed {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
