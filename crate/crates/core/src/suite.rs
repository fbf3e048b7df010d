//! The check battery behind the `suite` command.
//!
//! Group-generic checks run on the selected group; the second-order
//! checks with closed-form targets run on their fixed groups.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::analysis::*;
use crate::group::{FieldCoefficients, GroupDescriptor};
use crate::linalg::{self, max_abs_diff};
use crate::poly::{check_alij, lambda_max, monomials_up_to_weight, GradedPolynomial, LAMBDA_SAFETY};
use crate::registry;
use crate::report::Record;

pub const GROUP_LAW_TOL: f64 = 1e-12;
pub const EXACT_TOL: f64 = 1e-14;
pub const ALIJ_TOL: f64 = 1e-10;
pub const HULL_HAUSDORFF_TOL: f64 = 0.05;
pub const KINK_DIAMETER: f64 = 1.9;
pub const MVT_SMOOTH_TOL: f64 = 1e-8;
pub const MVT_POLYHEDRAL_TOL: f64 = 1e-4;
pub const DERMAX_TOL: f64 = 1e-2;

fn box_point(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| s * rng.random_range(-1.0..=1.0)).collect()
}

fn inputs(g: &GroupDescriptor, plan: &SamplingPlan, extra: serde_json::Value) -> serde_json::Value {
    json!({ "group": g.name(), "seed": plan.seed, "params": extra })
}

/// Random h-degree ≤ 2 polynomial with coefficients in [−1, 1].
pub fn random_quadratic(g: &GroupDescriptor, rng: &mut ChaCha8Rng) -> GradedPolynomial {
    let terms = monomials_up_to_weight(g.degrees(), 2)
        .into_iter()
        .map(|a| (a, rng.random_range(-1.0..=1.0)))
        .collect::<Vec<_>>();
    GradedPolynomial::from_terms(g.degrees(), terms)
}

pub fn group_law(g: &GroupDescriptor, plan: &SamplingPlan, triples: usize) -> Record {
    let mut rng = plan.rng("group-law", 0);
    let n = g.dim();
    let (mut assoc, mut ident, mut dil): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let zero = vec![0.0; n];
    for _ in 0..triples {
        let x = box_point(&mut rng, n, 1.0);
        let y = box_point(&mut rng, n, 1.0);
        let z = box_point(&mut rng, n, 1.0);
        assoc = assoc.max(max_abs_diff(&g.mul(&g.mul(&x, &y), &z), &g.mul(&x, &g.mul(&y, &z))));
        let xinv: Vec<f64> = x.iter().map(|v| -v).collect();
        ident = ident
            .max(max_abs_diff(&g.mul(&x, &zero), &x))
            .max(max_abs_diff(&g.mul(&zero, &x), &x))
            .max(max_abs_diff(&g.mul(&x, &xinv), &zero))
            .max(max_abs_diff(&g.mul(&xinv, &x), &zero));
        let r = rng.random_range(0.1..=3.0);
        dil = dil.max(max_abs_diff(
            &g.dilate_slice(r, &g.mul(&x, &y)),
            &g.mul(&g.dilate_slice(r, &x), &g.dilate_slice(r, &y)),
        ));
    }
    let passed = ident <= EXACT_TOL && dil <= GROUP_LAW_TOL;
    Record::new("group-law", "group-product", inputs(g, plan, json!({ "triples": triples })))
        .at_most(assoc, GROUP_LAW_TOL)
        .verdict(passed)
        .details(json!({ "associativity": assoc, "identity_inverse": ident, "dilation": dil }))
}

pub fn structure_constants(g: &GroupDescriptor, plan: &SamplingPlan) -> Record {
    let id = "structure-constants";
    match FieldCoefficients::compute(g) {
        Ok(fc) => Record::new(id, "field-coefficients", inputs(g, plan, json!(null)))
            .at_most(fc.antisymmetry_residual(), EXACT_TOL),
        Err(e) => Record::failed(id, "field-coefficients", inputs(g, plan, json!(null)), e),
    }
}

pub fn alij_identity(g: &GroupDescriptor, plan: &SamplingPlan, count: usize) -> Record {
    let id = "alij-identity";
    let inp = inputs(g, plan, json!({ "polynomials": count }));
    let fc = match FieldCoefficients::compute(g) {
        Ok(fc) => fc,
        Err(e) => return Record::failed(id, "poly-alij", inp, e),
    };
    let mut rng = plan.rng("alij", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let p = random_quadratic(g, &mut rng);
        match check_alij(&fc, &p) {
            Ok(c) => worst = worst.max(c.max_abs),
            Err(e) => return Record::failed(id, "poly-alij", inp, e),
        }
    }
    Record::new(id, "poly-alij", inp).at_most(worst, ALIJ_TOL)
}

pub fn certificates(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry]) -> Record {
    let worst = registry.iter().map(|e| e.certificate.max_violation).fold(0.0, f64::max);
    let per: Vec<_> = registry
        .iter()
        .map(|e| json!({ "function": e.name, "violation": e.certificate.max_violation, "pairs": e.certificate.pairs }))
        .collect();
    Record::new("hconvex-certificates", "hconvex-check", inputs(g, plan, json!(null)))
        .at_most(worst, CERTIFICATE_TOL)
        .details(per)
}

fn entry<'a>(registry: &'a [FunctionEntry], name: &str) -> &'a FunctionEntry {
    registry.iter().find(|e| e.name == name).expect("builtin registered")
}

/// Hull of the horizontal 1-norm at the identity against [−1, 1]^{m₁}.
pub fn norm1_hull(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry]) -> Record {
    let id = "subdiff-hull-norm1";
    let inp = inputs(g, plan, json!({ "function": "norm1", "point": "identity" }));
    let m1 = g.horizontal_dim();
    let corners: Vec<Vec<f64>> = (0..1usize << m1)
        .map(|mask| (0..m1).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect())
        .collect();
    let cube = ConvexPolytope::from_points(&corners).expect("corners");
    match subdifferential_hull(g, &entry(registry, "norm1").field, &vec![0.0; g.dim()], plan) {
        Ok(h) => Record::new(id, "subdiff", inp)
            .at_most(h.polytope.hausdorff(&cube), HULL_HAUSDORFF_TOL)
            .details(json!({ "vertices": h.polytope.vertices().len(), "flagged": h.flagged.len() })),
        Err(e) => Record::failed(id, "subdiff", inp, e),
    }
}

pub fn smooth_hulls(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry], points: usize) -> Record {
    let id = "subdiff-hull-smooth";
    let inp = inputs(g, plan, json!({ "points": points }));
    let mut worst: f64 = 0.0;
    for e in registry.iter().filter(|e| e.smooth) {
        let mut rng = plan.rng("smooth-hulls", 0);
        for _ in 0..points {
            let x = box_point(&mut rng, g.dim(), 0.8);
            match subdifferential_hull(g, &e.field, &x, plan) {
                Ok(h) => worst = worst.max(h.diameter()),
                Err(err) => return Record::failed(id, "subdiff", inp, format!("{}: {err}", e.name)),
            }
        }
    }
    Record::new(id, "subdiff", inp).at_most(worst, plan.tolerances.singleton)
}

/// Both directions of the first-order characterization.
pub fn first_order(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry], points: usize) -> Record {
    let id = "first-order";
    let inp = inputs(g, plan, json!({ "points": points }));
    let smooth: Vec<&FunctionEntry> = registry.iter().filter(|e| e.smooth).collect();
    let mut rng = plan.rng("first-order", 0);
    let mut disagreements = 0;
    let mut worst_diameter: f64 = 0.0;
    let mut ladders = Vec::new();
    for k in 0..points {
        let e = smooth[k % smooth.len()];
        let x = box_point(&mut rng, g.dim(), 0.8);
        match first_order_characterization(g, &e.field, &x, plan) {
            Ok(r) => {
                worst_diameter = worst_diameter.max(r.diameter);
                if !(r.singleton && r.ladder.converging) {
                    disagreements += 1;
                }
                ladders.push(r.ladder);
            }
            Err(err) => return Record::failed(id, "subdiff", inp, format!("{}: {err}", e.name)),
        }
    }
    let kink = match first_order_characterization(g, &entry(registry, "abs1").field, &vec![0.0; g.dim()], plan) {
        Ok(r) => r,
        Err(err) => return Record::failed(id, "subdiff", inp, format!("abs1: {err}")),
    };
    let kink_ok = kink.diameter >= KINK_DIAMETER && !kink.ladder.converging && kink.agree;
    let last = ladders.last().cloned();
    let mut r = Record::new(id, "subdiff", inp)
        .at_most(disagreements as f64, 0.0)
        .verdict(kink_ok)
        .details(json!({
            "smooth_max_diameter": worst_diameter,
            "kink_diameter": kink.diameter,
            "kink_ladder": kink.ladder.residuals,
        }));
    if let Some(l) = last {
        r = r.curve(&l.radii, &l.residuals);
    }
    r
}

fn mvt_batch(g: &GroupDescriptor, plan: &SamplingPlan, fields: &[&FunctionEntry], pairs: usize, tag: &str) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for e in fields {
        let mut rng = plan.rng(tag, 0);
        for _ in 0..pairs {
            let x = box_point(&mut rng, g.dim(), 0.8);
            let h: Vec<f64> = (0..g.horizontal_dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let w = mean_value_witness(g, &e.field, &x, &h, plan).map_err(|err| format!("{}: {err}", e.name))?;
            worst = worst.max(w.residual);
        }
    }
    Ok(worst)
}

pub fn mean_value(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry], pairs: usize) -> Vec<Record> {
    let smooth: Vec<&FunctionEntry> = registry.iter().filter(|e| e.smooth).collect();
    let poly: Vec<&FunctionEntry> = registry.iter().filter(|e| is_polyhedral(e.name)).collect();
    let mut out = Vec::new();
    for (id, fields, tol) in [("mvt-smooth", &smooth, MVT_SMOOTH_TOL), ("mvt-polyhedral", &poly, MVT_POLYHEDRAL_TOL)] {
        let inp = inputs(g, plan, json!({ "pairs": pairs }));
        out.push(match mvt_batch(g, plan, fields, pairs, id) {
            Ok(w) => Record::new(id, "mvt", inp).at_most(w, tol),
            Err(e) => Record::failed(id, "mvt", inp, e),
        });
    }
    out.push(lambda_mvt(g, plan, pairs / 5));
    out
}

/// λ-version on u = |π₁x|₁ + P with P = −x₁² (+ the first second-layer
/// coordinate when there is one), at λ = 1.05·lambda_max(P).
pub fn lambda_mvt(g: &GroupDescriptor, plan: &SamplingPlan, pairs: usize) -> Record {
    let id = "mvt-lambda";
    let ptext = if g.dim() > g.horizontal_dim() {
        format!("-1*x1^2 + x{}", g.horizontal_dim() + 1)
    } else {
        "-1*x1^2".to_string()
    };
    let inp = inputs(g, plan, json!({ "pairs": pairs, "perturbation": ptext }));
    let run = || -> Result<(f64, f64, f64), AnalysisError> {
        let p = parse_polynomial(g.degrees(), &ptext)?;
        let lambda = LAMBDA_SAFETY * lambda_max(g, &p, plan.seed)?.lambda;
        let b = FieldBuilder::new(g)?;
        let u = b.build(&FunctionSpec::Composition {
            composition: Combine::Sum,
            of: vec![FunctionSpec::builtin("norm1"), FunctionSpec::Polynomial { polynomial: ptext.clone() }],
        })?;
        let mut rng = plan.rng(id, 0);
        let (mut viol, mut resid): (f64, f64) = (0.0, 0.0);
        for _ in 0..pairs {
            let x = box_point(&mut rng, g.dim(), 0.8);
            let h: Vec<f64> = (0..g.horizontal_dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let w = lambda_mean_value_witness(g, &u, &x, &h, lambda, plan)?;
            viol = viol.max(w.lambda_violation);
            resid = resid.max(w.residual);
        }
        Ok((viol, resid, lambda))
    };
    match run() {
        Ok((viol, resid, lambda)) => Record::new(id, "mvt", inp)
            .at_most(viol, plan.tolerances.membership)
            .verdict(resid <= MVT_POLYHEDRAL_TOL)
            .details(json!({ "lambda": lambda, "max_residual": resid })),
        Err(e) => Record::failed(id, "mvt", inp, e),
    }
}

pub fn dermax(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry], points: usize, directions: usize) -> Record {
    let id = "dermax";
    let inp = inputs(g, plan, json!({ "points": points, "directions": directions }));
    let dplan = SamplingPlan {
        direction_count: directions,
        ..plan.clone()
    };
    let (mut disc, mut sub): (f64, f64) = (0.0, 0.0);
    for e in registry {
        let mut rng = plan.rng("dermax-points", 0);
        for _ in 0..points {
            let x = box_point(&mut rng, g.dim(), 0.8);
            match dermax_check(g, &e.field, &x, &dplan) {
                Ok(r) => {
                    disc = disc.max(r.max_discrepancy);
                    sub = sub.max(r.subadditivity_violation);
                }
                Err(err) => return Record::failed(id, "dermax", inp, format!("{}: {err}", e.name)),
            }
        }
    }
    Record::new(id, "dermax", inp)
        .at_most(disc, DERMAX_TOL)
        .verdict(sub <= plan.tolerances.membership)
        .details(json!({ "subadditivity_violation": sub }))
}

/// Second-order characterization on every smooth entry at one point each;
/// the Mignot-form inclusion rides along.
pub fn second_order_suite(g: &GroupDescriptor, plan: &SamplingPlan, registry: &[FunctionEntry]) -> Vec<Record> {
    let mut out = Vec::new();
    let mut rng = plan.rng("second-order-points", 0);
    for e in registry.iter().filter(|e| e.smooth) {
        let x = box_point(&mut rng, g.dim(), 0.5);
        let inp = inputs(g, plan, json!({ "function": e.name, "point": x }));
        match verify_theorem_1_1(g, &e.field, &x, plan) {
            Ok(r) => {
                let mut rec = Record::new(format!("verify-thm11:{}", e.name), "verify-thm11", inp.clone())
                    .at_most(if r.passed() { 0.0 } else { 1.0 }, 0.0)
                    .verdict(r.equivalence == Equivalence::BothConverge)
                    .details(json!({ "equivalence": r.equivalence.describe(), "verdicts": r.verdicts }));
                if let Some(exp) = &r.expansion {
                    rec = rec.curve(&exp.taus, &exp.residuals);
                }
                out.push(rec);
                match &r.extended {
                    Some(ext) => {
                        let taus: Vec<f64> = ext.mignot.iter().map(|m| m.tau).collect();
                        let ex: Vec<f64> = ext.mignot.iter().map(|m| m.excess).collect();
                        out.push(
                            Record::new(format!("mignot:{}", e.name), "second-fit", inp)
                                .at_most(ex.last().copied().unwrap_or(f64::NAN), MIGNOT_TOL)
                                .verdict(ext.mignot_converged)
                                .curve(&taus, &ex),
                        );
                    }
                    None => out.push(Record::failed(format!("mignot:{}", e.name), "second-fit", inp, r.notes.join("; "))),
                }
            }
            Err(err) => out.push(Record::failed(format!("verify-thm11:{}", e.name), "verify-thm11", inp, err)),
        }
    }
    out
}

/// x₁² + x₂² + x₃ at the identity of H¹ against its closed-form jet.
pub fn heisenberg_theorem(plan: &SamplingPlan) -> Record {
    let g = registry::heisenberg(1);
    let id = "verify-thm11:heisenberg-mixed";
    let inp = inputs(&g, plan, json!({ "function": "x1^2 + x2^2 + x3", "point": [0.0, 0.0, 0.0] }));
    let run = || -> Result<Record, AnalysisError> {
        let u = FieldBuilder::new(&g)?.build(&FunctionSpec::builtin("mixed"))?;
        let r = verify_theorem_1_1(&g, &u, &[0.0; 3], plan)?;
        let (Some(exp), Some(ext)) = (&r.expansion, &r.extended) else {
            return Ok(Record::failed(id, "verify-thm11", inp.clone(), r.notes.join("; ")));
        };
        let a_err = linalg::mat_max_abs_diff(&ext.a, &vec![vec![2.0, -0.5], vec![0.5, 2.0]]);
        let h_err = linalg::mat_max_abs_diff(&exp.jet.h, &vec![vec![2.0, 0.0], vec![0.0, 2.0]]);
        let v_err = (exp.jet.v2[0] - 1.0).abs();
        let metric = a_err.max(h_err).max(v_err);
        Ok(Record::new(id, "verify-thm11", inp.clone())
            .at_most(metric, plan.tolerances.fitted)
            .verdict(r.passed() && r.equivalence == Equivalence::BothConverge)
            .details(json!({ "a": ext.a, "h": exp.jet.h, "v2": exp.jet.v2, "verdicts": r.verdicts }))
            .curve(&exp.taus, &exp.residuals))
    };
    run().unwrap_or_else(|e| Record::failed(id, "verify-thm11", inp.clone(), e))
}

/// ½⟨Sx, x⟩ on ℝ²: the extended differential is S and symmetric.
pub fn euclidean_degeneration(plan: &SamplingPlan) -> Record {
    let g = registry::euclidean(2);
    let id = "euclidean-degeneration";
    let s = vec![vec![3.0, 0.7], vec![0.7, 1.5]];
    let inp = inputs(&g, plan, json!({ "S": s }));
    let run = || -> Result<Record, AnalysisError> {
        let u = FieldBuilder::new(&g)?.build(&FunctionSpec::Builtin {
            builtin: "euclid-quadratic".into(),
            params: json!({ "S": s }),
        })?;
        let base = crate::analysis::SecondOrderBase::new(&g, &u, &[0.3, -0.1], plan)?;
        let fit = fit_extended_differential(&g, &u, &base, plan)?;
        let skew = linalg::skew_part(&fit.a).iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        Ok(Record::new(id, "second-fit", inp.clone())
            .at_most(linalg::mat_max_abs_diff(&fit.a, &s), 1e-4)
            .verdict(skew <= 1e-6)
            .details(json!({ "a": fit.a, "skew": skew }))
            .curve(&fit.radii, &fit.residuals))
    };
    run().unwrap_or_else(|e| Record::failed(id, "second-fit", inp.clone(), e))
}

/// Sizes of the battery; the defaults match the documented acceptance runs.
#[derive(Clone, Debug)]
pub struct SuiteSizes {
    pub triples: usize,
    pub polynomials: usize,
    pub hull_points: usize,
    pub first_order_points: usize,
    pub mvt_pairs: usize,
    pub dermax_points: usize,
    pub dermax_directions: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            triples: 1000,
            polynomials: 100,
            hull_points: 20,
            first_order_points: 20,
            mvt_pairs: 100,
            dermax_points: 10,
            dermax_directions: 50,
        }
    }
}

pub fn run_suite(g: &GroupDescriptor, plan: &SamplingPlan, sizes: &SuiteSizes) -> Result<Vec<Record>, AnalysisError> {
    plan.validate()?;
    let registry = function_registry(g, plan)?;
    let mut out = vec![
        group_law(g, plan, sizes.triples),
        structure_constants(g, plan),
        alij_identity(g, plan, sizes.polynomials),
        certificates(g, plan, &registry),
        norm1_hull(g, plan, &registry),
        smooth_hulls(g, plan, &registry, sizes.hull_points),
        first_order(g, plan, &registry, sizes.first_order_points),
    ];
    out.extend(mean_value(g, plan, &registry, sizes.mvt_pairs));
    out.push(dermax(g, plan, &registry, sizes.dermax_points, sizes.dermax_directions));
    out.extend(second_order_suite(g, plan, &registry));
    out.push(heisenberg_theorem(plan));
    out.push(euclidean_degeneration(plan));
    Ok(out)
}
