//! Command-line surface: argument parsing, dispatch and exit codes.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::analysis::*;
use crate::group::{DescriptorFile, FieldCoefficients, GroupDescriptor, GroupError, GroupPoint};
use crate::poly::{check_alij, sym_hessian};
use crate::registry;
use crate::report::{emit_report, Record, Report, ReportError};
use crate::suite::{run_suite, SuiteSizes, ALIJ_TOL, DERMAX_TOL};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "carnot", version, about = "Calculus on stratified groups and h-convexity diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Built-in group (heisenberg:N, euclidean:N, free-step2:M, engel) or a descriptor file.
    #[arg(long, global = true, default_value = "heisenberg:1")]
    pub group: String,
    /// Built-in function name, inline JSON spec, or path to a spec file.
    #[arg(long = "fn", global = true)]
    pub function: Option<String>,
    /// Comma-separated coordinates; repeat for commands taking several points.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub point: Vec<String>,
    /// Comma-separated horizontal direction (mvt).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub dir: Option<String>,
    /// Polynomial literal such as "x1^2 + x3" (poly-hess, poly-alij).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub poly: Option<String>,
    /// JSON sampling plan; missing fields take their defaults.
    #[arg(long, global = true)]
    pub plan_file: Option<PathBuf>,
    /// Directory for report.json, summary.txt and curves.csv.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Tolerance override key=value (membership, singleton, fitted, fd_stability, hyperplane_gap).
    #[arg(long, global = true)]
    pub tol: Vec<String>,
    /// Accept descriptor files that fail validation.
    #[arg(long, global = true)]
    pub force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Check antisymmetry, grading, Jacobi and stratification.
    GroupValidate,
    /// Product, inverses and norms of two points.
    GroupProduct,
    /// Symmetrized horizontal Hessian of an h-degree ≤ 2 polynomial.
    PolyHess,
    /// Check the second-layer identity for X_iX_jP.
    PolyAlij,
    /// Sampled h-convexity test.
    HconvexCheck,
    /// Subdifferential hull at a point.
    Subdiff,
    /// Directional derivatives against the hull support function.
    Dermax,
    /// Mean-value witness along x·[0, h].
    Mvt,
    /// Second-order expansion and extended-differential fits.
    SecondFit,
    /// Full second-order characterization with per-claim verdicts.
    VerifyThm11,
    /// The full check battery.
    Suite,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GroupValidate => "group-validate",
            Command::GroupProduct => "group-product",
            Command::PolyHess => "poly-hess",
            Command::PolyAlij => "poly-alij",
            Command::HconvexCheck => "hconvex-check",
            Command::Subdiff => "subdiff",
            Command::Dermax => "dermax",
            Command::Mvt => "mvt",
            Command::SecondFit => "second-fit",
            Command::VerifyThm11 => "verify-thm11",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Report(_) | CliError::Internal(_) => EXIT_INTERNAL,
        }
    }
}

impl From<GroupError> for CliError {
    fn from(e: GroupError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Analysis errors caused by the inputs are configuration errors; the rest
/// are reported as failed checks by the callers.
fn config_error(e: &AnalysisError) -> bool {
    matches!(
        e,
        AnalysisError::InvalidPlan(_) | AnalysisError::FunctionSpec(_) | AnalysisError::Group(_) | AnalysisError::Poly(_)
    )
}

/// Fully resolved inputs of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub group: GroupDescriptor,
    pub function: Option<FunctionSpec>,
    pub points: Vec<Vec<f64>>,
    pub direction: Option<Vec<f64>>,
    pub poly: Option<String>,
    pub plan: SamplingPlan,
    pub out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}

fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::Config(format!("bad coordinate '{s}' in '{text}'")))
        })
        .collect()
}

/// Group from a built-in name or a descriptor file. File descriptors that
/// fail validation are kept only with `force` (or for `group-validate`,
/// which reports the violations itself).
pub fn resolve_group(spec: &str, force: bool, validating: bool) -> Result<GroupDescriptor, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let file = DescriptorFile::parse(&read(path)?)?;
        return Ok(file.build(force || validating)?);
    }
    Ok(registry::group_by_name(spec)?)
}

pub fn resolve_function(spec: &str) -> Result<FunctionSpec, CliError> {
    let cfg = |e: AnalysisError| CliError::Config(e.to_string());
    let trimmed = spec.trim_start();
    if trimmed.starts_with('{') {
        return FunctionSpec::from_json(trimmed).map_err(cfg);
    }
    let path = Path::new(spec);
    if path.exists() {
        return FunctionSpec::from_json(&read(path)?).map_err(cfg);
    }
    Ok(FunctionSpec::builtin(spec))
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let group = resolve_group(&cli.group, cli.force, cli.command == Command::GroupValidate)?;
        let mut plan = match &cli.plan_file {
            Some(p) => serde_json::from_str::<SamplingPlan>(&read(p)?).map_err(|e| CliError::Config(format!("plan file: {e}")))?,
            None => SamplingPlan::default(),
        };
        if let Some(seed) = cli.seed {
            plan.seed = seed;
        }
        for kv in &cli.tol {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--tol expects key=value, got '{kv}'")))?;
            let v: f64 = v.parse().map_err(|_| CliError::Config(format!("bad tolerance value '{v}'")))?;
            plan.tolerances.set(k, v).map_err(|e| CliError::Config(e.to_string()))?;
        }
        plan.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let points = cli.point.iter().map(|p| parse_vector(p)).collect::<Result<Vec<_>, _>>()?;
        for p in &points {
            if p.len() != group.dim() {
                return Err(CliError::Config(format!("point has {} coordinates, group {} has dimension {}", p.len(), group.name(), group.dim())));
            }
        }
        let direction = cli.dir.as_deref().map(parse_vector).transpose()?;
        if let Some(d) = &direction {
            if d.len() != group.horizontal_dim() {
                return Err(CliError::Config(format!("direction must have {} horizontal coordinates", group.horizontal_dim())));
            }
        }
        Ok(Self {
            command: cli.command,
            group,
            function: cli.function.as_deref().map(resolve_function).transpose()?,
            points,
            direction,
            poly: cli.poly.clone(),
            plan,
            out: cli.out.clone(),
        })
    }

    fn point(&self, k: usize) -> Result<&[f64], CliError> {
        self.points
            .get(k)
            .map(|p| p.as_slice())
            .ok_or_else(|| CliError::Config(format!("{} needs {} --point argument(s)", self.command.name(), k + 1)))
    }

    fn field(&self) -> Result<Field, CliError> {
        let spec = self
            .function
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} needs --fn", self.command.name())))?;
        FieldBuilder::new(&self.group)
            .and_then(|b| b.build(spec))
            .map_err(|e| CliError::Config(e.to_string()))
    }

    fn inputs(&self) -> serde_json::Value {
        json!({
            "group": DescriptorFile::from_descriptor(&self.group),
            "function": self.function,
            "points": self.points,
            "direction": self.direction,
            "poly": self.poly,
            "plan": self.plan,
        })
    }
}

/// Outcome of an analysis step: failures caused by the function itself
/// become failed records, input problems abort the run.
fn record_or<T>(
    res: Result<T, AnalysisError>,
    cfg: &RunConfig,
    build: impl FnOnce(T) -> Record,
) -> Result<Record, CliError> {
    match res {
        Ok(v) => Ok(build(v)),
        Err(e) if config_error(&e) => Err(CliError::Config(e.to_string())),
        Err(e) => Ok(Record::failed(cfg.command.name(), cfg.command.name(), cfg.inputs(), e)),
    }
}

fn dispatch(cfg: &RunConfig) -> Result<Vec<Record>, CliError> {
    let g = &cfg.group;
    let plan = &cfg.plan;
    let name = cfg.command.name();
    let rec = || Record::new(name, name, cfg.inputs());
    match cfg.command {
        Command::GroupValidate => {
            let report = g.validate();
            Ok(vec![rec()
                .at_most(report.violations.len() as f64, 0.0)
                .details(json!({ "violations": report.violations, "summary": report.summary() }))])
        }
        Command::GroupProduct => {
            let x = GroupPoint::new(cfg.point(0)?.to_vec())?;
            let y = GroupPoint::new(cfg.point(1)?.to_vec())?;
            let xy = g.bch_product(&x, &y)?;
            let back = g.bch_product(&xy, &g.inverse(&y))?;
            let residual = crate::linalg::max_abs_diff(back.coords(), x.coords());
            Ok(vec![rec().at_most(residual, crate::suite::GROUP_LAW_TOL).details(json!({
                "product": xy,
                "inverse_x": g.inverse(&x),
                "norm_x": g.homogeneous_norm(x.coords()),
                "norm_product": g.homogeneous_norm(xy.coords()),
                "distance": g.distance(x.coords(), y.coords()),
            }))])
        }
        Command::PolyHess | Command::PolyAlij => {
            let text = cfg
                .poly
                .as_deref()
                .ok_or_else(|| CliError::Config(format!("{name} needs --poly")))?;
            let p = parse_polynomial(g.degrees(), text).map_err(|e| CliError::Config(e.to_string()))?;
            let fc = FieldCoefficients::compute(g)?;
            if cfg.command == Command::PolyHess {
                let (h, v2) = sym_hessian(&fc, &p).map_err(|e| CliError::Config(e.to_string()))?;
                let psd = psd_check(&h, 1e-12).map_err(|e| CliError::Internal(e.to_string()))?;
                Ok(vec![rec().details(json!({ "hessian": h, "v2": v2, "min_eigenvalue": psd.min_eigenvalue }))])
            } else {
                let c = check_alij(&fc, &p).map_err(|e| CliError::Config(e.to_string()))?;
                Ok(vec![rec().at_most(c.max_abs, ALIJ_TOL).details(&c)])
            }
        }
        Command::HconvexCheck => {
            let u = cfg.field()?;
            record_or(hconvexity_check(g, &u, plan), cfg, |r| {
                rec().at_most(r.max_violation, plan.tolerances.membership).details(&r)
            })
            .map(|r| vec![r])
        }
        Command::Subdiff => {
            let u = cfg.field()?;
            let x = cfg.point(0)?;
            record_or(subdifferential_hull(g, &u, x, plan), cfg, |h| {
                rec().at_most(h.flagged.len() as f64, 0.0).details(json!({
                    "vertices": h.polytope.vertices(),
                    "diameter": h.diameter(),
                    "singleton": h.is_singleton(plan),
                    "flagged": h.flagged,
                    "vertex_violations": h.vertex_violations,
                    "samples": h.samples,
                }))
            })
            .map(|r| vec![r])
        }
        Command::Dermax => {
            let u = cfg.field()?;
            let x = cfg.point(0)?;
            record_or(dermax_check(g, &u, x, plan), cfg, |r| {
                rec()
                    .at_most(r.max_discrepancy, DERMAX_TOL)
                    .verdict(r.subadditivity_violation <= plan.tolerances.membership)
                    .details(&r)
            })
            .map(|r| vec![r])
        }
        Command::Mvt => {
            let u = cfg.field()?;
            let x = cfg.point(0)?;
            let h = cfg.direction.as_ref().ok_or_else(|| CliError::Config("mvt needs --dir".into()))?;
            record_or(mean_value_witness(g, &u, x, h, plan), cfg, |w| {
                rec().at_most(w.residual, plan.tolerances.hyperplane_gap).details(&w)
            })
            .map(|r| vec![r])
        }
        Command::SecondFit => {
            let u = cfg.field()?;
            let x = cfg.point(0)?;
            let fc = FieldCoefficients::compute(g)?;
            let base = match SecondOrderBase::new(g, &u, x, plan) {
                Ok(b) => b,
                Err(e) => return record_or::<()>(Err(e), cfg, |_| unreachable!()).map(|r| vec![r]),
            };
            let exp = record_or(
                quotient_grid(g, &u, base.clone(), plan).and_then(|grid| fit_expansion(&fc, &grid, plan)),
                cfg,
                |f| {
                    Record::new("second-fit:expansion", name, cfg.inputs())
                        .at_most(*f.residuals.last().expect("nonempty"), plan.tolerances.fitted)
                        .verdict(f.converged)
                        .curve(&f.taus, &f.residuals)
                        .details(&f.jet)
                },
            )?;
            let ext = record_or(fit_extended_differential(g, &u, &base, plan), cfg, |f| {
                Record::new("second-fit:extended", name, cfg.inputs())
                    .at_most(*f.residuals.last().expect("nonempty"), plan.tolerances.fitted)
                    .verdict(f.converged)
                    .curve(&f.radii, &f.residuals)
                    .details(json!({ "a": f.a, "mignot": f.mignot, "mignot_converged": f.mignot_converged }))
            })?;
            Ok(vec![exp, ext])
        }
        Command::VerifyThm11 => {
            let u = cfg.field()?;
            let x = cfg.point(0)?;
            record_or(verify_theorem_1_1(g, &u, x, plan), cfg, |r| {
                let mut out = rec()
                    .at_most(r.verdicts.iter().filter(|v| !v.passed).count() as f64, 0.0)
                    .details(json!({
                        "equivalence": r.equivalence.describe(),
                        "verdicts": r.verdicts,
                        "hull_diameter": r.hull_diameter,
                        "min_eigenvalue": r.min_eigenvalue,
                        "claim3": r.claim3,
                        "v2": r.expansion.as_ref().map(|e| &e.jet.v2),
                        "h": r.expansion.as_ref().map(|e| &e.jet.h),
                        "a": r.extended.as_ref().map(|e| &e.a),
                        "notes": r.notes,
                    }));
                if let Some(e) = &r.expansion {
                    out = out.curve(&e.taus, &e.residuals);
                }
                out
            })
            .map(|r| vec![r])
        }
        Command::Suite => run_suite(g, plan, &SuiteSizes::default()).map_err(|e| {
            if config_error(&e) {
                CliError::Config(e.to_string())
            } else {
                CliError::Internal(e.to_string())
            }
        }),
    }
}

/// Runs one command, writes report files when an output directory is set,
/// and returns the report.
pub fn run_command(cfg: &RunConfig) -> Result<Report, CliError> {
    let records = dispatch(cfg)?;
    let report = Report::new(cfg.command.name(), cfg.plan.seed, records);
    if let Some(dir) = &cfg.out {
        emit_report(&report, dir)?;
    }
    Ok(report)
}

/// Parses arguments, runs, prints the summary and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    let outcome = RunConfig::from_cli(&cli).and_then(|cfg| run_command(&cfg));
    match outcome {
        Ok(report) => {
            print!("{}", report.summary());
            if report.passed {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
