//! The `vng` command line.
//!
//! Exit codes: 0 success, 1 validation or bound failure, 2 infeasible,
//! degenerate or uncertified, 3 IO, schema or usage error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::cones::{validate_g3, GrowthConstants, Tolerances};
use crate::error::{Result, VngError};
use crate::horizon::{bounds_check, horizon_sweep, prefix_extract, write_csv, BoundFamily};
use crate::model::Model;
use crate::model_io::{
    generate_example, load_model, parse_json, read_results, save_results, to_json_checked, CertificationRecord,
    ExampleKind, ExampleParams, ModelDocument, Provenance, ResultDocument, STATUS_NOT_RAPID, STATUS_PREFIX,
    STATUS_SUPPORTED,
};
use crate::paths::{check_dynkin, check_path, check_radner_support, check_support, DynkinDual, PrimalPath};
use crate::solver::{
    certify_rapid_with, dynkin_to_radner, max_terminal_value, radner_to_dynkin, solve_rapid, verify_certificate,
    Arithmetic, Certification, LpStatus,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Default certification tolerance when neither `--tol` nor `VNG_TOL` is set.
pub const DEFAULT_TOL: f64 = 1e-7;
pub const TOL_ENV: &str = "VNG_TOL";

#[derive(Debug, Parser)]
#[command(name = "vng", version, about = "Rapid paths and dual paths of stochastic von Neumann-Gale models")]
pub struct Cli {
    /// Certification tolerance [default: $VNG_TOL, else 1e-7]
    #[arg(long, global = true, value_name = "TOL")]
    pub tol: Option<f64>,

    /// More detail on standard output (repeatable)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    /// Also write a machine-readable report to FILE
    #[arg(long, global = true, value_name = "FILE")]
    pub json: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check (G.1)-(G.3) and print the growth constants
    Validate { model: PathBuf },
    /// Compute a certified rapid path with Dynkin and Radner duals
    Solve(SolveArgs),
    /// Search for a dual supporting a given path
    Certify(CertifyArgs),
    /// Convert between Dynkin and Radner duals
    Convert(ConvertArgs),
    /// Solve every horizon up to a maximum and check the a priori bounds
    Sweep(SweepArgs),
    /// Write a seeded random model
    Example(ExampleArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub model: PathBuf,
    /// Cut the model at N, or extend a stationary model to N
    #[arg(long, value_name = "N")]
    pub horizon: Option<usize>,
    /// Result document [default: print to standard output]
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub model: PathBuf,
    /// Result document holding the `path` field
    pub path: PathBuf,
    /// Solve the certification LP in exact rational arithmetic
    #[arg(long)]
    pub exact: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    /// Dynkin to Radner: q_t = E_t p_{t+1}
    D2r,
    /// Radner to Dynkin with multipliers g
    R2d,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    #[arg(long, value_enum)]
    pub direction: Direction,
    pub model: PathBuf,
    /// Result document holding `dynkin` (d2r) or `radner` (r2d)
    pub dual: PathBuf,
    /// Result document holding the supported `path` (required for r2d)
    #[arg(long, value_name = "FILE")]
    pub path: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub model: PathBuf,
    #[arg(long, value_name = "N")]
    pub max_horizon: usize,
    /// Per-(N, t, node) table
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// Also extract and re-verify the prefix up to T
    #[arg(long, value_name = "T")]
    pub prefix: Option<usize>,
    #[arg(long, hide = true, value_name = "FACTOR")]
    pub scale_constants: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Neumann,
    Currency,
}

#[derive(Debug, Args)]
pub struct ExampleArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub horizon: usize,
    #[arg(long, default_value_t = 2)]
    pub branching: usize,
    /// Proportional exchange cost (currency)
    #[arg(long, default_value_t = 0.01)]
    pub cost: f64,
    /// Mark the model stationary so sweeps may extend it
    #[arg(long)]
    pub stationary: bool,
}

/// Maps an error to its exit code.
pub fn exit_code(e: &VngError) -> i32 {
    match e {
        VngError::Io(_) | VngError::Json(_) | VngError::Csv(_) | VngError::Schema { .. } => EXIT_IO,
        VngError::DegenerateModel { .. }
        | VngError::NotRapid(_)
        | VngError::ConversionInfeasible { .. }
        | VngError::Unsupportable { .. }
        | VngError::NotConverged { .. }
        | VngError::Lp(_)
        | VngError::Verification(_) => EXIT_UNCERTIFIED,
        _ => EXIT_VALIDATION,
    }
}

/// Resolves the tolerance: flag, then `VNG_TOL`, then [`DEFAULT_TOL`].
pub fn resolve_tol(flag: Option<f64>, env: Option<&str>) -> std::result::Result<f64, String> {
    let tol = match (flag, env) {
        (Some(t), _) => t,
        (None, Some(s)) => s.trim().parse::<f64>().map_err(|_| format!("{TOL_ENV}={s:?} is not a number"))?,
        (None, None) => DEFAULT_TOL,
    };
    if tol.is_finite() && tol > 0.0 {
        Ok(tol)
    } else {
        Err(format!("tolerance must be positive and finite, got {tol}"))
    }
}

struct Ctx {
    tol: f64,
    verbose: u8,
    report: Value,
}

impl Ctx {
    fn tolerances(&self) -> Tolerances {
        Tolerances {
            certification: self.tol,
            ..Tolerances::default()
        }
    }

    fn membership(&self) -> f64 {
        Tolerances::default().membership
    }
}

/// Runs `vng` with `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_IO } else { EXIT_OK };
        }
    };
    let env = std::env::var(TOL_ENV).ok();
    let tol = match resolve_tol(cli.tol, env.as_deref()) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_IO;
        }
    };
    let mut ctx = Ctx {
        tol,
        verbose: cli.verbose,
        report: json!({ "tol": tol }),
    };
    let code = match dispatch(&cli.command, &mut ctx) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ctx.report["error"] = json!(e.to_string());
            exit_code(&e)
        }
    };
    ctx.report["exit_code"] = json!(code);
    if let Some(path) = &cli.json {
        let written = serde_json::to_string_pretty(&ctx.report)
            .map_err(VngError::from)
            .and_then(|s| fs::write(path, s).map_err(VngError::from));
        if let Err(e) = written {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    }
    code
}

fn dispatch(cmd: &Command, ctx: &mut Ctx) -> Result<i32> {
    match cmd {
        Command::Validate { model } => cmd_validate(model, ctx),
        Command::Solve(a) => cmd_solve(a, ctx),
        Command::Certify(a) => cmd_certify(a, ctx),
        Command::Convert(a) => cmd_convert(a, ctx),
        Command::Sweep(a) => cmd_sweep(a, ctx),
        Command::Example(a) => cmd_example(a, ctx),
    }
}

fn emit(out: &Option<PathBuf>, doc: &ResultDocument) -> Result<()> {
    match out {
        Some(path) => save_results(doc, path),
        None => {
            println!("{}", to_json_checked(doc)?);
            Ok(())
        }
    }
}

fn load(path: &Path, ctx: &Ctx) -> Result<(Model, GrowthConstants)> {
    let loaded = load_model(path, ctx.membership())?;
    Ok((loaded.model, loaded.constants))
}

/// Fits the model horizon to a result document.
fn fit(model: Model, horizon: usize) -> Result<Model> {
    if horizon == model.horizon() {
        Ok(model)
    } else {
        model.at_horizon(horizon)
    }
}

fn print_constants(c: &GrowthConstants, verbose: u8) {
    println!("delta = {}  D = {}", c.delta, c.big_d);
    for l in &c.levels {
        println!("t={}  M={}  gamma={}  C={}", l.t, l.m, l.gamma, l.c);
        if verbose > 0 {
            for w in &l.witnesses {
                println!("    witness at {}: a = {:?}, b = {:?}", w.node, w.a_hat, w.b_hat);
            }
        }
    }
    for t in 1..=c.horizon() {
        println!("C^{t} = {}  M^{t} = {}", c.c_cumulative(t), c.m_cumulative(t));
    }
}

fn cmd_validate(path: &Path, ctx: &mut Ctx) -> Result<i32> {
    let text = fs::read_to_string(path)?;
    let doc: ModelDocument = parse_json(&text)?;
    let model = doc.to_model()?;
    let tree = &model.tree;

    let mut g1 = None;
    let mut g2 = None;
    for node in 0..tree.num_nodes() {
        if node == tree.root() {
            continue;
        }
        let cone = model.cone(node);
        if g1.is_none() {
            if let Some(i) = cone.g1_failure()? {
                g1 = Some(VngError::G1Violation {
                    node: tree.label(node).to_owned(),
                    coordinate: i,
                });
            }
        }
        if g2.is_none() {
            if let Err(k) = cone.validate_g2() {
                g2 = Some(VngError::G2Violation {
                    node: tree.label(node).to_owned(),
                    generator: k,
                });
            }
        }
    }
    let mut g3 = None;
    for t in 1..=tree.horizon() {
        if let Err(e) = validate_g3(tree, &model.cones, t, ctx.membership()) {
            g3 = Some(e);
            break;
        }
    }
    let mut verdicts = serde_json::Map::new();
    for (name, failure) in [("G1", &g1), ("G2", &g2), ("G3", &g3)] {
        match failure {
            None => println!("{name}: ok"),
            Some(e) => println!("{name}: FAILED ({e})"),
        }
        verdicts.insert(name.into(), json!(failure.is_none()));
    }
    ctx.report["assumptions"] = Value::Object(verdicts);
    if g1.is_some() || g2.is_some() || g3.is_some() {
        return Ok(EXIT_VALIDATION);
    }
    let constants = model.constants(ctx.membership())?;
    print_constants(&constants, ctx.verbose);
    ctx.report["constants"] = serde_json::to_value(&constants)?;
    Ok(EXIT_OK)
}

fn residuals(model: &Model, x: &PrimalPath, p: Option<&DynkinDual>, tol: f64) -> Result<Vec<(&'static str, f64)>> {
    let tree = &model.tree;
    let mut out = vec![("path", check_path(tree, &model.cones, x, tol)?.worst_residual)];
    if let Some(p) = p {
        let q = dynkin_to_radner(tree, p)?;
        out.push(("dynkin_cone", check_dynkin(tree, &model.cones, p, tol)?.worst_residual));
        out.push(("dynkin_support", check_support(tree, x, p, tol)?.worst_residual));
        out.push(("radner_support", check_radner_support(tree, x, &q, tol)?.worst_residual));
    }
    Ok(out)
}

fn record_residuals(doc: &mut ResultDocument, ctx: &mut Ctx, res: &[(&str, f64)]) {
    for (k, v) in res {
        doc.residuals.insert((*k).to_owned(), *v);
        ctx.report["residuals"][*k] = json!(v);
    }
}

fn cmd_solve(a: &SolveArgs, ctx: &mut Ctx) -> Result<i32> {
    let doc: ModelDocument = parse_json(&fs::read_to_string(&a.model)?)?;
    let model = doc.to_model()?;
    let model = match a.horizon {
        Some(n) => model.at_horizon(n)?,
        None => model,
    };
    // degenerate models fail (G.3) too; report them as degenerate first
    let guard = max_terminal_value(&model, ctx.tol);
    if guard.status == LpStatus::DegenerateModel {
        return Err(VngError::DegenerateModel { value: guard.objective });
    }
    let constants = model.constants(ctx.membership())?;
    let tree = &model.tree;
    let mut doc = ResultDocument::new(model.horizon(), Provenance::new(ctx.tolerances(), None));
    doc.constants = Some(constants);
    let sol = match solve_rapid(&model, ctx.tol) {
        Ok(sol) => sol,
        Err(VngError::NotRapid(cert)) => {
            println!("log-optimal path was not certified: minimal total slack {:e}", cert.min_total_slack);
            match &a.out {
                Some(out) => {
                    let archive = out.with_extension("model.json");
                    fs::write(&archive, ModelDocument::from_model(&model).to_json()?)?;
                    println!("model archived to {}", archive.display());
                }
                None => eprintln!("model not archived (no --out given)"),
            }
            doc.certification = Some(CertificationRecord {
                status: STATUS_NOT_RAPID.into(),
                min_total_slack: cert.min_total_slack,
            });
            doc.infeasibility = Some(*cert);
            emit(&a.out, &doc)?;
            return Ok(EXIT_UNCERTIFIED);
        }
        Err(e) => return Err(e),
    };
    doc.set_path(tree, &sol.path);
    doc.set_dynkin(tree, &sol.dynkin);
    doc.set_radner(tree, &sol.radner);
    doc.certification = Some(CertificationRecord {
        status: STATUS_SUPPORTED.into(),
        min_total_slack: sol.min_total_slack,
    });
    let res = residuals(&model, &sol.path, Some(&sol.dynkin), ctx.membership())?;
    record_residuals(&mut doc, ctx, &res);
    doc.residuals.insert("duality_gap".into(), sol.log_optimal.gap);
    emit(&a.out, &doc)?;

    println!("certified: {STATUS_SUPPORTED} (horizon {}, minimal total slack {:e})", model.horizon(), sol.min_total_slack);
    println!("log-optimal objective {:.12}, {} iterations", sol.log_optimal.objective, sol.log_optimal.iterations);
    for (k, v) in &res {
        println!("  {k} residual {v:e}");
    }
    if ctx.verbose > 0 {
        for t in 0..=model.horizon() {
            for &id in tree.level(t) {
                println!("  t={t} {}: x = {:?}  q = {:?}", tree.label(id), sol.path.x(t).at(tree, id), sol.radner.q(t).at(tree, id));
            }
        }
    }
    ctx.report["status"] = json!(STATUS_SUPPORTED);
    ctx.report["min_total_slack"] = json!(sol.min_total_slack);
    Ok(EXIT_OK)
}

fn cmd_certify(a: &CertifyArgs, ctx: &mut Ctx) -> Result<i32> {
    let (model, _) = load(&a.model, ctx)?;
    let input = read_results(&a.path)?;
    let model = fit(model, input.horizon)?;
    let tree = &model.tree;
    let path = input.primal_path(tree)?;
    let feasible = check_path(tree, &model.cones, &path, ctx.membership())?;
    if !feasible.ok {
        println!("not a feasible path: worst residual {:e}", feasible.worst_residual);
        ctx.report["status"] = json!("infeasible path");
        return Ok(EXIT_VALIDATION);
    }
    let arithmetic = if a.exact { Arithmetic::Exact } else { Arithmetic::Float };
    let mut doc = ResultDocument::new(model.horizon(), Provenance::new(ctx.tolerances(), None));
    doc.set_path(tree, &path);
    match certify_rapid_with(&model, &path, ctx.tol, arithmetic)? {
        Certification::Supported {
            dual,
            min_total_slack,
            residual,
        } => {
            let q = dynkin_to_radner(tree, &dual)?;
            doc.set_dynkin(tree, &dual);
            doc.set_radner(tree, &q);
            doc.certification = Some(CertificationRecord {
                status: STATUS_SUPPORTED.into(),
                min_total_slack,
            });
            let res = residuals(&model, &path, Some(&dual), ctx.membership())?;
            record_residuals(&mut doc, ctx, &res);
            emit(&a.out, &doc)?;
            println!("rapid: {STATUS_SUPPORTED} (minimal total slack {min_total_slack:e}, re-check residual {residual:e})");
            ctx.report["status"] = json!(STATUS_SUPPORTED);
            ctx.report["min_total_slack"] = json!(min_total_slack);
            Ok(EXIT_OK)
        }
        Certification::NotRapid(cert) => {
            let margin = verify_certificate(&model, &path, &cert)?;
            println!("not rapid: minimal total slack {:e}", cert.min_total_slack);
            println!("infeasibility certificate verified, Farkas margin {margin:e}");
            for (node, t, s) in cert.slack_by_node.iter().filter(|(_, _, s)| *s > 0.0) {
                println!("  unmet support at {node} (t={t}): {s:e}");
            }
            doc.certification = Some(CertificationRecord {
                status: STATUS_NOT_RAPID.into(),
                min_total_slack: cert.min_total_slack,
            });
            ctx.report["status"] = json!(STATUS_NOT_RAPID);
            ctx.report["min_total_slack"] = json!(cert.min_total_slack);
            ctx.report["certificate_margin"] = json!(margin);
            doc.infeasibility = Some(cert);
            emit(&a.out, &doc)?;
            Ok(EXIT_UNCERTIFIED)
        }
    }
}

fn cmd_convert(a: &ConvertArgs, ctx: &mut Ctx) -> Result<i32> {
    let (model, _) = load(&a.model, ctx)?;
    let input = read_results(&a.dual)?;
    let model = fit(model, input.horizon)?;
    let tree = &model.tree;
    let path = match &a.path {
        Some(p) => {
            let doc = read_results(p)?;
            if doc.horizon != model.horizon() {
                return Err(VngError::Schema {
                    path: "horizon".into(),
                    message: format!("path file has horizon {}, dual file {}", doc.horizon, model.horizon()),
                });
            }
            Some(doc.primal_path(tree)?)
        }
        None => None,
    };
    let mut doc = ResultDocument::new(model.horizon(), Provenance::new(ctx.tolerances(), None));
    if let Some(x) = &path {
        doc.set_path(tree, x);
    }
    match a.direction {
        Direction::D2r => {
            let p = input.dynkin_dual(tree)?;
            let cone = check_dynkin(tree, &model.cones, &p, ctx.membership())?;
            if !cone.ok {
                println!("input is not a Dynkin dual path: worst residual {:e}", cone.worst_residual);
                return Ok(EXIT_UNCERTIFIED);
            }
            let q = dynkin_to_radner(tree, &p)?;
            if let Some(x) = &path {
                let support = check_radner_support(tree, x, &q, ctx.membership())?;
                doc.residuals.insert("radner_support".into(), support.worst_residual);
                if !support.ok {
                    println!("converted dual does not support the path: worst residual {:e}", support.worst_residual);
                    return Ok(EXIT_UNCERTIFIED);
                }
            }
            doc.set_radner(tree, &q);
            emit(&a.out, &doc)?;
            println!("converted Dynkin dual to Radner dual (horizon {})", model.horizon());
            if ctx.verbose > 0 {
                for t in 0..=model.horizon() {
                    println!("  q_{t} = {:?}", q.q(t).values());
                }
            }
        }
        Direction::R2d => {
            let Some(x) = &path else {
                return Err(VngError::InvalidParameter("r2d needs the supported path (--path)".into()));
            };
            let q = input.radner_dual(tree)?;
            let (p, g) = radner_to_dynkin(&model, &q, x, ctx.membership())?;
            let mean = g.worst_conditional_mean(tree)?;
            doc.set_dynkin(tree, &p);
            doc.set_multipliers(tree, &g);
            doc.residuals.insert("multiplier_mean".into(), mean);
            doc.residuals.insert("dynkin_support".into(), check_support(tree, x, &p, ctx.membership())?.worst_residual);
            emit(&a.out, &doc)?;
            println!("converted Radner dual to Dynkin dual (horizon {})", model.horizon());
            println!("multipliers: worst |E g| = {mean:e}, identically zero: {}", g.is_identically_zero());
            ctx.report["multipliers_zero"] = json!(g.is_identically_zero());
            ctx.report["multiplier_mean"] = json!(mean);
        }
    }
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, ctx: &mut Ctx) -> Result<i32> {
    let (model, _) = load(&a.model, ctx)?;
    let sweep = horizon_sweep(&model, a.max_horizon, ctx.tol)?;
    let constants = match a.scale_constants {
        Some(f) => sweep.constants.scaled(f),
        None => sweep.constants.clone(),
    };
    let report = bounds_check(&sweep, &constants, ctx.membership())?;
    if let Some(path) = &a.csv {
        write_csv(fs::File::create(path)?, &sweep, &report)?;
    }

    for row in &sweep.rows {
        match &row.outcome {
            Ok(sol) => println!("N={}: certified, minimal total slack {:e}", row.horizon, sol.min_total_slack),
            Err(e) => println!("N={}: failed ({e})", row.horizon),
        }
    }
    println!("diameters over the trailing half of the sweep:");
    for d in &sweep.diameters {
        let f = |v: Option<f64>| v.map_or("-".to_owned(), |v| format!("{v:.3e}"));
        println!("  t={}  x {}  p {}  q {}", d.t, f(d.x), f(d.p), f(d.q));
    }
    for fam in [BoundFamily::DualMean, BoundFamily::PathNorm, BoundFamily::DualContraction, BoundFamily::FirstPrice] {
        if let Some(w) = report.worst_of(fam) {
            println!(
                "{fam:?}: worst slack {:e} (N={}, t={}{}: {} vs {})",
                w.slack,
                w.horizon,
                w.t,
                w.node.as_deref().map(|n| format!(", {n}")).unwrap_or_default(),
                w.value,
                w.bound
            );
        }
    }
    println!("q_0 reference = {:?}", report.q0_reference);
    if ctx.verbose > 0 {
        for v in report.violations() {
            println!("  violation: {v:?}");
        }
    }
    ctx.report["bounds_ok"] = json!(report.ok);
    ctx.report["failed_rows"] = json!(sweep.failed());
    ctx.report["diameters"] = serde_json::to_value(&sweep.diameters)?;
    ctx.report["worst"] = serde_json::to_value(report.worst())?;

    if let Some(t_cut) = a.prefix {
        let pre = prefix_extract(&sweep, t_cut, ctx.membership())?;
        println!("{} up to t={} from N={} ({STATUS_PREFIX})", pre.label, pre.t_cut, pre.source_horizon);
        ctx.report["prefix"] = json!({ "label": pre.label, "t_cut": pre.t_cut, "source_horizon": pre.source_horizon });
    }

    if !report.ok {
        println!("bound check FAILED ({} violations)", report.violations().count());
        return Ok(EXIT_VALIDATION);
    }
    println!("bound check passed");
    Ok(if sweep.failed() > 0 { EXIT_UNCERTIFIED } else { EXIT_OK })
}

fn cmd_example(a: &ExampleArgs, ctx: &mut Ctx) -> Result<i32> {
    let params = ExampleParams {
        dim: a.dim,
        horizon: a.horizon,
        branching: a.branching,
        cost: a.cost,
        stationary: a.stationary,
        ..ExampleParams::default()
    };
    let kind = match a.kind {
        Kind::Neumann => ExampleKind::Neumann,
        Kind::Currency => ExampleKind::Currency,
    };
    let doc = generate_example(kind, &params, a.seed)?;
    let text = doc.to_json()?;
    match &a.out {
        Some(path) => {
            fs::write(path, &text)?;
            println!("wrote {} (seed {}, {} nodes)", path.display(), a.seed, doc.nodes.len());
        }
        None => println!("{text}"),
    }
    ctx.report["seed"] = json!(a.seed);
    ctx.report["nodes"] = json!(doc.nodes.len());
    Ok(EXIT_OK)
}
