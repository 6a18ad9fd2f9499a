//! Finite-horizon families `x(N), p(N), q(N)` for `N = 1..N_max`, the
//! a priori bounds they must satisfy, and finite-prefix extraction.

use std::io::Write;
use std::thread;

use serde::Serialize;

use crate::cones::{dot, l1, GrowthConstants};
use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::{check_dynkin, check_path, check_support, CheckReport, DynkinDual, PrimalPath};
use crate::scenario_tree::{AdaptedVector, ScenarioTree};
use crate::solver::{solve_rapid, RapidSolution};

/// Label attached to every prefix returned by [`prefix_extract`].
pub const PREFIX_LABEL: &str = "prefix-certified infinite-path approximation";

/// One horizon of a sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub horizon: usize,
    /// The model cut or extended to `horizon`.
    pub model: Model,
    pub outcome: std::result::Result<RapidSolution, VngError>,
    /// Worst `|q_t - E_t p_{t+1}|` over the row.
    pub identity_residual: f64,
}

impl SweepRow {
    pub fn solution(&self) -> Option<&RapidSolution> {
        self.outcome.as_ref().ok()
    }
}

/// Sup-norm diameters of `{x_t(N)}`, `{p_t(N)}`, `{q_t(N)}` over the
/// completed rows `N` of the trailing half of the sweep with `N >= t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diameter {
    pub t: usize,
    pub horizons: Vec<usize>,
    pub x: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
}

#[derive(Debug)]
pub struct Sweep {
    pub max_horizon: usize,
    pub rows: Vec<SweepRow>,
    /// Constants of the model at `max_horizon`.
    pub constants: GrowthConstants,
    pub diameters: Vec<Diameter>,
}

impl Sweep {
    pub fn completed(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.outcome.is_ok())
    }

    pub fn failed(&self) -> usize {
        self.rows.len() - self.completed().count()
    }
}

/// Solves every horizon `1..=max_horizon`. Solver failures mark the row and
/// the sweep goes on.
pub fn horizon_sweep(model: &Model, max_horizon: usize, tol: f64) -> Result<Sweep> {
    if max_horizon == 0 {
        return Err(VngError::InvalidParameter("max horizon must be >= 1".into()));
    }
    let models = (1..=max_horizon).map(|n| model.at_horizon(n)).collect::<Result<Vec<_>>>()?;
    let constants = models[max_horizon - 1].constants(tol)?;

    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(max_horizon);
    let mut outcomes: Vec<Option<std::result::Result<RapidSolution, VngError>>> = Vec::new();
    outcomes.resize_with(max_horizon, || None);
    thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let models = &models;
                s.spawn(move || {
                    (w..max_horizon)
                        .step_by(workers)
                        .map(|i| (i, solve_rapid(&models[i], tol)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, out) in h.join().expect("sweep worker panicked") {
                outcomes[i] = Some(out);
            }
        }
    });

    let mut rows = Vec::with_capacity(max_horizon);
    for (i, (m, out)) in models.into_iter().zip(outcomes).enumerate() {
        let outcome = out.expect("every horizon solved");
        let identity_residual = match &outcome {
            Ok(sol) => identity_residual(&m.tree, sol)?,
            Err(_) => 0.0,
        };
        rows.push(SweepRow {
            horizon: i + 1,
            model: m,
            outcome,
            identity_residual,
        });
    }
    let diameters = diameters(&rows, max_horizon);
    Ok(Sweep {
        max_horizon,
        rows,
        constants,
        diameters,
    })
}

fn identity_residual(tree: &ScenarioTree, sol: &RapidSolution) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..=tree.horizon() {
        let expected = sol.dynkin.next_expectation(tree, t)?;
        for (a, b) in expected.values().iter().zip(sol.radner.q(t).values()) {
            for (u, v) in a.iter().zip(b) {
                worst = worst.max((u - v).abs());
            }
        }
    }
    Ok(worst)
}

fn sup_distance(a: (&ScenarioTree, &AdaptedVector), b: (&ScenarioTree, &AdaptedVector)) -> f64 {
    let (ta, va) = a;
    let (tb, vb) = b;
    let mut worst: f64 = 0.0;
    for &id in ta.level(va.time()) {
        let Some(other) = tb.find(ta.label(id)) else { continue };
        for (u, v) in va.at(ta, id).iter().zip(vb.at(tb, other)) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

fn diameter_of<'a>(items: &[(&'a ScenarioTree, &'a AdaptedVector)]) -> Option<f64> {
    if items.is_empty() {
        return None;
    }
    let mut d: f64 = 0.0;
    for i in 0..items.len() {
        for j in i + 1..items.len() {
            d = d.max(sup_distance(items[i], items[j]));
        }
    }
    Some(d)
}

fn diameters(rows: &[SweepRow], max_horizon: usize) -> Vec<Diameter> {
    let start = max_horizon - max_horizon / 2;
    (0..=max_horizon)
        .map(|t| {
            let used: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.horizon >= start.max(t) && r.outcome.is_ok())
                .collect();
            let collect = |f: &dyn Fn(&RapidSolution) -> &AdaptedVector| {
                used.iter()
                    .map(|r| (&r.model.tree, f(r.solution().expect("completed"))))
                    .collect::<Vec<_>>()
            };
            Diameter {
                t,
                horizons: used.iter().map(|r| r.horizon).collect(),
                x: diameter_of(&collect(&|s| s.path.x(t))),
                p: if t == 0 { None } else { diameter_of(&collect(&|s| s.dynkin.p(t))) },
                q: diameter_of(&collect(&|s| s.radner.q(t))),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    /// `E|p_t| <= C^t`, `t = 1..N+1`
    DualMean,
    /// `|x_t| <= M^t` node-wise, `t = 0..N`
    PathNorm,
    /// `|q_t| <= C_t |p_t|` node-wise, `t = 1..N`
    DualContraction,
    /// `|p_1| <= δ⁻¹` node-wise
    FirstPrice,
}

/// One evaluated bound. `slack = (bound - value) / max(1, bound)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub family: BoundFamily,
    pub horizon: usize,
    pub t: usize,
    pub node: Option<String>,
    pub value: f64,
    pub bound: f64,
    pub slack: f64,
}

impl BoundCheck {
    fn new(family: BoundFamily, horizon: usize, t: usize, node: Option<&str>, value: f64, bound: f64) -> Self {
        Self {
            family,
            horizon,
            t,
            node: node.map(str::to_owned),
            value,
            bound,
            slack: (bound - value) / bound.max(1.0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundsReport {
    pub ok: bool,
    pub tol: f64,
    pub checks: Vec<BoundCheck>,
    /// Induction anchor `δ⁻¹ e`.
    pub q0_reference: Vec<f64>,
    pub worst_identity_residual: f64,
    /// `C^t` and `M^t` are nondecreasing wherever the per-level factors are >= 1.
    pub monotone_constants: bool,
}

impl BoundsReport {
    pub fn worst(&self) -> Option<&BoundCheck> {
        self.checks.iter().min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn worst_of(&self, family: BoundFamily) -> Option<&BoundCheck> {
        self.checks
            .iter()
            .filter(|c| c.family == family)
            .min_by(|a, b| a.slack.total_cmp(&b.slack))
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(move |c| c.slack < -self.tol)
    }
}

/// Evaluates the four bound families on every completed row against
/// `constants`, normally `sweep.constants`.
pub fn bounds_check(sweep: &Sweep, constants: &GrowthConstants, tol: f64) -> Result<BoundsReport> {
    let mut checks = Vec::new();
    let mut worst_identity: f64 = 0.0;
    for row in sweep.completed() {
        let sol = row.solution().expect("completed");
        let tree = &row.model.tree;
        let n = row.horizon;
        if constants.horizon() < n {
            return Err(VngError::LevelMismatch {
                expected: n,
                actual: constants.horizon(),
            });
        }
        worst_identity = worst_identity.max(row.identity_residual);
        for t in 1..=n + 1 {
            let mean = l1(&tree.expectation(sol.dynkin.p(t))?);
            checks.push(BoundCheck::new(BoundFamily::DualMean, n, t, None, mean, constants.c_cumulative(t)));
        }
        for t in 0..=n {
            let bound = constants.m_cumulative(t);
            for &id in tree.level(t) {
                let v = l1(sol.path.x(t).at(tree, id));
                checks.push(BoundCheck::new(BoundFamily::PathNorm, n, t, Some(tree.label(id)), v, bound));
            }
        }
        for t in 1..=n {
            for &id in tree.level(t) {
                let q = l1(sol.radner.q(t).at(tree, id));
                let bound = constants.c(t) * l1(sol.dynkin.p(t).at(tree, id));
                checks.push(BoundCheck::new(BoundFamily::DualContraction, n, t, Some(tree.label(id)), q, bound));
            }
        }
        for &id in tree.level(1) {
            let v = l1(sol.dynkin.p(1).at(tree, id));
            checks.push(BoundCheck::new(BoundFamily::FirstPrice, n, 1, Some(tree.label(id)), v, 1.0 / constants.delta));
        }
    }
    let mut monotone = true;
    for t in 1..constants.horizon() {
        if constants.c(t) >= 1.0 && constants.c_cumulative(t + 1) < constants.c_cumulative(t) {
            monotone = false;
        }
        if constants.m(t + 1) >= 1.0 && constants.m_cumulative(t + 1) < constants.m_cumulative(t) {
            monotone = false;
        }
    }
    let ok = checks.iter().all(|c| c.slack >= -tol) && worst_identity <= 1e-12;
    Ok(BoundsReport {
        ok,
        tol,
        checks,
        q0_reference: vec![1.0 / constants.delta; constants.dim],
        worst_identity_residual: worst_identity,
        monotone_constants: monotone,
    })
}

/// A truncated path and dual taken from the longest completed row.
#[derive(Clone, Debug)]
pub struct Prefix {
    pub label: &'static str,
    pub source_horizon: usize,
    pub t_cut: usize,
    pub x0: Vec<f64>,
    /// `None` when `t_cut = 0`.
    pub path: Option<PrimalPath>,
    pub dynkin: Option<DynkinDual>,
    pub report: Option<CheckReport>,
}

/// Cuts the last completed row at `t_cut` and re-verifies path, dual and
/// support on the truncated model.
pub fn prefix_extract(sweep: &Sweep, t_cut: usize, tol: f64) -> Result<Prefix> {
    let Some(row) = sweep.completed().last() else {
        return Err(VngError::Verification("no completed row".into()));
    };
    if t_cut > row.horizon {
        return Err(VngError::InvalidParameter(format!(
            "cut {t_cut} exceeds the last completed horizon {}",
            row.horizon
        )));
    }
    let mut out = Prefix {
        label: PREFIX_LABEL,
        source_horizon: row.horizon,
        t_cut,
        x0: row.model.x0.clone(),
        path: None,
        dynkin: None,
        report: None,
    };
    if t_cut == 0 {
        return Ok(out);
    }
    let sol = row.solution().expect("completed");
    let model = row.model.at_horizon(t_cut)?;
    let path = sol.path.prefix(t_cut);
    let dynkin = sol.dynkin.prefix(&row.model.tree, t_cut)?;
    let report = check_path(&model.tree, &model.cones, &path, tol)?
        .merge(check_dynkin(&model.tree, &model.cones, &dynkin, tol)?)
        .merge(check_support(&model.tree, &path, &dynkin, tol)?);
    if !report.ok {
        return Err(VngError::Verification(format!(
            "prefix at t={t_cut} fails re-verification (worst residual {:e})",
            report.worst_residual
        )));
    }
    out.path = Some(path);
    out.dynkin = Some(dynkin);
    out.report = Some(report);
    Ok(out)
}

/// Column names of [`write_csv`] for dimension `n`.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["N".into(), "t".into(), "node_id".into()];
    for prefix in ["x", "p", "q"] {
        h.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    h.extend(
        [
            "support_residual",
            "radner_support_residual",
            "identity_residual",
            "path_norm_slack",
            "dual_mean_slack",
            "dual_contraction_slack",
            "first_price_slack",
            "status",
        ]
        .map(String::from),
    );
    h
}

fn fmt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// One line per `(N, t, node)`, `t = 0..N+1`; level `N+1` carries `p_{N+1}`
/// on the time-`N` nodes. A failed horizon gets a single line.
pub fn write_csv<W: Write>(out: W, sweep: &Sweep, report: &BoundsReport) -> Result<()> {
    let n = sweep.constants.dim;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(n))?;
    let slack = |family: BoundFamily, horizon: usize, t: usize, node: Option<&str>| {
        report
            .checks
            .iter()
            .find(|c| c.family == family && c.horizon == horizon && c.t == t && c.node.as_deref() == node)
            .map(|c| c.slack)
    };
    for row in &sweep.rows {
        let h = row.horizon;
        let Some(sol) = row.solution() else {
            let mut rec = vec![h.to_string(), String::new(), String::new()];
            rec.extend(std::iter::repeat(String::new()).take(3 * n + 7));
            rec.push("failed".into());
            w.write_record(rec)?;
            continue;
        };
        let tree = &row.model.tree;
        for t in 0..=h + 1 {
            let level = t.min(h);
            let mean_slack = if t >= 1 { slack(BoundFamily::DualMean, h, t, None) } else { None };
            for &id in tree.level(level) {
                let label = tree.label(id);
                let mut rec = vec![h.to_string(), t.to_string(), label.to_owned()];
                let x = (t <= h).then(|| sol.path.x(t).at(tree, id));
                let p = (t >= 1).then(|| sol.dynkin.p(t).at(tree, id));
                let q = (t <= h).then(|| sol.radner.q(t).at(tree, id));
                for v in [x, p, q] {
                    for i in 0..n {
                        rec.push(fmt(v.map(|v| v[i])));
                    }
                }
                let support = p.map(|p| {
                    let prev = if t <= h {
                        sol.path.at(tree, tree.parent(id).expect("non-root"))
                    } else {
                        sol.path.at(tree, id)
                    };
                    (dot(p, prev) - 1.0).abs()
                });
                let radner = x.zip(q).map(|(x, q)| (dot(q, x) - 1.0).abs());
                let identity = q.map(|q| {
                    let e = sol.dynkin.next_expectation(tree, t).expect("level in range");
                    e.at(tree, id).iter().zip(q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                });
                let label = Some(label);
                let x_slack = if t <= h { slack(BoundFamily::PathNorm, h, t, label) } else { None };
                let q_slack = if (1..=h).contains(&t) { slack(BoundFamily::DualContraction, h, t, label) } else { None };
                let p1_slack = if t == 1 { slack(BoundFamily::FirstPrice, h, 1, label) } else { None };
                for v in [support, radner, identity, x_slack, mean_slack, q_slack, p1_slack] {
                    rec.push(fmt(v));
                }
                rec.push("ok".into());
                w.write_record(rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
