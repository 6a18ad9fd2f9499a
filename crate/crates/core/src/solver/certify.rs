//! Rapidity certification: one tree-wide LP for a supporting Dynkin dual.
//!
//! Unknowns are `p_t(ν) >= 0` at every non-root node and `p_{N+1}` on the
//! leaves. Support rows `p_t·x_{t-1} + s = 1` carry slacks `s >= 0`; the LP
//! minimizes `Σ s`, so the origin with `s = 1` is always feasible and the
//! optimum measures how far the path is from being supported.

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::{check_dynkin, check_support, DynkinDual, PrimalPath};
use crate::scenario_tree::{AdaptedVector, NodeId};
use crate::solver::lp::{lp_solve, lp_solve_exact, lp_solve_sparse, rational_to_f64, ConstraintKind, LinearProgram, LpStatus, Sense};

/// Largest program solved on the tableau in floating point, where pivots
/// match the exact mode; bigger trees go to the sparse backend.
const TABLEAU_ROWS: usize = 1000;

/// Extra total slack granted to floating point when selecting the canonical
/// dual.
const SLACK_ALLOWANCE: f64 = 1e-12;

/// Arithmetic used by the certification LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Arithmetic {
    #[default]
    Float,
    Exact,
}

/// Proof that no supporting dual exists. `multipliers` has one entry per row
/// of the support system (support rows first, then generator rows), in the
/// sign convention of [`LinearProgram::farkas_margin`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub min_total_slack: f64,
    /// Unmet support per node, as `(node id, time, slack)`.
    pub slack_by_node: Vec<(String, usize, f64)>,
    pub multipliers: Vec<f64>,
    /// Farkas margin of `multipliers`; positive proves infeasibility.
    pub margin: f64,
}

#[derive(Clone, Debug)]
pub enum Certification {
    Supported {
        dual: DynkinDual,
        /// Optimal total support slack.
        min_total_slack: f64,
        /// Worst residual of the independent re-check.
        residual: f64,
    },
    NotRapid(InfeasibilityCertificate),
}

impl Certification {
    pub fn is_supported(&self) -> bool {
        matches!(self, Certification::Supported { .. })
    }

    pub fn min_total_slack(&self) -> f64 {
        match self {
            Certification::Supported { min_total_slack, .. } => *min_total_slack,
            Certification::NotRapid(c) => c.min_total_slack,
        }
    }

    pub fn into_dual(self) -> Result<DynkinDual> {
        match self {
            Certification::Supported { dual, .. } => Ok(dual),
            Certification::NotRapid(c) => Err(VngError::NotRapid(Box::new(c))),
        }
    }
}

/// Variable layout: one block of `n` columns per support row.
struct Layout {
    n: usize,
    /// Block of `p_t(ν)` for every non-root node id.
    block: Vec<usize>,
    /// Block of `p_{N+1}(ν)`, indexed by leaf position.
    terminal: Vec<usize>,
    /// `(node, time)` of each block, in row order.
    rows: Vec<(NodeId, usize)>,
}

impl Layout {
    fn new(model: &Model) -> Self {
        let tree = &model.tree;
        let n = tree.horizon();
        let mut block = vec![usize::MAX; tree.num_nodes()];
        let mut rows = Vec::new();
        for t in 1..=n {
            for &id in tree.level(t) {
                block[id] = rows.len();
                rows.push((id, t));
            }
        }
        let mut terminal = Vec::with_capacity(tree.level_len(n));
        for &id in tree.level(n) {
            terminal.push(rows.len());
            rows.push((id, n + 1));
        }
        Self {
            n: model.dim(),
            block,
            terminal,
            rows,
        }
    }

    fn num_vars(&self) -> usize {
        self.rows.len() * self.n
    }

    fn col(&self, block: usize, i: usize) -> usize {
        block * self.n + i
    }
}

/// The support system `{p >= 0 : generator rows <= 0, support rows = 1}`.
fn support_system(model: &Model, path: &PrimalPath) -> Result<(LinearProgram, Layout)> {
    let tree = &model.tree;
    let horizon = tree.horizon();
    if path.horizon() != horizon {
        return Err(VngError::LevelMismatch {
            expected: horizon,
            actual: path.horizon(),
        });
    }
    let layout = Layout::new(model);
    let n = layout.n;
    let mut lp = LinearProgram::new(Sense::Feasibility, layout.num_vars());

    for (b, &(id, t)) in layout.rows.iter().enumerate() {
        let state = if t <= horizon {
            path.at(tree, tree.parent(id).expect("non-root"))
        } else {
            path.at(tree, id)
        };
        if state.iter().all(|x| *x == 0.0) {
            return Err(VngError::Unsupportable {
                node: tree.label(id).to_owned(),
                time: t,
            });
        }
        let coeffs = (0..n).filter(|&i| state[i] != 0.0).map(|i| (layout.col(b, i), state[i])).collect();
        lp.add_constraint(coeffs, ConstraintKind::Eq, 1.0);
    }

    for t in 1..=horizon {
        for (pos, &id) in tree.level(t).iter().enumerate() {
            let own = layout.block[id];
            for g in model.cone(id).generators() {
                let mut coeffs = Vec::new();
                if t < horizon {
                    for &c in tree.children(id) {
                        let pi = tree.cond_prob(c);
                        for i in 0..n {
                            if g.b[i] != 0.0 {
                                coeffs.push((layout.col(layout.block[c], i), pi * g.b[i]));
                            }
                        }
                    }
                } else {
                    for i in 0..n {
                        if g.b[i] != 0.0 {
                            coeffs.push((layout.col(layout.terminal[pos], i), g.b[i]));
                        }
                    }
                }
                for i in 0..n {
                    if g.a[i] != 0.0 {
                        coeffs.push((layout.col(own, i), -g.a[i]));
                    }
                }
                lp.add_constraint(coeffs, ConstraintKind::Le, 0.0);
            }
        }
    }
    Ok((lp, layout))
}

#[doc(hidden)]
pub fn certification_lp(model: &Model, path: &PrimalPath) -> Result<LinearProgram> {
    let (system, layout) = support_system(model, path)?;
    Ok(slack_program(&system, layout.rows.len()))
}

/// Adds one slack column per support row and the objective `min Σ s`.
fn slack_program(system: &LinearProgram, supports: usize) -> LinearProgram {
    let mut lp = system.clone();
    lp.sense = Sense::Minimize;
    for r in 0..supports {
        let s = lp.add_var(1.0, 0.0, f64::INFINITY);
        lp.constraints[r].coeffs.push((s, 1.0));
    }
    lp
}

/// Multipliers `y` of the support system maximizing `Σ_support y` subject to
/// `y <= 1` on support rows, `y <= 0` on generator rows and `A^T y <= 0`:
/// the dual of the slack program, whose optimum is the Farkas margin.
fn farkas_multipliers(system: &LinearProgram, supports: usize) -> Result<Vec<f64>> {
    let rows = system.constraints.len();
    let mut dual = LinearProgram::new(Sense::Maximize, rows);
    for r in 0..rows {
        if r < supports {
            dual.objective[r] = 1.0;
            dual.lower[r] = f64::NEG_INFINITY;
            dual.upper[r] = 1.0;
        } else {
            dual.lower[r] = f64::NEG_INFINITY;
            dual.upper[r] = 0.0;
        }
    }
    let mut columns = vec![Vec::new(); system.num_vars()];
    for (r, c) in system.constraints.iter().enumerate() {
        for &(j, a) in &c.coeffs {
            columns[j].push((r, a));
        }
    }
    for col in columns {
        if !col.is_empty() {
            dual.add_constraint(col, ConstraintKind::Le, 0.0);
        }
    }
    let rep = lp_solve_sparse(&dual);
    if !rep.is_optimal() {
        return Err(VngError::Lp(format!("certificate LP ended with status {:?}", rep.status)));
    }
    Ok(rep.primal)
}

fn dual_from_columns(model: &Model, layout: &Layout, x: &[f64]) -> Result<DynkinDual> {
    let tree = &model.tree;
    let n = layout.n;
    let horizon = tree.horizon();
    let mut levels = Vec::with_capacity(horizon + 1);
    for t in 1..=horizon {
        let values = tree
            .level(t)
            .iter()
            .map(|&id| {
                let b = layout.block[id];
                (0..n).map(|i| x[layout.col(b, i)].max(0.0)).collect()
            })
            .collect();
        levels.push(AdaptedVector::new(t, values)?);
    }
    let values = layout
        .terminal
        .iter()
        .map(|&b| (0..n).map(|i| x[layout.col(b, i)].max(0.0)).collect())
        .collect();
    levels.push(AdaptedVector::new(horizon, values)?);
    DynkinDual::new(levels)
}

fn solve_sparse(lp: &LinearProgram) -> (LpStatus, f64, Vec<f64>, Vec<f64>) {
    let rep = lp_solve_sparse(lp);
    (rep.status, rep.objective, rep.primal, Vec::new())
}

fn solve(lp: &LinearProgram, arithmetic: Arithmetic) -> (LpStatus, f64, Vec<f64>, Vec<f64>) {
    match arithmetic {
        Arithmetic::Float if lp.constraints.len() <= TABLEAU_ROWS => {
            let rep = lp_solve(lp);
            if rep.status == LpStatus::NumericalFailure {
                return solve_sparse(lp);
            }
            (rep.status, rep.objective, rep.primal, rep.duals)
        }
        Arithmetic::Float => solve_sparse(lp),
        Arithmetic::Exact => {
            let rep = lp_solve_exact(lp);
            // rounded up so that the optimum stays feasible as a cap
            let mut objective = rep.objective_f64();
            if BigRational::from_float(objective).is_some_and(|v| v < rep.objective) {
                objective = objective.next_up();
            }
            (
                rep.status,
                objective,
                rep.primal_f64(),
                rep.duals.iter().map(rational_to_f64).collect(),
            )
        }
    }
}

/// Among duals with total slack at most `slack` (plus [`SLACK_ALLOWANCE`] in
/// floating point), the one of least expected
/// price mass `Σ_t E|p_t|`. Makes the returned dual independent of the
/// pivoting path.
fn canonical_program(model: &Model, layout: &Layout, lp: &LinearProgram, slack: f64, arithmetic: Arithmetic) -> LinearProgram {
    let mut out = lp.clone();
    let s0 = layout.num_vars();
    out.objective.iter_mut().for_each(|c| *c = 0.0);
    for (b, &(id, _)) in layout.rows.iter().enumerate() {
        let p = model.tree.unconditional_prob(id);
        for i in 0..layout.n {
            out.objective[layout.col(b, i)] = p;
        }
    }
    let cap = match arithmetic {
        Arithmetic::Exact => slack,
        Arithmetic::Float => slack + SLACK_ALLOWANCE,
    };
    let coeffs = (s0..out.num_vars()).map(|j| (j, 1.0)).collect();
    out.add_constraint(coeffs, ConstraintKind::Le, cap);
    out
}

/// Searches for a Dynkin dual supporting `path`. A path is rapid iff the
/// minimal total slack is at most `tol`.
pub fn certify_rapid(model: &Model, path: &PrimalPath, tol: f64) -> Result<Certification> {
    certify_rapid_with(model, path, tol, Arithmetic::Float)
}

pub fn certify_rapid_with(model: &Model, path: &PrimalPath, tol: f64, arithmetic: Arithmetic) -> Result<Certification> {
    let (system, layout) = support_system(model, path)?;
    let supports = layout.rows.len();
    let lp = slack_program(&system, supports);

    let (status, objective, primal, duals) = solve(&lp, arithmetic);
    if status != LpStatus::Optimal {
        return Err(VngError::Lp(format!("certification LP ended with status {status:?}")));
    }

    if objective <= tol {
        let canonical = canonical_program(model, &layout, &lp, objective.max(0.0), arithmetic);
        let (status, _, best, _) = solve(&canonical, arithmetic);
        let primal = if status == LpStatus::Optimal { best } else { primal };
        let dual = dual_from_columns(model, &layout, &primal)?;
        let check_tol = tol.max(1e-9);
        let a = check_dynkin(&model.tree, &model.cones, &dual, check_tol)?;
        let b = check_support(&model.tree, path, &dual, check_tol)?;
        let rep = a.merge(b);
        if !rep.ok {
            return Err(VngError::Verification(format!(
                "certification LP returned a dual failing re-check (worst residual {:e})",
                rep.worst_residual
            )));
        }
        return Ok(Certification::Supported {
            dual,
            min_total_slack: objective.max(0.0),
            residual: rep.worst_residual,
        });
    }

    let s0 = layout.num_vars();
    let slack_by_node = layout
        .rows
        .iter()
        .enumerate()
        .filter(|(r, _)| primal[s0 + r] > tol)
        .map(|(r, &(id, t))| (model.tree.label(id).to_owned(), t, primal[s0 + r]))
        .collect();
    let duals = if duals.is_empty() { farkas_multipliers(&system, supports)? } else { duals };
    let margin = system.farkas_margin(&duals, 1e-9).unwrap_or(f64::NAN);
    Ok(Certification::NotRapid(InfeasibilityCertificate {
        min_total_slack: objective,
        slack_by_node,
        multipliers: duals,
        margin,
    }))
}

/// Re-derives the support system from `model` and `path` and checks the
/// certificate's Farkas margin independently of the solver.
pub fn verify_certificate(model: &Model, path: &PrimalPath, cert: &InfeasibilityCertificate) -> Result<f64> {
    let (system, _) = support_system(model, path)?;
    system
        .farkas_margin(&cert.multipliers, 1e-9)
        .filter(|m| *m > 0.0)
        .ok_or_else(|| VngError::Verification("multipliers do not prove infeasibility".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::{chain2, two_generator};

    fn constant_path(model: &Model, values: &[f64]) -> PrimalPath {
        PrimalPath::new(
            values
                .iter()
                .enumerate()
                .map(|(t, v)| AdaptedVector::constant(&model.tree, t, &[*v]))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn chain2_dual_is_pinned() {
        let m = chain2(2);
        let cert = certify_rapid(&m, &constant_path(&m, &[1.0, 2.0, 4.0]), 1e-7).unwrap();
        let p = cert.into_dual().unwrap();
        let expect = [1.0, 0.5, 0.25];
        for (t, e) in expect.iter().enumerate() {
            assert!((p.p(t + 1).values()[0][0] - e).abs() < 1e-12);
        }
    }

    #[test]
    fn two_generator_constant_path_is_not_rapid() {
        let m = two_generator(1);
        let path = constant_path(&m, &[1.0, 1.0]);
        match certify_rapid(&m, &path, 1e-7).unwrap() {
            Certification::NotRapid(c) => {
                assert!(c.min_total_slack > 1e-3);
                let margin = verify_certificate(&m, &path, &c).unwrap();
                assert!(margin > 0.0);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn zero_path_is_unsupportable() {
        let m = chain2(2);
        let err = certify_rapid(&m, &constant_path(&m, &[0.0, 0.0, 0.0]), 1e-7).unwrap_err();
        assert!(matches!(err, VngError::Unsupportable { .. }));
    }

    #[test]
    fn exact_mode_agrees_on_chain2() {
        let m = chain2(3);
        let path = constant_path(&m, &[1.0, 2.0, 4.0, 8.0]);
        let f = certify_rapid_with(&m, &path, 1e-7, Arithmetic::Float).unwrap().into_dual().unwrap();
        let e = certify_rapid_with(&m, &path, 1e-7, Arithmetic::Exact).unwrap().into_dual().unwrap();
        assert_eq!(e.p(4).values()[0][0], 0.125);
        for (a, b) in f.levels().iter().zip(e.levels()) {
            assert!((a.values()[0][0] - b.values()[0][0]).abs() < 1e-11);
        }
    }
}
