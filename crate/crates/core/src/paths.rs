//! Paths, Dynkin and Radner dual paths, and their checkers.
//!
//! Every checker returns a [`CheckReport`] rather than failing: violations are
//! data, summarized by the worst residual.

use serde::{Deserialize, Serialize};

use crate::cones::{dot, RandomCone};
use crate::error::{Result, VngError};
use crate::scenario_tree::{AdaptedVector, NodeId, ScenarioTree};
use crate::solver::lp::{lp_solve, LinearProgram, LpStatus, Sense};

/// `x_0, …, x_N`, one adapted vector per level.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalPath {
    levels: Vec<AdaptedVector>,
}

impl PrimalPath {
    pub fn new(levels: Vec<AdaptedVector>) -> Result<Self> {
        for (t, v) in levels.iter().enumerate() {
            if v.time() != t {
                return Err(VngError::LevelMismatch {
                    expected: t,
                    actual: v.time(),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn x(&self, t: usize) -> &AdaptedVector {
        &self.levels[t]
    }

    pub fn levels(&self) -> &[AdaptedVector] {
        &self.levels
    }

    pub fn at(&self, tree: &ScenarioTree, node: NodeId) -> &[f64] {
        self.levels[tree.time(node)].at(tree, node)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            levels: self.levels.iter().map(|v| v.scaled(factor)).collect(),
        }
    }

    /// Keeps `x_0, …, x_t`.
    pub fn prefix(&self, t: usize) -> Self {
        Self {
            levels: self.levels[..=t].to_vec(),
        }
    }
}

/// `p_1, …, p_{N+1}`. The terminal price `p_{N+1}` is attached to time-`N`
/// nodes, an `F_N`-measurable representative.
#[derive(Clone, Debug, PartialEq)]
pub struct DynkinDual {
    levels: Vec<AdaptedVector>,
}

impl DynkinDual {
    /// `levels[k]` holds `p_{k+1}`; the last entry lives on the final level.
    pub fn new(levels: Vec<AdaptedVector>) -> Result<Self> {
        let n = levels.len().saturating_sub(1);
        for (k, v) in levels.iter().enumerate() {
            let expected = (k + 1).min(n);
            if v.time() != expected {
                return Err(VngError::LevelMismatch {
                    expected,
                    actual: v.time(),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// `p_t` for `1 <= t <= N + 1`.
    pub fn p(&self, t: usize) -> &AdaptedVector {
        &self.levels[t - 1]
    }

    pub fn levels(&self) -> &[AdaptedVector] {
        &self.levels
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            levels: self.levels.iter().map(|v| v.scaled(factor)).collect(),
        }
    }

    /// `E_t p_{t+1}` on level `t`, for `0 <= t <= N`.
    pub fn next_expectation(&self, tree: &ScenarioTree, t: usize) -> Result<AdaptedVector> {
        let n = self.horizon();
        if t == n {
            Ok(self.p(n + 1).clone())
        } else {
            tree.cond_expectation(self.p(t + 1), t)
        }
    }

    /// Truncates to `p_1, …, p_{t+1}` with `p_{t+1}` re-attached to level `t`
    /// as `E_t p_{t+1}`.
    pub fn prefix(&self, tree: &ScenarioTree, t: usize) -> Result<Self> {
        let mut levels: Vec<AdaptedVector> = self.levels[..t].to_vec();
        levels.push(self.next_expectation(tree, t)?);
        Self::new(levels)
    }
}

/// `q_0, …, q_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadnerDual {
    levels: Vec<AdaptedVector>,
}

impl RadnerDual {
    pub fn new(levels: Vec<AdaptedVector>) -> Result<Self> {
        for (t, v) in levels.iter().enumerate() {
            if v.time() != t {
                return Err(VngError::LevelMismatch {
                    expected: t,
                    actual: v.time(),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn q(&self, t: usize) -> &AdaptedVector {
        &self.levels[t]
    }

    pub fn levels(&self) -> &[AdaptedVector] {
        &self.levels
    }
}

/// Signed corrections `g_1, …, g_N` with `E_{t-1} g_t = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Multipliers {
    levels: Vec<AdaptedVector>,
}

impl Multipliers {
    pub fn new(levels: Vec<AdaptedVector>) -> Result<Self> {
        for (k, v) in levels.iter().enumerate() {
            if v.time() != k + 1 {
                return Err(VngError::LevelMismatch {
                    expected: k + 1,
                    actual: v.time(),
                });
            }
        }
        Ok(Self { levels })
    }

    pub fn g(&self, t: usize) -> &AdaptedVector {
        &self.levels[t - 1]
    }

    pub fn levels(&self) -> &[AdaptedVector] {
        &self.levels
    }

    /// Worst `|E_{t-1} g_t|` over all nodes and times.
    pub fn worst_conditional_mean(&self, tree: &ScenarioTree) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (k, g) in self.levels.iter().enumerate() {
            let m = tree.cond_expectation(g, k)?;
            for v in m.values() {
                for x in v {
                    worst = worst.max(x.abs());
                }
            }
        }
        Ok(worst)
    }

    pub fn is_identically_zero(&self) -> bool {
        self.levels
            .iter()
            .all(|g| g.values().iter().flatten().all(|x| *x == 0.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    Negative,
    PathMembership,
    DualCone,
    Support,
    UnsupportableNode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: String,
    pub time: usize,
    pub kind: ViolationKind,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub ok: bool,
    pub checked: usize,
    pub worst_residual: f64,
    pub violations: Vec<Violation>,
}

impl CheckReport {
    fn collect(entries: impl IntoIterator<Item = (Violation, bool)>) -> Self {
        let mut checked = 0;
        let mut worst: f64 = 0.0;
        let mut violations = Vec::new();
        for (v, bad) in entries {
            checked += 1;
            worst = worst.max(v.residual);
            if bad {
                violations.push(v);
            }
        }
        Self {
            ok: violations.is_empty(),
            checked,
            worst_residual: worst,
            violations,
        }
    }

    pub fn merge(mut self, other: CheckReport) -> Self {
        self.ok &= other.ok;
        self.checked += other.checked;
        self.worst_residual = self.worst_residual.max(other.worst_residual);
        self.violations.extend(other.violations);
        self
    }
}

fn negativity(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |w, x| w.max(-x))
}

/// `(x_{t-1}, x_t) ∈ G_t` at every non-root node, plus non-negativity.
pub fn check_path(tree: &ScenarioTree, cones: &RandomCone, path: &PrimalPath, tol: f64) -> Result<CheckReport> {
    if path.horizon() != tree.horizon() {
        return Err(VngError::LevelMismatch {
            expected: tree.horizon(),
            actual: path.horizon(),
        });
    }
    let mut entries = Vec::new();
    let root = tree.root();
    let neg = negativity(path.at(tree, root));
    entries.push((violation(tree, root, ViolationKind::Negative, neg), neg > tol));
    for t in 1..=tree.horizon() {
        for &id in tree.level(t) {
            let parent = tree.parent(id).expect("non-root");
            let a = path.at(tree, parent);
            let b = path.at(tree, id);
            let neg = negativity(b);
            if neg > tol {
                entries.push((violation(tree, id, ViolationKind::Negative, neg), true));
            }
            let r = cones.at(id).primal_residual(a, b)?;
            entries.push((violation(tree, id, ViolationKind::PathMembership, r), r > tol));
        }
    }
    Ok(CheckReport::collect(entries))
}

/// `(p_t, E_t p_{t+1}) ∈ G_t^×` at every time-`t` node, `t = 1..N`.
pub fn check_dynkin(tree: &ScenarioTree, cones: &RandomCone, dual: &DynkinDual, tol: f64) -> Result<CheckReport> {
    if dual.horizon() != tree.horizon() {
        return Err(VngError::LevelMismatch {
            expected: tree.horizon(),
            actual: dual.horizon(),
        });
    }
    let mut entries = Vec::new();
    for t in 1..=tree.horizon() {
        let next = dual.next_expectation(tree, t)?;
        for &id in tree.level(t) {
            let c = dual.p(t).at(tree, id);
            let d = next.at(tree, id);
            let r = cones.at(id).dual_violation(c, d)?;
            entries.push((violation(tree, id, ViolationKind::DualCone, r), r > tol));
        }
    }
    let n = tree.horizon();
    for &id in tree.level(n) {
        let r = negativity(dual.p(n + 1).at(tree, id));
        entries.push((violation(tree, id, ViolationKind::Negative, r), r > tol));
    }
    Ok(CheckReport::collect(entries))
}

/// Dynkin support `p_t·x_{t-1} = 1` for `t = 1..N+1`.
pub fn check_support(tree: &ScenarioTree, path: &PrimalPath, dual: &DynkinDual, tol: f64) -> Result<CheckReport> {
    let n = tree.horizon();
    if path.horizon() != n || dual.horizon() != n {
        return Err(VngError::LevelMismatch {
            expected: n,
            actual: path.horizon().min(dual.horizon()),
        });
    }
    let mut entries = Vec::new();
    for t in 1..=n + 1 {
        let level = t.min(n);
        for &id in tree.level(level) {
            let prev = if t <= n {
                path.at(tree, tree.parent(id).expect("non-root"))
            } else {
                path.at(tree, id)
            };
            entries.push(support_entry(tree, id, t, dual.p(t).at(tree, id), prev, tol));
        }
    }
    Ok(CheckReport::collect(entries))
}

/// Radner support `q_t·x_t = 1` for `t = 0..N`.
pub fn check_radner_support(tree: &ScenarioTree, path: &PrimalPath, dual: &RadnerDual, tol: f64) -> Result<CheckReport> {
    let n = tree.horizon();
    if path.horizon() != n || dual.horizon() != n {
        return Err(VngError::LevelMismatch {
            expected: n,
            actual: path.horizon().min(dual.horizon()),
        });
    }
    let mut entries = Vec::new();
    for t in 0..=n {
        for &id in tree.level(t) {
            entries.push(support_entry(tree, id, t, dual.q(t).at(tree, id), path.at(tree, id), tol));
        }
    }
    Ok(CheckReport::collect(entries))
}

fn support_entry(tree: &ScenarioTree, id: NodeId, t: usize, price: &[f64], state: &[f64], tol: f64) -> (Violation, bool) {
    if state.iter().all(|x| *x == 0.0) {
        let v = Violation {
            node: tree.label(id).to_owned(),
            time: t,
            kind: ViolationKind::UnsupportableNode,
            residual: 1.0,
        };
        return (v, true);
    }
    let r = (dot(price, state) - 1.0).abs();
    let v = Violation {
        node: tree.label(id).to_owned(),
        time: t,
        kind: ViolationKind::Support,
        residual: r,
    };
    (v, r > tol)
}

fn violation(tree: &ScenarioTree, id: NodeId, kind: ViolationKind, residual: f64) -> Violation {
    Violation {
        node: tree.label(id).to_owned(),
        time: tree.time(id),
        kind,
        residual,
    }
}

/// Conditional growth rates `E_t(p_{t+1} y_t) / (p_t y_{t-1})` at the
/// time-`t` nodes. Nodes with a zero denominator are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthRates {
    pub time: usize,
    pub rates: Vec<Option<f64>>,
}

impl GrowthRates {
    pub fn max(&self) -> Option<f64> {
        self.rates.iter().flatten().copied().reduce(f64::max)
    }

    pub fn excluded(&self) -> usize {
        self.rates.iter().filter(|r| r.is_none()).count()
    }
}

pub fn growth_rate(tree: &ScenarioTree, dual: &DynkinDual, y: &PrimalPath, t: usize) -> Result<GrowthRates> {
    let n = tree.horizon();
    if t == 0 || t > n {
        return Err(VngError::LevelMismatch {
            expected: 1,
            actual: t,
        });
    }
    let next = dual.next_expectation(tree, t)?;
    let rates = tree
        .level(t)
        .iter()
        .map(|&id| {
            let parent = tree.parent(id).expect("non-root");
            let den = dot(dual.p(t).at(tree, id), y.at(tree, parent));
            if den <= 0.0 {
                None
            } else {
                // y_t is F_t-measurable, so E_t(p_{t+1}·y_t) = (E_t p_{t+1})·y_t
                Some(dot(next.at(tree, id), y.at(tree, id)) / den)
            }
        })
        .collect();
    Ok(GrowthRates { time: t, rates })
}

/// Worst value of `E_{t-1}(q_t·v) - q_{t-1}·u` over time-`(t-1)` nodes for a
/// selection `(u, v) ∈ Z_t`. Non-positive when the Radner inequality holds.
pub fn radner_violation(tree: &ScenarioTree, q: &RadnerDual, t: usize, u: &AdaptedVector, v: &AdaptedVector) -> Result<f64> {
    if u.time() + 1 != t || v.time() != t {
        return Err(VngError::LevelMismatch {
            expected: t,
            actual: v.time(),
        });
    }
    let mut worst = f64::NEG_INFINITY;
    for &mu in tree.level(t - 1) {
        let mut lhs = 0.0;
        for &nu in tree.children(mu) {
            lhs += tree.cond_prob(nu) * dot(q.q(t).at(tree, nu), v.at(tree, nu));
        }
        worst = worst.max(lhs - dot(q.q(t - 1).at(tree, mu), u.at(tree, mu)));
    }
    Ok(worst)
}

/// Per-node objective for [`scenariowise_optimality`].
pub enum NodeObjective {
    Linear(Vec<f64>),
    Concave(Box<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl NodeObjective {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            NodeObjective::Linear(c) => dot(c, x),
            NodeObjective::Concave(f) => f(x),
        }
    }
}

/// Per-node feasible set: an explicit finite list, or the polytope
/// `{x >= 0 : A x <= b}` (linear objectives only).
pub enum FeasibleSet {
    Finite(Vec<Vec<f64>>),
    Polytope { rows: Vec<Vec<f64>>, rhs: Vec<f64> },
}

pub struct NodeProblem {
    pub objective: NodeObjective,
    pub feasible: FeasibleSet,
    pub candidate: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOptimality {
    /// The candidate attains the maximum at every node.
    pub nodewise: bool,
    /// No adapted selection has a larger expected objective.
    pub in_expectation: bool,
    /// `max E f(ξ) - E f(candidate)` over adapted selections.
    pub expectation_gap: f64,
    pub counterexample: Option<String>,
}

/// Compares node-wise maximality with maximality in expectation for a
/// candidate selection on the nodes of level `t`.
pub fn scenariowise_optimality(
    tree: &ScenarioTree,
    t: usize,
    problems: &[NodeProblem],
    tol: f64,
) -> Result<ScenarioOptimality> {
    if problems.len() != tree.level_len(t) {
        return Err(VngError::Dimension {
            expected: tree.level_len(t),
            actual: problems.len(),
        });
    }
    let mut nodewise = true;
    let mut counterexample = None;
    let mut best_expected = 0.0;
    let mut candidate_expected = 0.0;
    for (&id, prob) in tree.level(t).iter().zip(problems) {
        let p = tree.unconditional_prob(id);
        let best = node_maximum(prob)?;
        let cand = prob.objective.eval(&prob.candidate);
        best_expected += p * best;
        candidate_expected += p * cand;
        if best - cand > tol && nodewise {
            nodewise = false;
            counterexample = Some(tree.label(id).to_owned());
        }
    }
    let gap = best_expected - candidate_expected;
    Ok(ScenarioOptimality {
        nodewise,
        in_expectation: gap <= tol,
        expectation_gap: gap,
        counterexample,
    })
}

fn node_maximum(prob: &NodeProblem) -> Result<f64> {
    match (&prob.feasible, &prob.objective) {
        (FeasibleSet::Finite(points), obj) => points
            .iter()
            .map(|x| obj.eval(x))
            .reduce(f64::max)
            .ok_or_else(|| VngError::InvalidParameter("empty feasible set".into())),
        (FeasibleSet::Polytope { rows, rhs }, NodeObjective::Linear(c)) => {
            let mut lp = LinearProgram::new(Sense::Maximize, c.len());
            lp.objective = c.clone();
            for (row, &b) in rows.iter().zip(rhs) {
                let coeffs = row.iter().enumerate().filter(|e| *e.1 != 0.0).map(|(j, &a)| (j, a)).collect();
                lp.add_constraint(coeffs, crate::solver::lp::ConstraintKind::Le, b);
            }
            let rep = lp_solve(&lp);
            match rep.status {
                LpStatus::Optimal => Ok(rep.objective),
                s => Err(VngError::Lp(format!("node maximum: {s:?}"))),
            }
        }
        (FeasibleSet::Polytope { .. }, NodeObjective::Concave(_)) => Err(VngError::InvalidParameter(
            "polytope feasible sets require a linear objective".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::{chain2, two_generator};
    use crate::scenario_tree::ScenarioNode;

    fn powers(tree: &ScenarioTree, base: f64, from: i32, times: std::ops::RangeInclusive<usize>) -> Vec<AdaptedVector> {
        times
            .map(|t| AdaptedVector::constant(tree, t, &[base.powi(t as i32 + from)]))
            .collect()
    }

    fn chain2_path(m: &crate::model::Model, x: &[f64]) -> PrimalPath {
        PrimalPath::new(
            x.iter()
                .enumerate()
                .map(|(t, v)| AdaptedVector::constant(&m.tree, t, &[*v]))
                .collect(),
        )
        .unwrap()
    }

    fn chain2_dual(m: &crate::model::Model, scale: f64) -> DynkinDual {
        let n = m.horizon();
        let mut levels: Vec<AdaptedVector> = (1..=n)
            .map(|t| AdaptedVector::constant(&m.tree, t, &[scale * 0.5f64.powi(t as i32 - 1)]))
            .collect();
        levels.push(AdaptedVector::constant(&m.tree, n, &[scale * 0.5f64.powi(n as i32)]));
        DynkinDual::new(levels).unwrap()
    }

    #[test]
    fn check_path_examples() {
        let m = chain2(2);
        let ok = check_path(&m.tree, &m.cones, &chain2_path(&m, &[1.0, 2.0, 4.0]), 1e-9).unwrap();
        assert!(ok.ok);
        let bad = check_path(&m.tree, &m.cones, &chain2_path(&m, &[1.0, 3.0, 9.0]), 1e-9).unwrap();
        assert!(!bad.ok);
        assert_eq!(bad.violations[0].time, 1);
        let zero = check_path(&m.tree, &m.cones, &chain2_path(&m, &[0.0, 0.0, 0.0]), 1e-9).unwrap();
        assert!(zero.ok);
    }

    #[test]
    fn check_dynkin_examples() {
        let m = chain2(3);
        let rep = check_dynkin(&m.tree, &m.cones, &chain2_dual(&m, 1.0), 1e-9).unwrap();
        assert!(rep.ok);
        assert!(rep.worst_residual <= 1e-15);
        let half = check_dynkin(&m.tree, &m.cones, &chain2_dual(&m, 0.5), 1e-9).unwrap();
        assert!(half.ok);
        let ones = DynkinDual::new(powers(&m.tree, 1.0, 0, 1..=3).into_iter().chain([AdaptedVector::constant(&m.tree, 3, &[1.0])]).collect()).unwrap();
        let rep = check_dynkin(&m.tree, &m.cones, &ones, 1e-9).unwrap();
        assert_eq!(rep.violations.len(), 3);
    }

    #[test]
    fn check_support_examples() {
        let m = chain2(2);
        let x = chain2_path(&m, &[1.0, 2.0, 4.0]);
        let rep = check_support(&m.tree, &x, &chain2_dual(&m, 1.0), 1e-9).unwrap();
        assert!(rep.ok);
        assert_eq!(rep.worst_residual, 0.0);
        let rep = check_support(&m.tree, &x, &chain2_dual(&m, 0.5), 1e-9).unwrap();
        assert!(!rep.ok);
        assert!((rep.worst_residual - 0.5).abs() < 1e-15);

        let q = RadnerDual::new(powers(&m.tree, 0.5, 0, 0..=2)).unwrap();
        assert!(check_radner_support(&m.tree, &x, &q, 1e-9).unwrap().ok);
    }

    #[test]
    fn unsupportable_zero_state() {
        let m = chain2(1);
        let x = chain2_path(&m, &[0.0, 0.0]);
        let rep = check_support(&m.tree, &x, &chain2_dual(&m, 1.0), 1e-9).unwrap();
        assert!(rep
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::UnsupportableNode));
    }

    #[test]
    fn growth_rates() {
        let m = chain2(3);
        let p = chain2_dual(&m, 1.0);
        let x = chain2_path(&m, &[1.0, 2.0, 4.0, 8.0]);
        for t in 1..=3 {
            let r = growth_rate(&m.tree, &p, &x, t).unwrap();
            assert!((r.max().unwrap() - 1.0).abs() < 1e-15);
        }
        let y = x.scaled(0.9);
        for t in 1..=3 {
            let r = growth_rate(&m.tree, &p, &y, t).unwrap();
            assert!((r.max().unwrap() - 1.0).abs() < 1e-15);
        }

        // two generators {(1,2), (1,1)}: the doubling path is supported by
        // p_t = 2^{-(t-1)}; a path stuck on (1,1) grows at rate 1/2
        let m2 = two_generator(2);
        let y = chain2_path(&m2, &[1.0, 1.0, 1.0]);
        let p = chain2_dual(&m2, 1.0);
        for t in 1..=2 {
            let r = growth_rate(&m2.tree, &p, &y, t).unwrap();
            assert!((r.max().unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn growth_rate_excludes_zero_denominator() {
        let m = chain2(1);
        let p = chain2_dual(&m, 1.0);
        let y = chain2_path(&m, &[0.0, 0.0]);
        let r = growth_rate(&m.tree, &p, &y, 1).unwrap();
        assert_eq!(r.excluded(), 1);
    }

    fn two_leaf_tree() -> ScenarioTree {
        ScenarioTree::build(
            &[
                ScenarioNode::new("r", 0, None, 1.0),
                ScenarioNode::new("a", 1, Some("r"), 0.5),
                ScenarioNode::new("b", 1, Some("r"), 0.5),
            ],
            1,
        )
        .unwrap()
    }

    #[test]
    fn scenariowise_single_node_segment() {
        let tree = ScenarioTree::build(&[ScenarioNode::new("r", 0, None, 1.0), ScenarioNode::new("a", 1, Some("r"), 1.0)], 1).unwrap();
        let probs = vec![NodeProblem {
            objective: NodeObjective::Linear(vec![1.0]),
            feasible: FeasibleSet::Polytope {
                rows: vec![vec![1.0]],
                rhs: vec![1.0],
            },
            candidate: vec![1.0],
        }];
        let r = scenariowise_optimality(&tree, 1, &probs, 1e-12).unwrap();
        assert!(r.nodewise && r.in_expectation);
    }

    #[test]
    fn scenariowise_suboptimal_node_is_found() {
        let tree = two_leaf_tree();
        let seg = || FeasibleSet::Finite(vec![vec![0.0], vec![0.5], vec![1.0]]);
        let probs = vec![
            NodeProblem {
                objective: NodeObjective::Concave(Box::new(|x| -(x[0] - 1.0).powi(2))),
                feasible: seg(),
                candidate: vec![1.0],
            },
            NodeProblem {
                objective: NodeObjective::Linear(vec![1.0]),
                feasible: seg(),
                candidate: vec![0.5],
            },
        ];
        let r = scenariowise_optimality(&tree, 1, &probs, 1e-12).unwrap();
        assert!(!r.nodewise);
        assert!(!r.in_expectation);
        assert_eq!(r.counterexample.as_deref(), Some("b"));
        assert!((r.expectation_gap - 0.25).abs() < 1e-15);
    }

    #[test]
    fn scenariowise_chain2_dual_inequality() {
        // f(λ) = λ (E_t p_{t+1}·2 - p_t·1) over λ ∈ [0, 1]: identically zero
        // for the supporting dual, so the path step λ = 1 is maximal
        let m = chain2(2);
        let p = chain2_dual(&m, 1.0);
        for t in 1..=2 {
            let next = p.next_expectation(&m.tree, t).unwrap();
            let id = m.tree.level(t)[0];
            let coef = 2.0 * next.at(&m.tree, id)[0] - p.p(t).at(&m.tree, id)[0];
            let probs = vec![NodeProblem {
                objective: NodeObjective::Linear(vec![coef]),
                feasible: FeasibleSet::Polytope {
                    rows: vec![vec![1.0]],
                    rhs: vec![1.0],
                },
                candidate: vec![1.0],
            }];
            let r = scenariowise_optimality(&m.tree, t, &probs, 1e-12).unwrap();
            assert!(r.nodewise && r.in_expectation);
        }
    }

    #[test]
    fn rapid_pair_scaling() {
        let m = chain2(3);
        let x = chain2_path(&m, &[1.0, 2.0, 4.0, 8.0]);
        let p = chain2_dual(&m, 1.0);
        for lambda in [0.1, 3.0, 17.5] {
            let xs = x.scaled(lambda);
            let ps = p.scaled(1.0 / lambda);
            assert!(check_path(&m.tree, &m.cones, &xs, 1e-9).unwrap().ok);
            assert!(check_dynkin(&m.tree, &m.cones, &ps, 1e-9).unwrap().ok);
            assert!(check_support(&m.tree, &xs, &ps, 1e-9).unwrap().ok);
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let m = chain2(2);
        let x = chain2_path(&m, &[1.0, 3.0, 9.0]);
        let a = check_path(&m.tree, &m.cones, &x, 1e-9).unwrap();
        let b = check_path(&m.tree, &m.cones, &x, 1e-9).unwrap();
        assert_eq!(a, b);
    }
}
