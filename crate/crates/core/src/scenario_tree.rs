//! Finite filtered probability spaces encoded as event trees.
//!
//! A time-`t` node is an atom of the σ-algebra `F_t`. Every adapted quantity
//! therefore carries exactly one value per node of its level, which makes
//! measurability structural: there is no way to build a vector that depends
//! on information not yet revealed.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VngError};

/// Tolerance on sibling probability sums.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Index of a node inside its [`ScenarioTree`].
pub type NodeId = usize;

/// Input record for [`ScenarioTree::build`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioNode {
    pub id: String,
    pub time: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub cond_prob: f64,
}

impl ScenarioNode {
    pub fn new(id: impl Into<String>, time: usize, parent: Option<&str>, cond_prob: f64) -> Self {
        Self {
            id: id.into(),
            time,
            parent: parent.map(str::to_owned),
            cond_prob,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    label: String,
    time: usize,
    parent: Option<NodeId>,
    cond_prob: f64,
    children: Vec<NodeId>,
    // position inside `levels[time]`
    pos: usize,
}

/// Validated event tree with per-edge conditional probabilities.
#[derive(Clone, Debug)]
pub struct ScenarioTree {
    horizon: usize,
    dim: usize,
    nodes: Vec<Node>,
    levels: Vec<Vec<NodeId>>,
    index: HashMap<String, NodeId>,
}

impl ScenarioTree {
    /// Validates the records and assembles the tree. Nodes keep their input
    /// order within each level.
    pub fn build(records: &[ScenarioNode], dim: usize) -> Result<Self> {
        if records.is_empty() {
            return Err(VngError::Tree {
                node: String::new(),
                message: "no node records".into(),
            });
        }
        if dim == 0 {
            return Err(VngError::InvalidParameter("state dimension must be >= 1".into()));
        }

        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if index.insert(r.id.clone(), i).is_some() {
                return Err(tree_err(&r.id, "duplicate id"));
            }
        }

        let roots: Vec<&ScenarioNode> = records.iter().filter(|r| r.parent.is_none()).collect();
        match roots.as_slice() {
            [] => return Err(tree_err("", "no root node")),
            [root] => {
                if root.time != 0 {
                    return Err(tree_err(&root.id, "root must live at time 0"));
                }
            }
            [_, second, ..] => return Err(tree_err(&second.id, "more than one root")),
        }

        let horizon = records.iter().map(|r| r.time).max().unwrap_or(0);
        let mut nodes: Vec<Node> = Vec::with_capacity(records.len());
        for r in records {
            if !(r.cond_prob > 0.0 && r.cond_prob <= 1.0) {
                return Err(tree_err(
                    &r.id,
                    &format!("conditional probability {} outside (0, 1]", r.cond_prob),
                ));
            }
            let parent = match &r.parent {
                None => None,
                Some(p) => {
                    let pid = *index
                        .get(p)
                        .ok_or_else(|| tree_err(&r.id, &format!("orphan node: parent `{p}` not found")))?;
                    let pt = records[pid].time;
                    if pt + 1 != r.time {
                        return Err(tree_err(
                            &r.id,
                            &format!("time gap: node at t={} has parent at t={pt}", r.time),
                        ));
                    }
                    Some(pid)
                }
            };
            nodes.push(Node {
                label: r.id.clone(),
                time: r.time,
                parent,
                cond_prob: r.cond_prob,
                children: Vec::new(),
                pos: 0,
            });
        }
        if nodes.iter().any(|n| n.parent.is_none() && n.cond_prob != 1.0) {
            return Err(tree_err(&roots[0].id, "root must have conditional probability 1"));
        }

        let mut levels = vec![Vec::new(); horizon + 1];
        for id in 0..nodes.len() {
            let t = nodes[id].time;
            nodes[id].pos = levels[t].len();
            levels[t].push(id);
            if let Some(p) = nodes[id].parent {
                nodes[p].children.push(id);
            }
        }
        for (t, level) in levels.iter().enumerate() {
            if level.is_empty() {
                return Err(tree_err("", &format!("time gap: level {t} is empty")));
            }
        }
        for node in &nodes {
            if node.children.is_empty() {
                if node.time != horizon {
                    return Err(tree_err(
                        &node.label,
                        &format!("leaf at t={} before horizon {horizon}", node.time),
                    ));
                }
                continue;
            }
            let sum: f64 = node.children.iter().map(|&c| nodes[c].cond_prob).sum();
            if (sum - 1.0).abs() > PROB_SUM_TOL {
                return Err(tree_err(
                    &node.label,
                    &format!("sibling probabilities sum {sum}"),
                ));
            }
        }
        if horizon == 0 {
            return Err(tree_err(&roots[0].id, "horizon must be at least 1"));
        }

        Ok(Self {
            horizon,
            dim,
            nodes,
            levels,
            index,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn root(&self) -> NodeId {
        self.levels[0][0]
    }

    pub fn level(&self, t: usize) -> &[NodeId] {
        &self.levels[t]
    }

    pub fn level_len(&self, t: usize) -> usize {
        self.levels[t].len()
    }

    pub fn time(&self, node: NodeId) -> usize {
        self.nodes[node].time
    }

    pub fn label(&self, node: NodeId) -> &str {
        &self.nodes[node].label
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.nodes[node].parent
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.nodes[node].children
    }

    pub fn cond_prob(&self, node: NodeId) -> f64 {
        self.nodes[node].cond_prob
    }

    /// Position of `node` within its level; this is the slot used by
    /// [`AdaptedVector`].
    pub fn position(&self, node: NodeId) -> usize {
        self.nodes[node].pos
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn is_deterministic(&self) -> bool {
        self.nodes.iter().all(|n| n.children.len() <= 1)
    }

    /// Product of conditional probabilities along the root path.
    pub fn unconditional_prob(&self, node: NodeId) -> f64 {
        let mut p = 1.0;
        let mut cur = Some(node);
        while let Some(id) = cur {
            p *= self.nodes[id].cond_prob;
            cur = self.nodes[id].parent;
        }
        p
    }

    /// Records that rebuild this tree, in level order.
    pub fn records(&self) -> Vec<ScenarioNode> {
        self.levels
            .iter()
            .flatten()
            .map(|&id| {
                let n = &self.nodes[id];
                ScenarioNode {
                    id: n.label.clone(),
                    time: n.time,
                    parent: n.parent.map(|p| self.nodes[p].label.clone()),
                    cond_prob: n.cond_prob,
                }
            })
            .collect()
    }

    /// Conditional expectation `E_t w` of a level-`t+1` vector.
    pub fn cond_expectation(&self, w: &AdaptedVector, t: usize) -> Result<AdaptedVector> {
        if t >= self.horizon {
            return Err(VngError::LevelMismatch {
                expected: self.horizon - 1,
                actual: t,
            });
        }
        self.check_level(w, t + 1)?;
        let width = w.width();
        let values = self.levels[t]
            .iter()
            .map(|&id| {
                let mut acc = vec![0.0; width];
                for &c in &self.nodes[id].children {
                    let pc = self.nodes[c].cond_prob;
                    for (a, v) in acc.iter_mut().zip(&w.values[self.nodes[c].pos]) {
                        *a += pc * v;
                    }
                }
                acc
            })
            .collect();
        Ok(AdaptedVector { time: t, values })
    }

    /// Unconditional expectation `E w` of a level-`t` vector.
    pub fn expectation(&self, w: &AdaptedVector) -> Result<Vec<f64>> {
        if w.time > self.horizon {
            return Err(VngError::LevelMismatch {
                expected: self.horizon,
                actual: w.time,
            });
        }
        self.check_level(w, w.time)?;
        let mut acc = vec![0.0; w.width()];
        for (&id, v) in self.levels[w.time].iter().zip(&w.values) {
            let p = self.unconditional_prob(id);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += p * x;
            }
        }
        Ok(acc)
    }

    fn check_level(&self, w: &AdaptedVector, t: usize) -> Result<()> {
        if w.time != t {
            return Err(VngError::LevelMismatch {
                expected: t,
                actual: w.time,
            });
        }
        if w.values.len() != self.levels[t].len() {
            return Err(VngError::Tree {
                node: String::new(),
                message: format!(
                    "adapted vector at t={t} has {} values for {} nodes",
                    w.values.len(),
                    self.levels[t].len()
                ),
            });
        }
        Ok(())
    }
}

fn tree_err(node: &str, message: &str) -> VngError {
    VngError::Tree {
        node: node.to_owned(),
        message: message.to_owned(),
    }
}

/// One vector per node of a single level.
///
/// Entries may be signed: non-negativity is a property of paths and duals,
/// enforced by their consumers.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedVector {
    time: usize,
    values: Vec<Vec<f64>>,
}

impl AdaptedVector {
    pub fn new(time: usize, values: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(width) = values.first().map(Vec::len) {
            for v in &values {
                if v.len() != width {
                    return Err(VngError::Dimension {
                        expected: width,
                        actual: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(VngError::InvalidParameter(format!(
                        "non-finite entry in adapted vector at t={time}"
                    )));
                }
            }
        }
        Ok(Self { time, values })
    }

    /// The same vector at every node of level `t`.
    pub fn constant(tree: &ScenarioTree, t: usize, value: &[f64]) -> Self {
        Self {
            time: t,
            values: vec![value.to_vec(); tree.level_len(t)],
        }
    }

    pub fn zeros(tree: &ScenarioTree, t: usize, width: usize) -> Self {
        Self {
            time: t,
            values: vec![vec![0.0; width]; tree.level_len(t)],
        }
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn width(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Value at `node`, which must live on this vector's level.
    pub fn at(&self, tree: &ScenarioTree, node: NodeId) -> &[f64] {
        debug_assert_eq!(tree.time(node), self.time);
        &self.values[tree.position(node)]
    }

    pub fn set(&mut self, tree: &ScenarioTree, node: NodeId, value: Vec<f64>) {
        debug_assert_eq!(tree.time(node), self.time);
        self.values[tree.position(node)] = value;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            time: self.time,
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|x| x * factor).collect())
                .collect(),
        }
    }

    /// `alpha·self + beta·other`, element-wise.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Result<Self> {
        if self.time != other.time {
            return Err(VngError::LevelMismatch {
                expected: self.time,
                actual: other.time,
            });
        }
        Ok(Self {
            time: self.time,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(u, w)| u.iter().zip(w).map(|(a, b)| alpha * a + beta * b).collect())
                .collect(),
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(u, w)| u.iter().zip(w).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}
