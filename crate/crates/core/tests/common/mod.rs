//! Shared corpus and test-side oracles. The oracles only touch raw tree
//! data (children, conditional probabilities, node values) so that they do
//! not share code with the library routines they check.

#![allow(dead_code)]

use vngale::model_io::{generate_example, load_document, ExampleKind, ExampleParams, ModelDocument};
use vngale::paths::PrimalPath;
use vngale::scenario_tree::{AdaptedVector, NodeId, ScenarioTree};
use vngale::Model;

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm1(u: &[f64]) -> f64 {
    u.iter().map(|a| a.abs()).sum()
}

/// Value of `w` at `node`, located by scanning the level.
pub fn value<'a>(tree: &ScenarioTree, w: &'a AdaptedVector, node: NodeId) -> &'a [f64] {
    let pos = tree.level(w.time()).iter().position(|&id| id == node).expect("node on level");
    &w.values()[pos]
}

/// `Σ_children π(c) f(c)` at `node`.
pub fn child_mean(tree: &ScenarioTree, node: NodeId, f: impl Fn(NodeId) -> Vec<f64>) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for &c in tree.children(node) {
        let v = f(c);
        if acc.is_empty() {
            acc = vec![0.0; v.len()];
        }
        for (a, x) in acc.iter_mut().zip(&v) {
            *a += tree.cond_prob(c) * x;
        }
    }
    acc
}

/// Unconditional probability as a product of conditional ones.
pub fn prob(tree: &ScenarioTree, mut node: NodeId) -> f64 {
    let mut p = 1.0;
    while let Some(parent) = tree.parent(node) {
        p *= tree.cond_prob(node);
        node = parent;
    }
    p
}

pub fn mean_over_level(tree: &ScenarioTree, t: usize, f: impl Fn(NodeId) -> f64) -> f64 {
    tree.level(t).iter().map(|&id| prob(tree, id) * f(id)).sum()
}

/// `E_t p_{t+1}` at a time-`t` node, with `p_{N+1}` stored on the leaves.
pub fn next_price(tree: &ScenarioTree, p: &[AdaptedVector], t: usize, node: NodeId) -> Vec<f64> {
    let n = tree.horizon();
    if t == n {
        value(tree, &p[n], node).to_vec()
    } else {
        child_mean(tree, node, |c| value(tree, &p[t], c).to_vec())
    }
}

/// Conditional growth rate `E_t(p_{t+1}·y_t) / (p_t·y_{t-1})` at each time-`t`
/// node; `None` where the denominator vanishes. `p[k]` holds `p_{k+1}`.
pub fn growth_rates(tree: &ScenarioTree, p: &[AdaptedVector], y: &PrimalPath, t: usize) -> Vec<Option<f64>> {
    tree.level(t)
        .iter()
        .map(|&id| {
            let parent = tree.parent(id).unwrap();
            let den = dot(value(tree, &p[t - 1], id), value(tree, y.x(t - 1), parent));
            let num = dot(&next_price(tree, p, t, id), value(tree, y.x(t), id));
            (den > 1e-12).then(|| num / den)
        })
        .collect()
}

/// The acceptance corpus: 100 neumann models (n <= 3, binary, N <= 4) and
/// 20 currency models.
pub fn corpus() -> Vec<(String, ModelDocument)> {
    let mut out = Vec::new();
    for seed in 0..120u64 {
        let (kind, name, params) = if seed < 100 {
            (
                ExampleKind::Neumann,
                "neumann",
                ExampleParams {
                    dim: 1 + (seed as usize % 3),
                    horizon: 1 + (seed as usize % 4),
                    ..ExampleParams::default()
                },
            )
        } else {
            (
                ExampleKind::Currency,
                "currency",
                ExampleParams {
                    dim: 2 + (seed as usize % 2),
                    horizon: 1 + (seed as usize % 4),
                    ..ExampleParams::default()
                },
            )
        };
        let doc = generate_example(kind, &params, seed).expect("example");
        out.push((format!("{name}-{seed}"), doc));
    }
    out
}

pub fn model_of(doc: &ModelDocument) -> Model {
    load_document(doc, 1e-9).expect("valid model").model
}

/// Closed-form data of the doubling chain.
pub fn chain2_closed_form(t: usize) -> (f64, f64, f64) {
    let x = 2f64.powi(t as i32);
    let p = if t >= 1 { 0.5f64.powi(t as i32 - 1) } else { f64::NAN };
    let q = 0.5f64.powi(t as i32);
    (x, p, q)
}
