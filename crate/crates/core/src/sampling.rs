//! Random feasible paths, random graph selections, and exhaustive vertex
//! paths for small models.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::cones::{ConeSpec, Generator};
use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::PrimalPath;
use crate::scenario_tree::AdaptedVector;
use crate::solver::lp::{lp_solve, ConstraintKind, LinearProgram, Sense};

/// Random weights `λ >= 0` with `Σ λ_k a_k = x`: a random convex
/// combination of LP vertices under random objectives.
pub fn random_weights<R: Rng>(cone: &ConeSpec, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let gens = cone.generators();
    let k = gens.len();
    if x.iter().all(|v| *v == 0.0) {
        return Ok(vec![0.0; k]);
    }
    let draws = 3;
    let mut mix = vec![0.0; k];
    let coef: Vec<f64> = (0..draws).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = coef.iter().sum();
    for c in coef {
        let mut lp = LinearProgram::new(Sense::Maximize, k);
        for j in 0..k {
            lp.objective[j] = rng.gen_range(-1.0..1.0);
        }
        for i in 0..cone.dim() {
            let coeffs = (0..k).filter(|&j| gens[j].a[i] != 0.0).map(|j| (j, gens[j].a[i])).collect();
            lp.add_constraint(coeffs, ConstraintKind::Eq, x[i]);
        }
        let rep = lp_solve(&lp);
        if !rep.is_optimal() {
            return Err(VngError::Lp(format!("no representation of the state: {:?}", rep.status)));
        }
        for (m, v) in mix.iter_mut().zip(&rep.primal) {
            *m += c / total * v.max(0.0);
        }
    }
    Ok(mix)
}

fn output(gens: &[Generator], lambda: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (g, l) in gens.iter().zip(lambda) {
        for i in 0..n {
            out[i] += l * g.b[i];
        }
    }
    out
}

/// A random feasible path from `x_0`.
pub fn random_feasible_path<R: Rng>(model: &Model, rng: &mut R) -> Result<PrimalPath> {
    let tree = &model.tree;
    let n = model.dim();
    let mut levels = vec![AdaptedVector::constant(tree, 0, &model.x0)];
    for t in 1..=tree.horizon() {
        let mut level = AdaptedVector::zeros(tree, t, n);
        for &id in tree.level(t) {
            let parent = tree.parent(id).expect("non-root");
            let x = levels[t - 1].at(tree, parent).to_vec();
            let cone = model.cone(id);
            let lambda = random_weights(cone, &x, rng)?;
            level.set(tree, id, output(cone.generators(), &lambda, n));
        }
        levels.push(level);
    }
    PrimalPath::new(levels)
}

/// A random `(u, v) ∈ Z_t`: `u` on level `t-1`, `v` on level `t`, with
/// `(u(parent), v(ν)) ∈ G_t(ν)` at every time-`t` node.
pub fn random_selection<R: Rng>(model: &Model, t: usize, rng: &mut R) -> Result<(AdaptedVector, AdaptedVector)> {
    let tree = &model.tree;
    let n = model.dim();
    let mut u = AdaptedVector::zeros(tree, t - 1, n);
    for &mu in tree.level(t - 1) {
        let scale = if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.01..10.0) };
        u.set(tree, mu, (0..n).map(|_| scale * rng.gen_range(0.0..1.0)).collect());
    }
    let mut v = AdaptedVector::zeros(tree, t, n);
    for &nu in tree.level(t) {
        let parent = tree.parent(nu).expect("non-root");
        let cone = model.cone(nu);
        let lambda = random_weights(cone, u.at(tree, parent), rng)?;
        v.set(tree, nu, output(cone.generators(), &lambda, n));
    }
    Ok((u, v))
}

/// Vertices of `{λ >= 0 : Σ λ_k a_k = x}`, mapped to outputs `Σ λ_k b_k`.
pub fn vertex_outputs(cone: &ConeSpec, x: &[f64]) -> Vec<Vec<f64>> {
    let n = cone.dim();
    let gens = cone.generators();
    let rows: Vec<usize> = (0..n).filter(|&i| gens.iter().any(|g| g.a[i] != 0.0)).collect();
    let r = rows.len();
    let mut out: Vec<Vec<f64>> = Vec::new();
    if r == 0 {
        return vec![vec![0.0; n]];
    }
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let mut push = |v: Vec<f64>| {
        if !out.iter().any(|w| w.iter().zip(&v).all(|(a, b)| (a - b).abs() <= 1e-12 * scale)) {
            out.push(v);
        }
    };
    for basis in combinations(gens.len(), r) {
        let m = DMatrix::from_fn(r, r, |i, j| gens[basis[j]].a[rows[i]]);
        let rhs = DVector::from_iterator(r, rows.iter().map(|&i| x[i]));
        let Some(sol) = m.lu().solve(&rhs) else { continue };
        if sol.iter().any(|v| *v < -1e-12 * scale || !v.is_finite()) {
            continue;
        }
        let mut lambda = vec![0.0; gens.len()];
        for (j, &k) in basis.iter().enumerate() {
            lambda[k] = sol[j].max(0.0);
        }
        let ax: Vec<f64> = (0..n).map(|i| gens.iter().zip(&lambda).map(|(g, l)| g.a[i] * l).sum()).collect();
        if ax.iter().zip(x).any(|(a, b)| (a - b).abs() > 1e-9 * scale) {
            continue;
        }
        push(output(gens, &lambda, n));
    }
    out
}

fn combinations(k: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(r);
    fn rec(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for j in start..k {
            cur.push(j);
            rec(j + 1, k, r, cur, out);
            cur.pop();
        }
    }
    rec(0, k, r, &mut cur, &mut out);
    out
}

/// Every path that moves along a vertex of the feasible step at each node,
/// or `None` when there are more than `limit`.
pub fn enumerate_vertex_paths(model: &Model, limit: usize) -> Result<Option<Vec<PrimalPath>>> {
    let tree = &model.tree;
    // partial paths as one state per node id
    let mut partial: Vec<Vec<Vec<f64>>> = vec![{
        let mut s = vec![Vec::new(); tree.num_nodes()];
        s[tree.root()] = model.x0.clone();
        s
    }];
    for t in 1..=tree.horizon() {
        for &id in tree.level(t) {
            let parent = tree.parent(id).expect("non-root");
            let mut next = Vec::new();
            for states in &partial {
                for v in vertex_outputs(model.cone(id), &states[parent]) {
                    let mut s = states.clone();
                    s[id] = v;
                    next.push(s);
                    if next.len() > limit {
                        return Ok(None);
                    }
                }
            }
            partial = next;
        }
    }
    let mut paths = Vec::with_capacity(partial.len());
    for states in partial {
        let levels = (0..=tree.horizon())
            .map(|t| {
                let values = tree.level(t).iter().map(|&id| states[id].clone()).collect();
                AdaptedVector::new(t, values)
            })
            .collect::<Result<Vec<_>>>()?;
        paths.push(PrimalPath::new(levels)?);
    }
    Ok(Some(paths))
}
