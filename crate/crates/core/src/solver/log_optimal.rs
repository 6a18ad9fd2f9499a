//! Expected-log-growth maximization over the feasible paths from `x_0`.
//!
//! Each non-root node `ν` carries generator weights `λ_ν >= 0` with
//! `x_ν = B_ν λ_ν` and the linking constraint `A_ν λ_ν = x_parent`. The
//! concave objective `Σ_leaves P ln(w·x_N)` is maximized by a primal-dual
//! interior point method. The Hessian is block diagonal (one block per node,
//! diagonal plus rank one on the leaves), so the reduced Newton system
//! couples a node's rows only to its siblings and its parent; groups of
//! siblings are eliminated from the deepest level up.

use nalgebra::{DMatrix, DVector};

use crate::cones::dot;
use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::PrimalPath;
use crate::scenario_tree::{AdaptedVector, NodeId};
use crate::solver::lp::{lp_solve, ConstraintKind, LinearProgram, Sense};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierOptions {
    /// Target for the complementarity gap `Σ λ z`, relative to `max(1, |F|)`.
    pub gap: f64,
    /// Target for linking and stationarity residuals.
    pub residual: f64,
    pub max_iterations: usize,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            gap: 1e-13,
            residual: 1e-12,
            max_iterations: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LogOptimal {
    pub path: PrimalPath,
    /// `Σ_leaves P ln(w·x_N)`.
    pub objective: f64,
    /// Complementarity gap `Σ λ z`, a bound on `max F - F(path)` once the
    /// residuals vanish.
    pub gap: f64,
    /// Largest linking residual `|A_ν λ_ν - x_parent|`.
    pub linking_residual: f64,
    /// Largest stationarity residual.
    pub stationarity_residual: f64,
    pub iterations: usize,
    /// Generator weights per node (empty at the root).
    pub weights: Vec<Vec<f64>>,
}

/// Per-node data restricted to generators that can be active.
struct Block {
    parent: Option<NodeId>,
    prob: f64,
    /// Indices into the cone's generator list.
    active: Vec<usize>,
    /// Linking rows kept (coordinates with some active input).
    rows: Vec<usize>,
    /// `a` and `b` columns of the active generators (`n` entries each).
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    /// `B_ν^T w` on leaves.
    leaf: Option<Vec<f64>>,
}

/// `W = -H^{-1}` for `H = -diag(d) - u u^T`: `diag(1/d) - β v v^T` with
/// `v = u / d` and `β = 1 / (1 + u·v)`.
struct InvHess {
    dinv: Vec<f64>,
    v: Vec<f64>,
    beta: f64,
}

impl InvHess {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let s = self.beta * dot(&self.v, x);
        self.dinv.iter().zip(x).zip(&self.v).map(|((d, xi), vi)| d * xi - s * vi).collect()
    }
}

struct Problem<'a> {
    model: &'a Model,
    blocks: Vec<Option<Block>>,
    /// Non-root node ids, parents before children.
    order: Vec<NodeId>,
}

impl<'a> Problem<'a> {
    fn n(&self) -> usize {
        self.model.dim()
    }

    fn block(&self, id: NodeId) -> &Block {
        self.blocks[id].as_ref().expect("non-root block")
    }

    /// Full `n`-vector `A λ` or `B λ`.
    fn mat_vec(cols: &[Vec<f64>], lambda: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (col, l) in cols.iter().zip(lambda) {
            for i in 0..n {
                out[i] += col[i] * l;
            }
        }
        out
    }

    fn state(&self, lambda: &[Vec<f64>], id: NodeId) -> Vec<f64> {
        if id == self.model.tree.root() {
            self.model.x0.clone()
        } else {
            Self::mat_vec(&self.block(id).b, &lambda[id], self.n())
        }
    }

    /// Linking residual `A_ν λ_ν - x_parent` on kept rows.
    fn residual(&self, lambda: &[Vec<f64>], id: NodeId) -> Vec<f64> {
        let blk = self.block(id);
        let ax = Self::mat_vec(&blk.a, &lambda[id], self.n());
        let xp = self.state(lambda, blk.parent.unwrap_or(self.model.tree.root()));
        blk.rows.iter().map(|&i| ax[i] - xp[i]).collect()
    }

    fn objective(&self, lambda: &[Vec<f64>]) -> f64 {
        let mut f = 0.0;
        for &id in &self.order {
            let blk = self.block(id);
            if let Some(c) = &blk.leaf {
                f += blk.prob * dot(c, &lambda[id]).ln();
            }
        }
        f
    }

    /// `∇F` per node (zero away from the leaves).
    fn gradient(&self, lambda: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut g = vec![Vec::new(); lambda.len()];
        for &id in &self.order {
            let blk = self.block(id);
            g[id] = match &blk.leaf {
                Some(c) => {
                    let s = dot(c, &lambda[id]);
                    c.iter().map(|ci| blk.prob * ci / s).collect()
                }
                None => vec![0.0; lambda[id].len()],
            };
        }
        g
    }

    /// `C^T y` restricted to the weights of node `id`.
    fn ct_y(&self, y: &[Vec<f64>], id: NodeId) -> Vec<f64> {
        let blk = self.block(id);
        let mut v = vec![0.0; blk.active.len()];
        for (k, col) in blk.a.iter().enumerate() {
            v[k] += blk.rows.iter().enumerate().map(|(r, &i)| col[i] * y[id][r]).sum::<f64>();
        }
        for &c in self.model.tree.children(id) {
            let cb = self.block(c);
            for (k, col) in blk.b.iter().enumerate() {
                v[k] -= cb.rows.iter().enumerate().map(|(r, &i)| col[i] * y[c][r]).sum::<f64>();
            }
        }
        v
    }

    /// Number of weights, each counted with its node probability.
    fn weight_mass(&self) -> f64 {
        self.order.iter().map(|&id| self.block(id).prob * self.block(id).active.len() as f64).sum()
    }
}

fn max_abs(v: &[Vec<f64>]) -> f64 {
    v.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Largest step in `[0, 1]` keeping `v + α dv` strictly positive.
fn boundary_step(problem: &Problem, v: &[Vec<f64>], dv: &[Vec<f64>], fraction: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    for &id in &problem.order {
        for (x, d) in v[id].iter().zip(&dv[id]) {
            if *d < 0.0 {
                alpha = alpha.min(-fraction * x / d);
            }
        }
    }
    alpha
}

/// Maximizes `Σ_leaves P(leaf) ln(w·x_N(leaf))` over feasible paths.
pub fn solve_log_optimal(model: &Model, w: Option<&[f64]>, opts: &BarrierOptions) -> Result<LogOptimal> {
    let n = model.dim();
    let weight: Vec<f64> = match w {
        Some(w) => {
            if w.len() != n {
                return Err(VngError::Dimension {
                    expected: n,
                    actual: w.len(),
                });
            }
            if w.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(VngError::InvalidParameter("weight must be strictly positive".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };

    let (problem, mut lambda) = interior_start(model, &weight)?;
    let nn = model.tree.num_nodes();
    let mass = problem.weight_mass().max(f64::MIN_POSITIVE);
    let mut z: Vec<Vec<f64>> = vec![Vec::new(); nn];
    let mut y: Vec<Vec<f64>> = vec![Vec::new(); nn];
    for &id in &problem.order {
        let blk = problem.block(id);
        z[id] = vec![blk.prob; blk.active.len()];
        y[id] = vec![0.0; blk.rows.len()];
    }
    // iterates meeting the targets up to this factor are kept as a fallback
    // for when the Newton system degenerates before the full targets
    const FALLBACK: f64 = 1e3;
    let mut fallback: Option<(f64, LogOptimal)> = None;

    let mut iterations = 0;
    loop {
        let grad = problem.gradient(&lambda);
        let mut rd = vec![Vec::new(); nn];
        let mut rp = vec![Vec::new(); nn];
        let mut gap = 0.0;
        for &id in &problem.order {
            let cty = problem.ct_y(&y, id);
            rd[id] = (0..lambda[id].len()).map(|k| grad[id][k] - cty[k] + z[id][k]).collect();
            rp[id] = problem.residual(&lambda, id);
            gap += dot(&lambda[id], &z[id]);
        }
        let objective = problem.objective(&lambda);
        let state_scale = problem
            .order
            .iter()
            .map(|&id| max_abs(&[problem.state(&lambda, id)]))
            .fold(max_abs(&[model.x0.clone()]).max(1.0), f64::max);
        let rd_norm = max_abs(&rd) / (1.0 + max_abs(&grad));
        let rp_norm = max_abs(&rp) / state_scale;
        let merit = (gap / (opts.gap * objective.abs().max(1.0)))
            .max(rd_norm / opts.residual)
            .max(rp_norm / opts.residual);
        let finish = |iterations: usize| -> Result<LogOptimal> {
            let path = assemble_path(&problem, &lambda)?;
            let mut weights = vec![Vec::new(); nn];
            for &id in &problem.order {
                let mut full = vec![0.0; model.cone(id).generators().len()];
                for (k, &g) in problem.block(id).active.iter().enumerate() {
                    full[g] = lambda[id][k];
                }
                weights[id] = full;
            }
            Ok(LogOptimal {
                path,
                objective,
                gap,
                linking_residual: max_abs(&rp),
                stationarity_residual: max_abs(&rd),
                iterations,
                weights,
            })
        };
        if merit <= 1.0 {
            return finish(iterations);
        }
        if merit <= FALLBACK && fallback.as_ref().map_or(true, |(m, _)| merit < *m) {
            fallback = Some((merit, finish(iterations)?));
        }
        if iterations >= opts.max_iterations {
            return match fallback {
                Some((_, sol)) => Ok(sol),
                None => Err(VngError::NotConverged { iterations, gap }),
            };
        }
        iterations += 1;

        // M = diag(z/λ) + u u^T, u = sqrt(P) c / s on the leaves
        let mut winv: Vec<Option<InvHess>> = (0..nn).map(|_| None).collect();
        for &id in &problem.order {
            let blk = problem.block(id);
            let dinv: Vec<f64> = lambda[id].iter().zip(&z[id]).map(|(l, zz)| l / zz).collect();
            let (v, beta) = match &blk.leaf {
                Some(c) => {
                    let s = dot(c, &lambda[id]);
                    let u: Vec<f64> = c.iter().map(|ci| blk.prob.sqrt() * ci / s).collect();
                    let v: Vec<f64> = u.iter().zip(&dinv).map(|(ui, di)| ui * di).collect();
                    let beta = 1.0 / (1.0 + dot(&u, &v));
                    (v, beta)
                }
                None => (vec![0.0; dinv.len()], 0.0),
            };
            winv[id] = Some(InvHess { dinv, v, beta });
        }
        let factor = match KktFactor::new(&problem, &winv) {
            Ok(f) => f,
            Err(e) => {
                return match fallback {
                    Some((_, sol)) => Ok(sol),
                    None => Err(e),
                }
            }
        };

        let direction = |rc: &[Vec<f64>]| -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
            let mut gt = vec![Vec::new(); nn];
            for &id in &problem.order {
                gt[id] = (0..lambda[id].len()).map(|k| rd[id][k] + rc[id][k] / lambda[id][k]).collect();
            }
            let (dl, dy) = factor.solve(&problem, &gt, &rp);
            let mut dz = vec![Vec::new(); nn];
            for &id in &problem.order {
                dz[id] = (0..lambda[id].len())
                    .map(|k| (rc[id][k] - z[id][k] * dl[id][k]) / lambda[id][k])
                    .collect();
            }
            Ok((dl, dy, dz))
        };

        // predictor
        let mu = gap / mass;
        let mut rc: Vec<Vec<f64>> = vec![Vec::new(); nn];
        for &id in &problem.order {
            rc[id] = lambda[id].iter().zip(&z[id]).map(|(l, zz)| -l * zz).collect();
        }
        let (dl, _, dz) = direction(&rc)?;
        let a_aff = boundary_step(&problem, &lambda, &dl, 1.0).min(boundary_step(&problem, &z, &dz, 1.0));
        let mut gap_aff = 0.0;
        for &id in &problem.order {
            for k in 0..lambda[id].len() {
                gap_aff += (lambda[id][k] + a_aff * dl[id][k]) * (z[id][k] + a_aff * dz[id][k]);
            }
        }
        let sigma = (gap_aff / gap).clamp(0.0, 1.0).powi(3);

        // corrector
        for &id in &problem.order {
            let p = problem.block(id).prob;
            rc[id] = (0..lambda[id].len())
                .map(|k| sigma * mu * p - lambda[id][k] * z[id][k] - dl[id][k] * dz[id][k])
                .collect();
        }
        let (dl, dy, dz) = direction(&rc)?;
        let alpha = boundary_step(&problem, &lambda, &dl, 0.995).min(boundary_step(&problem, &z, &dz, 0.995));
        for &id in &problem.order {
            for k in 0..lambda[id].len() {
                lambda[id][k] += alpha * dl[id][k];
                z[id][k] += alpha * dz[id][k];
            }
            for (yy, d) in y[id].iter_mut().zip(&dy[id]) {
                *yy += alpha * d;
            }
        }
    }
}

fn assemble_path(problem: &Problem, lambda: &[Vec<f64>]) -> Result<PrimalPath> {
    let tree = &problem.model.tree;
    let mut levels = Vec::with_capacity(tree.horizon() + 1);
    for t in 0..=tree.horizon() {
        let values = tree.level(t).iter().map(|&id| problem.state(lambda, id)).collect();
        levels.push(AdaptedVector::new(t, values)?);
    }
    PrimalPath::new(levels)
}

/// Picks, node by node from the root, strictly positive generator weights
/// reproducing the parent state. Generators that vanish on every feasible
/// choice are removed from the problem.
fn interior_start<'a>(model: &'a Model, w: &[f64]) -> Result<(Problem<'a>, Vec<Vec<f64>>)> {
    let tree = &model.tree;
    let n = model.dim();
    let mut blocks: Vec<Option<Block>> = (0..tree.num_nodes()).map(|_| None).collect();
    let mut lambda = vec![Vec::new(); tree.num_nodes()];
    let mut order = Vec::new();
    let mut states: Vec<Vec<f64>> = vec![Vec::new(); tree.num_nodes()];
    states[tree.root()] = model.x0.clone();

    for t in 1..=tree.horizon() {
        for &id in tree.level(t) {
            let parent = tree.parent(id).expect("non-root");
            let x = states[parent].clone();
            let gens = model.cone(id).generators();
            let (active, weights) = relative_interior(gens, &x, n)?;
            let a: Vec<Vec<f64>> = active.iter().map(|&k| gens[k].a.clone()).collect();
            let b: Vec<Vec<f64>> = active.iter().map(|&k| gens[k].b.clone()).collect();
            let rows: Vec<usize> = (0..n).filter(|&i| a.iter().any(|col| col[i] != 0.0)).collect();
            if (0..n).any(|i| !rows.contains(&i) && x[i] != 0.0) {
                return Err(VngError::Lp(format!(
                    "no interior point for the linking constraint at node `{}`",
                    tree.label(id)
                )));
            }
            let state = Problem::mat_vec(&b, &weights, n);
            let leaf = if t == tree.horizon() {
                let c: Vec<f64> = b.iter().map(|col| dot(col, w)).collect();
                if dot(&c, &weights) <= 0.0 {
                    return Err(VngError::DegenerateModel { value: 0.0 });
                }
                Some(c)
            } else {
                None
            };
            blocks[id] = Some(Block {
                parent: (parent != tree.root()).then_some(parent),
                prob: tree.unconditional_prob(id),
                active,
                rows,
                a,
                b,
                leaf,
            });
            lambda[id] = weights;
            states[id] = state;
            order.push(id);
        }
    }
    Ok((Problem { model, blocks, order }, lambda))
}

/// Strictly positive weights on the generators that can carry flow from `x`.
fn relative_interior(gens: &[crate::cones::Generator], x: &[f64], n: usize) -> Result<(Vec<usize>, Vec<f64>)> {
    let k = gens.len();
    let scale = x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    if x.iter().all(|v| *v == 0.0) {
        return Ok((Vec::new(), Vec::new()));
    }
    let base = |lp: &mut LinearProgram| {
        for i in 0..n {
            let coeffs = (0..k).filter(|&j| gens[j].a[i] != 0.0).map(|j| (j, gens[j].a[i])).collect();
            lp.add_constraint(coeffs, ConstraintKind::Eq, x[i]);
        }
    };

    // max τ with every weight at least τ
    let mut lp = LinearProgram::new(Sense::Maximize, k);
    let tau = lp.add_var(1.0, 0.0, f64::INFINITY);
    base(&mut lp);
    for j in 0..k {
        lp.add_constraint(vec![(j, 1.0), (tau, -1.0)], ConstraintKind::Ge, 0.0);
    }
    let rep = lp_solve(&lp);
    if !rep.is_optimal() {
        return Err(VngError::Lp(format!("interior point LP ended with status {:?}", rep.status)));
    }
    if rep.objective > 1e-9 * scale {
        return Ok(((0..k).collect(), rep.primal[..k].to_vec()));
    }

    // some weights are forced to zero: keep the others, averaging maximizers
    let mut active = Vec::new();
    let mut sum = vec![0.0; k];
    for j in 0..k {
        let mut lp = LinearProgram::new(Sense::Maximize, k);
        lp.objective[j] = 1.0;
        base(&mut lp);
        let rep = lp_solve(&lp);
        if !rep.is_optimal() {
            return Err(VngError::Lp(format!("interior point LP ended with status {:?}", rep.status)));
        }
        if rep.objective > 1e-12 * scale {
            active.push(j);
            for (s, v) in sum.iter_mut().zip(&rep.primal[..k]) {
                *s += v.max(0.0);
            }
        }
    }
    let m = active.len() as f64;
    let weights = active.iter().map(|&j| sum[j] / m).collect();
    Ok((active, weights))
}

/// Factorization of `S = C W C^T` by sibling-group elimination.
struct KktFactor {
    winv: Vec<Option<InvHess>>,
    /// Groups keyed by parent id.
    groups: Vec<Option<Group>>,
}

struct Group {
    members: Vec<NodeId>,
    offsets: Vec<usize>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    /// Coupling to the parent's rows and `S_G^{-1} E`, absent for the root.
    coupling: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

/// `X W Y^T` for `n x K` matrices given by columns, restricted to rows.
fn quad(xcols: &[Vec<f64>], xrows: &[usize], ycols: &[Vec<f64>], yrows: &[usize], wh: &InvHess) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(xrows.len(), yrows.len());
    for (r, &i) in xrows.iter().enumerate() {
        for (c, &j) in yrows.iter().enumerate() {
            let mut s = 0.0;
            for k in 0..wh.dinv.len() {
                s += xcols[k][i] * wh.dinv[k] * ycols[k][j];
            }
            m[(r, c)] = s;
        }
    }
    if wh.beta != 0.0 {
        let xv: Vec<f64> = xrows.iter().map(|&i| (0..wh.v.len()).map(|k| xcols[k][i] * wh.v[k]).sum()).collect();
        let yv: Vec<f64> = yrows.iter().map(|&j| (0..wh.v.len()).map(|k| ycols[k][j] * wh.v[k]).sum()).collect();
        for r in 0..xrows.len() {
            for c in 0..yrows.len() {
                m[(r, c)] -= wh.beta * xv[r] * yv[c];
            }
        }
    }
    m
}

fn select(cols: &[Vec<f64>], rows: &[usize], v: &[f64]) -> Vec<f64> {
    rows.iter().map(|&i| cols.iter().zip(v).map(|(c, x)| c[i] * x).sum()).collect()
}

impl KktFactor {
    fn new(problem: &Problem, winv: &[Option<InvHess>]) -> Result<Self> {
        let tree = &problem.model.tree;
        let nn = tree.num_nodes();
        let w = |id: NodeId| winv[id].as_ref().expect("non-root");

        let mut diag: Vec<DMatrix<f64>> = vec![DMatrix::zeros(0, 0); nn];
        for &id in &problem.order {
            let blk = problem.block(id);
            let mut dm = quad(&blk.a, &blk.rows, &blk.a, &blk.rows, w(id));
            if let Some(p) = blk.parent {
                dm += quad(&problem.block(p).b, &blk.rows, &problem.block(p).b, &blk.rows, w(p));
            }
            diag[id] = dm;
        }

        let mut groups: Vec<Option<Group>> = (0..nn).map(|_| None).collect();
        for t in (0..tree.horizon()).rev() {
            for &mu in tree.level(t) {
                let members: Vec<NodeId> = tree.children(mu).to_vec();
                let mut offsets = Vec::with_capacity(members.len() + 1);
                let mut size = 0;
                for &c in &members {
                    offsets.push(size);
                    size += problem.block(c).rows.len();
                }
                offsets.push(size);
                let mut s = DMatrix::<f64>::zeros(size, size);
                for (k, &c) in members.iter().enumerate() {
                    let o = offsets[k];
                    let len = offsets[k + 1] - o;
                    s.view_mut((o, o), (len, len)).copy_from(&diag[c]);
                }
                let non_root = mu != tree.root();
                if non_root {
                    let pb = problem.block(mu);
                    for (k1, &c1) in members.iter().enumerate() {
                        for (k2, &c2) in members.iter().enumerate() {
                            if k1 != k2 {
                                let q = quad(&pb.b, &problem.block(c1).rows, &pb.b, &problem.block(c2).rows, w(mu));
                                s.view_mut((offsets[k1], offsets[k2]), (q.nrows(), q.ncols())).copy_from(&q);
                            }
                        }
                    }
                }
                let lu = s.lu();
                let singular = || VngError::Lp(format!("singular Newton block below node `{}`", tree.label(mu)));
                let coupling = if non_root {
                    let pb = problem.block(mu);
                    let mut e = DMatrix::<f64>::zeros(size, pb.rows.len());
                    for (k, &c) in members.iter().enumerate() {
                        let q = quad(&pb.b, &problem.block(c).rows, &pb.a, &pb.rows, w(mu));
                        e.view_mut((offsets[k], 0), (q.nrows(), q.ncols())).copy_from(&(-q));
                    }
                    let zm = lu.solve(&e).ok_or_else(singular)?;
                    diag[mu] -= e.transpose() * &zm;
                    Some((e, zm))
                } else {
                    if size > 0 && !lu.is_invertible() {
                        return Err(singular());
                    }
                    None
                };
                groups[mu] = Some(Group {
                    members,
                    offsets,
                    lu,
                    coupling,
                });
            }
        }
        let winv = winv
            .iter()
            .map(|w| {
                w.as_ref().map(|w| InvHess {
                    dinv: w.dinv.clone(),
                    v: w.v.clone(),
                    beta: w.beta,
                })
            })
            .collect();
        Ok(Self { winv, groups })
    }

    /// Solves `S dy = C W g + r`, then `dλ = W (g - C^T dy)`.
    fn solve(&self, problem: &Problem, g: &[Vec<f64>], r: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let tree = &problem.model.tree;
        let nn = tree.num_nodes();
        let w = |id: NodeId| self.winv[id].as_ref().expect("non-root");

        let mut rhs: Vec<DVector<f64>> = vec![DVector::zeros(0); nn];
        for &id in &problem.order {
            let blk = problem.block(id);
            let wg = w(id).apply(&g[id]);
            let mut v = select(&blk.a, &blk.rows, &wg);
            for (vi, e) in v.iter_mut().zip(&r[id]) {
                *vi += e;
            }
            if let Some(p) = blk.parent {
                let wgp = w(p).apply(&g[p]);
                for (vi, e) in v.iter_mut().zip(select(&problem.block(p).b, &blk.rows, &wgp)) {
                    *vi -= e;
                }
            }
            rhs[id] = DVector::from_vec(v);
        }

        let mut zs: Vec<DVector<f64>> = vec![DVector::zeros(0); nn];
        for t in (0..tree.horizon()).rev() {
            for &mu in tree.level(t) {
                let grp = self.groups[mu].as_ref().expect("group");
                let size = *grp.offsets.last().expect("offsets");
                let mut rg = DVector::<f64>::zeros(size);
                for (k, &c) in grp.members.iter().enumerate() {
                    let o = grp.offsets[k];
                    rg.rows_mut(o, grp.offsets[k + 1] - o).copy_from(&rhs[c]);
                }
                let z = grp.lu.solve(&rg).unwrap_or(rg);
                if let Some((e, _)) = &grp.coupling {
                    rhs[mu] -= e.transpose() * &z;
                }
                zs[mu] = z;
            }
        }

        let mut dy: Vec<DVector<f64>> = vec![DVector::zeros(0); nn];
        for t in 0..tree.horizon() {
            for &mu in tree.level(t) {
                let grp = self.groups[mu].as_ref().expect("group");
                let sol = match &grp.coupling {
                    Some((_, zm)) => &zs[mu] - zm * &dy[mu],
                    None => zs[mu].clone(),
                };
                for (k, &c) in grp.members.iter().enumerate() {
                    let o = grp.offsets[k];
                    dy[c] = sol.rows(o, grp.offsets[k + 1] - o).into_owned();
                }
            }
        }
        let dy: Vec<Vec<f64>> = dy.into_iter().map(|v| v.as_slice().to_vec()).collect();

        let mut dl = vec![Vec::new(); nn];
        for &id in &problem.order {
            let cty = problem.ct_y(&dy, id);
            let v: Vec<f64> = g[id].iter().zip(&cty).map(|(a, b)| a - b).collect();
            dl[id] = w(id).apply(&v);
        }
        (dl, dy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_io::{chain2, two_generator};
    use crate::paths::check_path;

    #[test]
    fn chain2_follows_the_ray() {
        let m = chain2(3);
        let sol = solve_log_optimal(&m, None, &BarrierOptions::default()).unwrap();
        for t in 0..=3 {
            let x = sol.path.x(t).values()[0][0];
            assert!((x - 2f64.powi(t as i32)).abs() < 1e-9, "t={t} x={x}");
        }
        assert!((sol.objective - 3.0 * 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn weight_scaling_shifts_objective() {
        let m = two_generator(2);
        let a = solve_log_optimal(&m, Some(&[1.0]), &BarrierOptions::default()).unwrap();
        let b = solve_log_optimal(&m, Some(&[3.0]), &BarrierOptions::default()).unwrap();
        assert!((b.objective - a.objective - 3f64.ln()).abs() < 1e-9);
        assert!(a.path.x(2).max_abs_diff(b.path.x(2)) < 1e-8);
    }

    #[test]
    fn dominant_generator_wins() {
        let m = two_generator(1);
        let sol = solve_log_optimal(&m, None, &BarrierOptions::default()).unwrap();
        assert!((sol.path.x(1).values()[0][0] - 2.0).abs() < 1e-9);
        assert!(check_path(&m.tree, &m.cones, &sol.path, 1e-9).unwrap().ok);
        assert!(sol.gap < 1e-9);
    }
}
