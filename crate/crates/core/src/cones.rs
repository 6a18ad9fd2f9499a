//! Finitely generated transition cones, their duals, and the growth
//! assumptions they must satisfy.
//!
//! A cone `G ⊆ R^n₊ × R^n₊` is stored as the conic hull of generator pairs
//! `(a_k, b_k)`. Dual membership `(c, d) ∈ G^×` reduces to one inequality per
//! generator; primal membership is an LP.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VngError};
use crate::scenario_tree::{NodeId, ScenarioTree};
use crate::solver::lp::{lp_solve, ConstraintKind, LinearProgram, LpStatus, Sense};

/// Sum of absolute values of the coordinates.
pub fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Two-tier tolerances: tight for single membership tests, looser for
/// aggregate certifications.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub membership: f64,
    pub certification: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            membership: 1e-9,
            certification: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Generator {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        Self { a, b }
    }
}

/// Conic hull of a finite generator list. Zero pairs are dropped since the
/// origin belongs to every cone.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeSpec {
    dim: usize,
    generators: Vec<Generator>,
}

impl ConeSpec {
    pub fn new(dim: usize, generators: Vec<Generator>) -> Result<Self> {
        let mut kept = Vec::with_capacity(generators.len());
        for (k, g) in generators.into_iter().enumerate() {
            if g.a.len() != dim || g.b.len() != dim {
                return Err(VngError::Dimension {
                    expected: dim,
                    actual: if g.a.len() != dim { g.a.len() } else { g.b.len() },
                });
            }
            if g.a.iter().chain(&g.b).any(|x| !x.is_finite() || *x < 0.0) {
                return Err(VngError::Cone {
                    node: String::new(),
                    message: format!("generator {k} has a negative or non-finite coordinate"),
                });
            }
            if l1(&g.a) == 0.0 && l1(&g.b) == 0.0 {
                continue;
            }
            kept.push(g);
        }
        if kept.is_empty() {
            return Err(VngError::Cone {
                node: String::new(),
                message: "no non-zero generators".into(),
            });
        }
        Ok(Self { dim, generators: kept })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(VngError::Dimension {
                expected: self.dim,
                actual: v.len(),
            });
        }
        Ok(())
    }

    /// Largest violation of `(c, d) ∈ G^×`: negativity of `c`, `d`, or of
    /// `c·a_k - d·b_k`.
    pub fn dual_violation(&self, c: &[f64], d: &[f64]) -> Result<f64> {
        self.check_dim(c)?;
        self.check_dim(d)?;
        let mut worst: f64 = 0.0;
        for x in c.iter().chain(d) {
            worst = worst.max(-x);
        }
        for g in &self.generators {
            worst = worst.max(dot(d, &g.b) - dot(c, &g.a));
        }
        Ok(worst)
    }

    pub fn dual_contains(&self, c: &[f64], d: &[f64], tol: f64) -> Result<bool> {
        Ok(self.dual_violation(c, d)? <= tol)
    }

    /// Smallest sup-norm distance from `(a, b)` to a conic combination of
    /// the generators.
    pub fn primal_residual(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        let k = self.generators.len();
        let mut lp = LinearProgram::new(Sense::Minimize, k + 1);
        lp.objective[k] = 1.0;
        for i in 0..2 * self.dim {
            let (target, coeff): (f64, Box<dyn Fn(&Generator) -> f64>) = if i < self.dim {
                (a[i], Box::new(move |g: &Generator| g.a[i]))
            } else {
                let ii = i - self.dim;
                (b[ii], Box::new(move |g: &Generator| g.b[ii]))
            };
            let row: Vec<(usize, f64)> = self
                .generators
                .iter()
                .enumerate()
                .map(|(j, g)| (j, coeff(g)))
                .filter(|e| e.1 != 0.0)
                .collect();
            let mut le = row.clone();
            le.push((k, -1.0));
            lp.add_constraint(le, ConstraintKind::Le, target);
            let mut ge = row;
            ge.push((k, 1.0));
            lp.add_constraint(ge, ConstraintKind::Ge, target);
        }
        let rep = lp_solve(&lp);
        if rep.status != LpStatus::Optimal {
            return Err(VngError::Lp(format!("primal membership LP: {:?}", rep.status)));
        }
        Ok(rep.objective.max(0.0))
    }

    pub fn primal_contains(&self, a: &[f64], b: &[f64], tol: f64) -> Result<bool> {
        Ok(self.primal_residual(a, b)? <= tol)
    }

    /// (G.1): every unit vector lies in the conic hull of the input parts.
    /// Returns the first failing coordinate, if any.
    pub fn g1_failure(&self) -> Result<Option<usize>> {
        for i in 0..self.dim {
            let mut lp = LinearProgram::new(Sense::Feasibility, self.generators.len());
            for r in 0..self.dim {
                let row = self
                    .generators
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.a[r] != 0.0)
                    .map(|(j, g)| (j, g.a[r]))
                    .collect();
                lp.add_constraint(row, ConstraintKind::Eq, if r == i { 1.0 } else { 0.0 });
            }
            match lp_solve(&lp).status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => return Ok(Some(i)),
                s => return Err(VngError::Lp(format!("G1 LP: {s:?}"))),
            }
        }
        Ok(None)
    }

    pub fn validate_g1(&self) -> Result<bool> {
        Ok(self.g1_failure()?.is_none())
    }

    /// (G.2): the Lipschitz bound `M = max_k |b_k| / |a_k|`. Fails with the
    /// offending generator index when some `a_k = 0` has `b_k != 0`.
    pub fn validate_g2(&self) -> std::result::Result<f64, usize> {
        let mut m: f64 = 0.0;
        for (k, g) in self.generators.iter().enumerate() {
            let (na, nb) = (l1(&g.a), l1(&g.b));
            if na == 0.0 {
                if nb != 0.0 {
                    return Err(k);
                }
                continue;
            }
            m = m.max(nb / na);
        }
        Ok(m)
    }

    /// (G.3) at a single node: maximize `γ` subject to `Σλ_k b_k ≥ γe`,
    /// `Σλ_k|a_k| ≤ 1`, `λ ≥ 0`. Returns `(γ, â, b̂)`.
    pub fn g3_witness(&self) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        let k = self.generators.len();
        let mut lp = LinearProgram::new(Sense::Maximize, k + 1);
        lp.objective[k] = 1.0;
        for i in 0..self.dim {
            let mut row: Vec<(usize, f64)> = self
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g.b[i] != 0.0)
                .map(|(j, g)| (j, g.b[i]))
                .collect();
            row.push((k, -1.0));
            lp.add_constraint(row, ConstraintKind::Ge, 0.0);
        }
        let norm_row = self
            .generators
            .iter()
            .enumerate()
            .map(|(j, g)| (j, l1(&g.a)))
            .filter(|e| e.1 != 0.0)
            .collect();
        lp.add_constraint(norm_row, ConstraintKind::Le, 1.0);
        let rep = lp_solve(&lp);
        match rep.status {
            LpStatus::Optimal => {}
            // only possible when some a_k = 0 with b_k > 0, a (G.2) failure
            LpStatus::Unbounded => return Ok((f64::INFINITY, vec![0.0; self.dim], vec![0.0; self.dim])),
            s => return Err(VngError::Lp(format!("G3 LP: {s:?}"))),
        }
        let lam = &rep.primal[..k];
        let mut a_hat = vec![0.0; self.dim];
        let mut b_hat = vec![0.0; self.dim];
        for (l, g) in lam.iter().zip(&self.generators) {
            for i in 0..self.dim {
                a_hat[i] += l * g.a[i];
                b_hat[i] += l * g.b[i];
            }
        }
        Ok((rep.objective, a_hat, b_hat))
    }

    /// Adds `(e_i, 0)` and every generator with any subset of output
    /// coordinates zeroed: the closure under free disposal of inputs and
    /// outputs.
    pub fn with_free_disposal(&self) -> Result<Self> {
        if self.dim > 12 {
            return Err(VngError::InvalidParameter(
                "free-disposal closure supports dim <= 12".into(),
            ));
        }
        let mut gens = self.generators.clone();
        for g in &self.generators {
            for mask in 1u32..(1 << self.dim) {
                let b: Vec<f64> = g
                    .b
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| if mask & (1 << i) != 0 { 0.0 } else { v })
                    .collect();
                gens.push(Generator::new(g.a.clone(), b));
            }
        }
        for i in 0..self.dim {
            let mut e = vec![0.0; self.dim];
            e[i] = 1.0;
            gens.push(Generator::new(e, vec![0.0; self.dim]));
        }
        let mut unique: Vec<Generator> = Vec::with_capacity(gens.len());
        for g in gens {
            if !unique.contains(&g) {
                unique.push(g);
            }
        }
        ConeSpec::new(self.dim, unique)
    }
}

/// One cone per non-root node.
#[derive(Clone, Debug)]
pub struct RandomCone {
    cones: Vec<Option<ConeSpec>>,
}

impl RandomCone {
    /// `cones[id]` must be present for every non-root node id.
    pub fn new(tree: &ScenarioTree, cones: Vec<Option<ConeSpec>>) -> Result<Self> {
        if cones.len() != tree.num_nodes() {
            return Err(VngError::Cone {
                node: String::new(),
                message: format!("{} cones for {} nodes", cones.len(), tree.num_nodes()),
            });
        }
        for id in 0..tree.num_nodes() {
            if id == tree.root() {
                continue;
            }
            match &cones[id] {
                None => {
                    return Err(VngError::Cone {
                        node: tree.label(id).to_owned(),
                        message: "missing cone".into(),
                    })
                }
                Some(c) if c.dim() != tree.dim() => {
                    return Err(VngError::Dimension {
                        expected: tree.dim(),
                        actual: c.dim(),
                    })
                }
                _ => {}
            }
        }
        Ok(Self { cones })
    }

    /// Cone at a non-root node.
    pub fn at(&self, node: NodeId) -> &ConeSpec {
        self.cones[node].as_ref().expect("cone at non-root node")
    }

    pub fn raw(&self) -> &[Option<ConeSpec>] {
        &self.cones
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G3Witness {
    pub node: String,
    pub a_hat: Vec<f64>,
    pub b_hat: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelG3 {
    pub gamma: f64,
    pub witnesses: Vec<G3Witness>,
}

/// (G.3) across level `t`: per-node witnesses and `γ_t` as their minimum.
pub fn validate_g3(tree: &ScenarioTree, cones: &RandomCone, t: usize, tol: f64) -> Result<LevelG3> {
    if t == 0 || t > tree.horizon() {
        return Err(VngError::LevelMismatch {
            expected: 1,
            actual: t,
        });
    }
    let mut gamma = f64::INFINITY;
    let mut witnesses = Vec::with_capacity(tree.level_len(t));
    for &id in tree.level(t) {
        let (g, a_hat, b_hat) = cones.at(id).g3_witness()?;
        if g <= tol {
            return Err(VngError::G3Violation {
                node: tree.label(id).to_owned(),
                gamma: g,
            });
        }
        gamma = gamma.min(g);
        witnesses.push(G3Witness {
            node: tree.label(id).to_owned(),
            a_hat,
            b_hat,
        });
    }
    Ok(LevelG3 { gamma, witnesses })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelConstants {
    pub t: usize,
    /// (G.2) bound over all time-`t` nodes.
    pub m: f64,
    /// (G.3) productivity floor.
    pub gamma: f64,
    /// Dual contraction `|d| <= C_t |c|` on `G_t^×`.
    pub c: f64,
    pub witnesses: Vec<G3Witness>,
}

/// Constants driving the horizon bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    pub dim: usize,
    /// `δ e <= x_0 <= D e`
    pub delta: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
    pub levels: Vec<LevelConstants>,
}

impl GrowthConstants {
    /// Validates (G.1)–(G.3) at every node and assembles the constants.
    pub fn compute(tree: &ScenarioTree, cones: &RandomCone, x0: &[f64], tol: f64) -> Result<Self> {
        if x0.len() != tree.dim() {
            return Err(VngError::Dimension {
                expected: tree.dim(),
                actual: x0.len(),
            });
        }
        let delta = x0.iter().copied().fold(f64::INFINITY, f64::min);
        let big_d = x0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(delta > 0.0) {
            return Err(VngError::InitialState(format!(
                "x_0 must be strictly positive (min coordinate {delta})"
            )));
        }
        let mut levels = Vec::with_capacity(tree.horizon());
        for t in 1..=tree.horizon() {
            let mut m: f64 = 0.0;
            for &id in tree.level(t) {
                let cone = cones.at(id);
                if let Some(i) = cone.g1_failure()? {
                    return Err(VngError::G1Violation {
                        node: tree.label(id).to_owned(),
                        coordinate: i,
                    });
                }
                m = m.max(cone.validate_g2().map_err(|k| VngError::G2Violation {
                    node: tree.label(id).to_owned(),
                    generator: k,
                })?);
            }
            let g3 = validate_g3(tree, cones, t, tol)?;
            let max_a = g3
                .witnesses
                .iter()
                .flat_map(|w| w.a_hat.iter().copied())
                .fold(0.0, f64::max);
            levels.push(LevelConstants {
                t,
                m,
                gamma: g3.gamma,
                c: max_a / g3.gamma,
                witnesses: g3.witnesses,
            });
        }
        Ok(Self {
            dim: tree.dim(),
            delta,
            big_d,
            levels,
        })
    }

    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    pub fn m(&self, t: usize) -> f64 {
        self.levels[t - 1].m
    }

    pub fn gamma(&self, t: usize) -> f64 {
        self.levels[t - 1].gamma
    }

    pub fn c(&self, t: usize) -> f64 {
        self.levels[t - 1].c
    }

    /// `C^1 = δ⁻¹`, `C^t = C_{t-1}···C_1 δ⁻¹`. Defined up to `t = horizon + 1`.
    pub fn c_cumulative(&self, t: usize) -> f64 {
        (1..t).map(|s| self.c(s)).product::<f64>() / self.delta
    }

    /// `M^t = M_t···M_1 n D`.
    pub fn m_cumulative(&self, t: usize) -> f64 {
        (1..=t).map(|s| self.m(s)).product::<f64>() * self.dim as f64 * self.big_d
    }

    /// Multiplies every `C_t` and `M_t` by `factor`. Only meaningful for
    /// fault-injection runs of the bound checker.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for l in &mut out.levels {
            l.c *= factor;
            l.m *= factor;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario_tree::ScenarioNode;
    use proptest::prelude::*;

    fn chain2_cone() -> ConeSpec {
        ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![2.0])]).unwrap()
    }

    fn chain_tree(n: usize) -> ScenarioTree {
        let mut recs = vec![ScenarioNode::new("root", 0, None, 1.0)];
        for t in 1..=n {
            let parent = if t == 1 { "root".to_string() } else { format!("c{}", t - 1) };
            recs.push(ScenarioNode::new(format!("c{t}"), t, Some(&parent), 1.0));
        }
        ScenarioTree::build(&recs, 1).unwrap()
    }

    #[test]
    fn dual_membership_examples() {
        let cone = chain2_cone();
        assert!(cone.dual_contains(&[1.0], &[0.5], 1e-9).unwrap());
        assert!(!cone.dual_contains(&[1.0], &[0.6], 1e-9).unwrap());
        assert!(cone.dual_contains(&[0.0], &[0.0], 1e-9).unwrap());
        assert!(cone.dual_contains(&[1.0, 2.0], &[0.0], 1e-9).is_err());
    }

    #[test]
    fn primal_membership_examples() {
        let cone = chain2_cone();
        assert!(cone.primal_contains(&[2.0], &[4.0], 1e-9).unwrap());
        assert!(!cone.primal_contains(&[1.0], &[3.0], 1e-9).unwrap());
        assert!(cone.primal_contains(&[0.0], &[0.0], 1e-9).unwrap());
        let two = ConeSpec::new(
            2,
            vec![
                Generator::new(vec![1.0, 0.0], vec![0.0, 1.0]),
                Generator::new(vec![0.0, 1.0], vec![1.0, 1.0]),
            ],
        )
        .unwrap();
        assert!(two.primal_contains(&[2.0, 3.0], &[3.0, 5.0], 1e-9).unwrap());
        assert!(!two.primal_contains(&[2.0, 3.0], &[3.0, 6.0], 1e-9).unwrap());
    }

    #[test]
    fn g1_examples() {
        assert!(chain2_cone().validate_g1().unwrap());
        let no_input = ConeSpec::new(1, vec![Generator::new(vec![0.0], vec![1.0])]).unwrap();
        assert!(!no_input.validate_g1().unwrap());
        let two = ConeSpec::new(
            2,
            vec![
                Generator::new(vec![1.0, 0.0], vec![1.0, 1.0]),
                Generator::new(vec![0.0, 1.0], vec![0.0, 3.0]),
            ],
        )
        .unwrap();
        assert!(two.validate_g1().unwrap());
    }

    #[test]
    fn g2_examples() {
        assert_eq!(chain2_cone().validate_g2(), Ok(2.0));
        let dead = ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![0.0])]).unwrap();
        assert_eq!(dead.validate_g2(), Ok(0.0));
        let bad = ConeSpec::new(1, vec![Generator::new(vec![0.0], vec![1.0])]).unwrap();
        assert_eq!(bad.validate_g2(), Err(0));
    }

    #[test]
    fn g3_examples() {
        let (g, a, b) = chain2_cone().g3_witness().unwrap();
        assert!((g - 2.0).abs() < 1e-12);
        assert!((a[0] - 1.0).abs() < 1e-12 && (b[0] - 2.0).abs() < 1e-12);

        let tree = chain_tree(1);
        let dead = ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![0.0])]).unwrap();
        let cones = RandomCone::new(&tree, vec![None, Some(dead)]).unwrap();
        match validate_g3(&tree, &cones, 1, 1e-9) {
            Err(VngError::G3Violation { node, gamma }) => {
                assert_eq!(node, "c1");
                assert_eq!(gamma, 0.0);
            }
            other => panic!("{other:?}"),
        }

        let square = ConeSpec::new(2, vec![Generator::new(vec![1.0, 1.0], vec![1.0, 1.0])]).unwrap();
        let (g, a, b) = square.g3_witness().unwrap();
        assert!((g - 0.5).abs() < 1e-12);
        for v in a.iter().chain(&b) {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn chain2_constants() {
        let tree = chain_tree(2);
        let cones = RandomCone::new(&tree, vec![None, Some(chain2_cone()), Some(chain2_cone())]).unwrap();
        let k = GrowthConstants::compute(&tree, &cones, &[1.0], 1e-9).unwrap();
        assert_eq!(k.delta, 1.0);
        assert_eq!(k.big_d, 1.0);
        assert!((k.c(1) - 0.5).abs() < 1e-12 && (k.c(2) - 0.5).abs() < 1e-12);
        assert!((k.c_cumulative(1) - 1.0).abs() < 1e-12);
        assert!((k.c_cumulative(2) - 0.5).abs() < 1e-12);
        assert!((k.m_cumulative(1) - 2.0).abs() < 1e-12);
        assert!((k.m_cumulative(2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn delta_equals_d_for_unit_start() {
        let tree = chain_tree(1);
        let cones = RandomCone::new(&tree, vec![None, Some(chain2_cone())]).unwrap();
        let k = GrowthConstants::compute(&tree, &cones, &[1.0], 1e-9).unwrap();
        assert_eq!(k.delta, k.big_d);
        assert!(GrowthConstants::compute(&tree, &cones, &[0.0], 1e-9).is_err());
    }

    #[test]
    fn missing_cone_names_node() {
        let tree = chain_tree(2);
        let err = RandomCone::new(&tree, vec![None, Some(chain2_cone()), None]).unwrap_err();
        assert!(err.to_string().contains("c2"));
    }

    #[test]
    fn free_disposal_adds_generators() {
        let cone = ConeSpec::new(2, vec![Generator::new(vec![1.0, 1.0], vec![2.0, 3.0])])
            .unwrap()
            .with_free_disposal()
            .unwrap();
        assert!(cone.primal_contains(&[1.0, 1.0], &[2.0, 0.0], 1e-9).unwrap());
        assert!(cone.primal_contains(&[2.0, 1.0], &[2.0, 3.0], 1e-9).unwrap());
        assert!(!cone.primal_contains(&[1.0, 1.0], &[2.5, 3.0], 1e-9).unwrap());
    }

    #[test]
    fn chain2_dual_elements_obey_contraction() {
        // every (c, d) in the CHAIN2 dual has d <= c/2
        for i in 0..=20 {
            for j in 0..=20 {
                let (c, d) = (i as f64 * 0.1, j as f64 * 0.1);
                if chain2_cone().dual_contains(&[c], &[d], 1e-12).unwrap() {
                    assert!(d <= 0.5 * c + 1e-12);
                }
            }
        }
    }

    fn arb_cone() -> impl Strategy<Value = ConeSpec> {
        (1usize..=3).prop_flat_map(|n| {
            prop::collection::vec(
                (
                    prop::collection::vec(0.05f64..2.0, n),
                    prop::collection::vec(0.0f64..2.0, n),
                ),
                1..5,
            )
            .prop_map(move |gens| {
                let mut all: Vec<Generator> = gens.into_iter().map(|(a, b)| Generator::new(a, b)).collect();
                // keep (G.3) satisfiable
                all.push(Generator::new(vec![1.0; n], vec![1.0; n]));
                ConeSpec::new(n, all).unwrap()
            })
        })
    }

    fn conic_point(cone: &ConeSpec, weights: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = cone.dim();
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        for (w, g) in weights.iter().zip(cone.generators()) {
            for i in 0..n {
                a[i] += w * g.a[i];
                b[i] += w * g.b[i];
            }
        }
        (a, b)
    }

    fn dual_point(cone: &ConeSpec, c: Vec<f64>, shrink: f64) -> Vec<f64> {
        // largest multiple of direction e with d·b_k <= c·a_k, then shrunk
        let mut s = f64::INFINITY;
        for g in cone.generators() {
            let nb = l1(&g.b);
            if nb > 0.0 {
                s = s.min(dot(&c, &g.a) / nb);
            }
        }
        if !s.is_finite() {
            s = 1.0;
        }
        vec![s * shrink; cone.dim()]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn duality_pairing_is_nonpositive(
            cone in arb_cone(),
            w in prop::collection::vec(0.0f64..3.0, 6),
            c in prop::collection::vec(0.0f64..2.0, 3),
            shrink in 0.0f64..1.0,
        ) {
            let n = cone.dim();
            let (a, b) = conic_point(&cone, &w);
            prop_assert!(cone.primal_contains(&a, &b, 1e-9).unwrap());
            let c = c[..n].to_vec();
            let d = dual_point(&cone, c.clone(), shrink);
            prop_assert!(cone.dual_contains(&c, &d, 1e-9).unwrap());
            prop_assert!(dot(&d, &b) - dot(&c, &a) <= 1e-9);
        }

        #[test]
        fn dual_is_antimonotone_in_d(
            cone in arb_cone(),
            c in prop::collection::vec(0.0f64..2.0, 3),
            shrink in 0.0f64..1.0,
            cut in prop::collection::vec(0.0f64..1.0, 3),
        ) {
            let n = cone.dim();
            let c = c[..n].to_vec();
            let d = dual_point(&cone, c.clone(), shrink);
            let d2: Vec<f64> = d.iter().zip(&cut).map(|(x, f)| x * f).collect();
            prop_assert!(cone.dual_contains(&c, &d2, 1e-9).unwrap());
        }

        #[test]
        fn scaling_invariance(
            cone in arb_cone(),
            w in prop::collection::vec(0.0f64..3.0, 6),
            lambda in 0.01f64..100.0,
            factor in 0.1f64..10.0,
            c in prop::collection::vec(0.0f64..2.0, 3),
            d in prop::collection::vec(0.0f64..2.0, 3),
        ) {
            let n = cone.dim();
            let (a, b) = conic_point(&cone, &w);
            let sa: Vec<f64> = a.iter().map(|x| x * lambda).collect();
            let sb: Vec<f64> = b.iter().map(|x| x * lambda).collect();
            prop_assert!(cone.primal_contains(&sa, &sb, 1e-9 * lambda.max(1.0)).unwrap());

            let mut gens = cone.generators().to_vec();
            gens[0].a.iter_mut().for_each(|x| *x *= factor);
            gens[0].b.iter_mut().for_each(|x| *x *= factor);
            let scaled = ConeSpec::new(n, gens).unwrap();
            let (c, d) = (&c[..n], &d[..n]);
            let strict = cone.dual_violation(c, d).unwrap();
            // membership agrees away from the boundary
            if strict.abs() > 1e-6 {
                prop_assert_eq!(
                    cone.dual_contains(c, d, 0.0).unwrap(),
                    scaled.dual_contains(c, d, 0.0).unwrap()
                );
            }
        }

        #[test]
        fn g2_bound_on_conic_combinations(
            cone in arb_cone(),
            w in prop::collection::vec(0.0f64..3.0, 6),
        ) {
            let m = cone.validate_g2().unwrap();
            let (a, b) = conic_point(&cone, &w);
            prop_assert!(l1(&b) <= m * l1(&a) + 1e-9);
        }

        #[test]
        fn dual_contraction_bound(
            cone in arb_cone(),
            c in prop::collection::vec(0.0f64..2.0, 3),
            shrink in 0.0f64..1.0,
        ) {
            let n = cone.dim();
            let (gamma, a_hat, _) = cone.g3_witness().unwrap();
            let ct = a_hat.iter().copied().fold(0.0, f64::max) / gamma;
            let c = c[..n].to_vec();
            let d = dual_point(&cone, c.clone(), shrink);
            prop_assert!(l1(&d) <= ct * l1(&c) + 1e-9);
        }
    }
}
