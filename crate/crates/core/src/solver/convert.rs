//! Conversions between Dynkin and Radner dual paths.

use crate::cones::dot;
use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::{check_support, DynkinDual, Multipliers, PrimalPath, RadnerDual};
use crate::scenario_tree::{AdaptedVector, ScenarioTree};
use crate::solver::lp::{lp_solve, ConstraintKind, LinearProgram, Sense};

/// Largest generator-row relaxation accepted from a conversion LP.
const CONVERSION_SLACK: f64 = 1e-9;

/// `q_t = E_t p_{t+1}` for `t = 0..N`.
pub fn dynkin_to_radner(tree: &ScenarioTree, p: &DynkinDual) -> Result<RadnerDual> {
    let levels = (0..=tree.horizon())
        .map(|t| p.next_expectation(tree, t))
        .collect::<Result<Vec<_>>>()?;
    RadnerDual::new(levels)
}

/// Recovers a Dynkin dual `p_t = q_{t-1} + g_t` with `E_{t-1} g_t = 0`,
/// one small LP per time-`(t-1)` node. `p_{N+1}` is taken as `q_N`.
pub fn radner_to_dynkin(model: &Model, q: &RadnerDual, path: &PrimalPath, tol: f64) -> Result<(DynkinDual, Multipliers)> {
    let tree = &model.tree;
    let horizon = tree.horizon();
    let n = model.dim();
    if q.horizon() != horizon {
        return Err(VngError::LevelMismatch {
            expected: horizon,
            actual: q.horizon(),
        });
    }

    let mut p_levels = Vec::with_capacity(horizon + 1);
    let mut g_levels = Vec::with_capacity(horizon);
    for t in 1..=horizon {
        let mut p_t = AdaptedVector::zeros(tree, t, n);
        for &mu in tree.level(t - 1) {
            let base = q.q(t - 1).at(tree, mu).to_vec();
            let kids = tree.children(mu);
            if kids.len() == 1 {
                let nu = kids[0];
                let v = model.cone(nu).dual_violation(&base, q.q(t).at(tree, nu))?;
                if v > CONVERSION_SLACK.max(tol) {
                    return Err(VngError::ConversionInfeasible {
                        node: tree.label(mu).to_owned(),
                        time: t - 1,
                        message: format!("generator inequality violated by {v:e}"),
                    });
                }
                p_t.set(tree, nu, base);
                continue;
            }

            let mut lp = LinearProgram::new(Sense::Minimize, kids.len() * n);
            let eps = lp.add_var(1.0, 0.0, f64::INFINITY);
            for (k, &nu) in kids.iter().enumerate() {
                let qn = q.q(t).at(tree, nu);
                for g in model.cone(nu).generators() {
                    let mut coeffs: Vec<(usize, f64)> = (0..n)
                        .filter(|&i| g.a[i] != 0.0)
                        .map(|i| (k * n + i, -g.a[i]))
                        .collect();
                    coeffs.push((eps, -1.0));
                    lp.add_constraint(coeffs, ConstraintKind::Le, -dot(qn, &g.b));
                }
            }
            for i in 0..n {
                let coeffs = kids.iter().enumerate().map(|(k, &nu)| (k * n + i, tree.cond_prob(nu))).collect();
                lp.add_constraint(coeffs, ConstraintKind::Eq, base[i]);
            }
            let rep = lp_solve(&lp);
            if !rep.is_optimal() {
                return Err(VngError::Lp(format!(
                    "conversion LP at node `{}` ended with status {:?}",
                    tree.label(mu),
                    rep.status
                )));
            }
            if rep.objective > CONVERSION_SLACK {
                return Err(VngError::ConversionInfeasible {
                    node: tree.label(mu).to_owned(),
                    time: t - 1,
                    message: format!("smallest generator-row relaxation {:e}", rep.objective),
                });
            }
            for (k, &nu) in kids.iter().enumerate() {
                p_t.set(tree, nu, (0..n).map(|i| rep.primal[k * n + i].max(0.0)).collect());
            }
        }
        let q_prev = q.q(t - 1);
        let mut g_t = AdaptedVector::zeros(tree, t, n);
        for &nu in tree.level(t) {
            let parent = tree.parent(nu).expect("non-root");
            let g: Vec<f64> = p_t
                .at(tree, nu)
                .iter()
                .zip(q_prev.at(tree, parent))
                .map(|(p, q)| p - q)
                .collect();
            g_t.set(tree, nu, g);
        }
        p_levels.push(p_t);
        g_levels.push(g_t);
    }
    p_levels.push(q.q(horizon).clone());

    let p = DynkinDual::new(p_levels)?;
    let g = Multipliers::new(g_levels)?;
    let support = check_support(tree, path, &p, tol)?;
    if !support.ok {
        return Err(VngError::Verification(format!(
            "recovered dual does not support the path (worst residual {:e})",
            support.worst_residual
        )));
    }
    let mean = g.worst_conditional_mean(tree)?;
    if mean > 1e-9 {
        return Err(VngError::Verification(format!("multipliers have conditional mean {mean:e}")));
    }
    Ok((p, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::{ConeSpec, Generator, RandomCone};
    use crate::model_io::chain2;
    use crate::paths::{check_dynkin, check_radner_support};
    use crate::scenario_tree::ScenarioNode;
    use crate::solver::certify::certify_rapid;

    fn constant(tree: &ScenarioTree, vals: &[f64]) -> Vec<AdaptedVector> {
        vals.iter()
            .enumerate()
            .map(|(t, v)| AdaptedVector::constant(tree, t, &[*v]))
            .collect()
    }

    #[test]
    fn chain2_forward() {
        let m = chain2(3);
        let mut levels: Vec<AdaptedVector> = (1..=3)
            .map(|t| AdaptedVector::constant(&m.tree, t, &[0.5f64.powi(t as i32 - 1)]))
            .collect();
        levels.push(AdaptedVector::constant(&m.tree, 3, &[0.125]));
        let p = DynkinDual::new(levels).unwrap();
        let q = dynkin_to_radner(&m.tree, &p).unwrap();
        for t in 0..=3 {
            assert_eq!(q.q(t).values()[0][0], 0.5f64.powi(t as i32));
            // deterministic: q_t = p_{t+1}
            assert_eq!(q.q(t).values()[0], p.p(t + 1).values()[0]);
        }
    }

    #[test]
    fn binary_average() {
        let tree = ScenarioTree::build(
            &[
                ScenarioNode::new("r", 0, None, 1.0),
                ScenarioNode::new("a", 1, Some("r"), 1.0),
                ScenarioNode::new("a.0", 2, Some("a"), 0.5),
                ScenarioNode::new("a.1", 2, Some("a"), 0.5),
            ],
            1,
        )
        .unwrap();
        let p = DynkinDual::new(vec![
            AdaptedVector::new(1, vec![vec![1.0]]).unwrap(),
            AdaptedVector::new(2, vec![vec![0.4], vec![0.6]]).unwrap(),
            AdaptedVector::new(2, vec![vec![0.2], vec![0.3]]).unwrap(),
        ])
        .unwrap();
        let q = dynkin_to_radner(&tree, &p).unwrap();
        assert!((q.q(1).values()[0][0] - 0.5).abs() < 1e-15);
        assert_eq!(q.q(0).values()[0][0], 1.0);
        assert_eq!(q.q(2).values(), &[vec![0.2], vec![0.3]]);
    }

    #[test]
    fn chain2_backward_has_zero_multipliers() {
        let m = chain2(3);
        let x = PrimalPath::new(constant(&m.tree, &[1.0, 2.0, 4.0, 8.0])).unwrap();
        let q = RadnerDual::new(constant(&m.tree, &[1.0, 0.5, 0.25, 0.125])).unwrap();
        let (p, g) = radner_to_dynkin(&m, &q, &x, 1e-9).unwrap();
        assert!(g.is_identically_zero());
        for t in 1..=3 {
            assert_eq!(p.p(t).values()[0][0], 0.5f64.powi(t as i32 - 1));
        }
    }

    #[test]
    fn split_cones_round_trip() {
        let tree = ScenarioTree::build(
            &[
                ScenarioNode::new("r", 0, None, 1.0),
                ScenarioNode::new("u", 1, Some("r"), 0.5),
                ScenarioNode::new("d", 1, Some("r"), 0.5),
            ],
            1,
        )
        .unwrap();
        let up = ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![2.0])]).unwrap();
        let dn = ConeSpec::new(1, vec![Generator::new(vec![1.0], vec![1.0])]).unwrap();
        let cones = RandomCone::new(&tree, vec![None, Some(up), Some(dn)]).unwrap();
        let m = Model::new(tree, cones, vec![1.0], false).unwrap();
        let x = PrimalPath::new(vec![
            AdaptedVector::new(0, vec![vec![1.0]]).unwrap(),
            AdaptedVector::new(1, vec![vec![2.0], vec![1.0]]).unwrap(),
        ])
        .unwrap();
        let p = certify_rapid(&m, &x, 1e-7).unwrap().into_dual().unwrap();
        let q = dynkin_to_radner(&m.tree, &p).unwrap();
        assert!(check_radner_support(&m.tree, &x, &q, 1e-9).unwrap().ok);
        let (p2, g) = radner_to_dynkin(&m, &q, &x, 1e-9).unwrap();
        assert!(check_dynkin(&m.tree, &m.cones, &p2, 1e-9).unwrap().ok);
        assert!(g.worst_conditional_mean(&m.tree).unwrap() <= 1e-12);
    }

    #[test]
    fn inconsistent_dual_is_rejected() {
        let m = chain2(2);
        let x = PrimalPath::new(constant(&m.tree, &[1.0, 2.0, 4.0])).unwrap();
        let q = RadnerDual::new(constant(&m.tree, &[1.0, 1.0, 1.0])).unwrap();
        assert!(radner_to_dynkin(&m, &q, &x, 1e-9).is_err());
    }
}
