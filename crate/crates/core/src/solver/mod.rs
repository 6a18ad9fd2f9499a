//! LP engine, the log-optimal path solver, rapidity certification, and dual
//! conversions.

pub mod certify;
pub mod convert;
pub mod log_optimal;
pub mod lp;

use crate::error::{Result, VngError};
use crate::model::Model;
use crate::paths::{DynkinDual, PrimalPath, RadnerDual};

pub use certify::{certify_rapid, certify_rapid_with, verify_certificate, Arithmetic, Certification, InfeasibilityCertificate};
pub use convert::{dynkin_to_radner, radner_to_dynkin};
pub use log_optimal::{solve_log_optimal, BarrierOptions, LogOptimal};
pub use lp::{lp_solve, lp_solve_exact, lp_solve_sparse, ConstraintKind, LinearProgram, LpStatus, Sense, SolveReport};

/// Maximizes `E[e·x_N]` over feasible paths from `x_0`. The status is
/// [`LpStatus::DegenerateModel`] when the optimum is at most `tol`.
pub fn max_terminal_value(model: &Model, tol: f64) -> SolveReport {
    let tree = &model.tree;
    let n = model.dim();
    let mut offset = vec![usize::MAX; tree.num_nodes()];
    let mut nvars = 0;
    for t in 1..=tree.horizon() {
        for &id in tree.level(t) {
            offset[id] = nvars;
            nvars += model.cone(id).generators().len();
        }
    }
    let mut lp = LinearProgram::new(Sense::Maximize, nvars);
    for &leaf in tree.level(tree.horizon()) {
        let p = tree.unconditional_prob(leaf);
        for (k, g) in model.cone(leaf).generators().iter().enumerate() {
            lp.objective[offset[leaf] + k] = p * g.b.iter().sum::<f64>();
        }
    }
    for t in 1..=tree.horizon() {
        for &id in tree.level(t) {
            let parent = tree.parent(id).expect("non-root");
            for i in 0..n {
                let mut coeffs: Vec<(usize, f64)> = model
                    .cone(id)
                    .generators()
                    .iter()
                    .enumerate()
                    .filter(|(_, g)| g.a[i] != 0.0)
                    .map(|(k, g)| (offset[id] + k, g.a[i]))
                    .collect();
                let rhs = if t == 1 {
                    model.x0[i]
                } else {
                    for (k, g) in model.cone(parent).generators().iter().enumerate() {
                        if g.b[i] != 0.0 {
                            coeffs.push((offset[parent] + k, -g.b[i]));
                        }
                    }
                    0.0
                };
                lp.add_constraint(coeffs, ConstraintKind::Eq, rhs);
            }
        }
    }
    let mut rep = lp_solve_sparse(&lp);
    if rep.is_optimal() && rep.objective <= tol {
        rep.status = LpStatus::DegenerateModel;
    }
    rep
}

/// A certified finite rapid path with both supporting duals.
#[derive(Clone, Debug)]
pub struct RapidSolution {
    pub path: PrimalPath,
    pub dynkin: DynkinDual,
    pub radner: RadnerDual,
    pub log_optimal: LogOptimal,
    pub min_total_slack: f64,
}

/// Log-optimal path, certified by LP, then converted to a Radner dual.
pub fn solve_rapid(model: &Model, tol: f64) -> Result<RapidSolution> {
    let guard = max_terminal_value(model, tol);
    match guard.status {
        LpStatus::Optimal => {}
        LpStatus::DegenerateModel => {
            return Err(VngError::DegenerateModel {
                value: guard.objective,
            })
        }
        s => return Err(VngError::Lp(format!("terminal value LP ended with status {s:?}"))),
    }
    let log_optimal = solve_log_optimal(model, None, &BarrierOptions::default())?;
    let cert = certify_rapid(model, &log_optimal.path, tol)?;
    let min_total_slack = cert.min_total_slack();
    let dynkin = cert.into_dual()?;
    let radner = dynkin_to_radner(&model.tree, &dynkin)?;
    Ok(RapidSolution {
        path: log_optimal.path.clone(),
        dynkin,
        radner,
        log_optimal,
        min_total_slack,
    })
}
