//! Two-phase primal simplex on a sparse-row tableau.
//!
//! The engine is generic over [`LpScalar`] so that the same pivoting code runs
//! in floating point and in exact rational arithmetic. Pivoting is fully
//! deterministic: Dantzig pricing with lowest-index tie breaking, switching to
//! Bland's rule after a run of degenerate pivots, and a Bland ratio test.
//!
//! Tableau fill-in makes this engine slow on large tree-wide programs; those
//! go through [`lp_solve_sparse`], a revised simplex that reports no duals.

use std::fmt::Debug;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Consecutive degenerate pivots tolerated before switching to Bland pricing.
const DEGENERATE_STREAK: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
    Feasibility,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

/// A linear program over bounded variables. Bounds default to `[0, +inf)`;
/// either side may be infinite.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(sense: Sense, num_vars: usize) -> Self {
        Self {
            sense,
            objective: vec![0.0; num_vars],
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable with bounds `[lower, upper]` and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, kind: ConstraintKind, rhs: f64) -> usize {
        self.constraints.push(Constraint { coeffs, kind, rhs });
        self.constraints.len() - 1
    }

    fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err("bound vectors do not match variable count".into());
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err("non-finite objective coefficient".into());
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(format!("invalid bounds on variable {j}"));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(format!("empty bound range on variable {j}"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(format!("non-finite rhs in constraint {i}"));
            }
            for &(j, a) in &c.coeffs {
                if j >= n {
                    return Err(format!("constraint {i} references variable {j} of {n}"));
                }
                if !a.is_finite() {
                    return Err(format!("non-finite coefficient in constraint {i}"));
                }
            }
        }
        Ok(())
    }

    /// Residual above which a reported optimum counts as a numerical failure.
    fn residual_limit(&self) -> f64 {
        let scale = self.constraints.iter().fold(1.0_f64, |m, c| m.max(c.rhs.abs()));
        1e-7 * scale
    }

    /// Largest violation of constraints and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match c.kind {
                ConstraintKind::Le => lhs - c.rhs,
                ConstraintKind::Ge => c.rhs - lhs,
                ConstraintKind::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Checks a Farkas-type certificate `y` (one multiplier per constraint):
    /// `y_i <= 0` on `<=` rows, `y_i >= 0` on `>=` rows, and
    /// `sup { (Σ y_i a_i)·x : lower <= x <= upper } < Σ y_i rhs_i`.
    /// Returns the certified margin (positive means infeasibility is proven).
    pub fn farkas_margin(&self, y: &[f64], tol: f64) -> Option<f64> {
        if y.len() != self.constraints.len() {
            return None;
        }
        let mut r = vec![0.0; self.num_vars()];
        let mut rhs = 0.0;
        for (c, &yi) in self.constraints.iter().zip(y) {
            let ok = match c.kind {
                ConstraintKind::Le => yi <= tol,
                ConstraintKind::Ge => yi >= -tol,
                ConstraintKind::Eq => true,
            };
            if !ok {
                return None;
            }
            for &(j, a) in &c.coeffs {
                r[j] += yi * a;
            }
            rhs += yi * c.rhs;
        }
        let mut sup = 0.0;
        for (j, &rj) in r.iter().enumerate() {
            let bound = if rj > tol {
                self.upper[j]
            } else if rj < -tol {
                self.lower[j]
            } else {
                continue;
            };
            if !bound.is_finite() {
                return None;
            }
            sup += rj * bound;
        }
        Some(rhs - sup)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Set by model-level callers when an optimum is numerically zero.
    DegenerateModel,
    NumericalFailure,
}

/// Outcome of [`lp_solve`]. Duals follow the sense of the stated problem:
/// for a maximization, `<=` rows carry non-negative multipliers.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub status: LpStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Vec<f64>,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub wall_time: Duration,
    /// Phase-one multipliers proving infeasibility (see
    /// [`LinearProgram::farkas_margin`]).
    pub farkas: Option<Vec<f64>>,
    /// Improving direction when unbounded.
    pub ray: Option<Vec<f64>>,
    pub message: Option<String>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Exact-arithmetic counterpart of [`SolveReport`].
#[derive(Clone, Debug)]
pub struct ExactSolveReport {
    pub status: LpStatus,
    pub objective: BigRational,
    pub primal: Vec<BigRational>,
    pub duals: Vec<BigRational>,
    pub iterations: usize,
}

impl ExactSolveReport {
    pub fn primal_f64(&self) -> Vec<f64> {
        self.primal.iter().map(rational_to_f64).collect()
    }

    pub fn objective_f64(&self) -> f64 {
        rational_to_f64(&self.objective)
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Arithmetic used by the tableau.
pub trait LpScalar: Clone + Debug + Num + Signed + PartialOrd {
    const EXACT: bool;
    fn from_f64_exact(x: f64) -> Self;
    fn as_f64(&self) -> f64;
    /// Reduced-cost threshold for pricing.
    fn eps_cost() -> Self;
    /// Smallest admissible pivot magnitude.
    fn eps_pivot() -> Self;
    /// Entries at or below this magnitude are dropped after elimination.
    fn eps_drop() -> Self;
    /// Whether `a` and `b` count as tied in pricing and ratio tests.
    fn tied(a: &Self, b: &Self) -> bool;
}

impl LpScalar for f64 {
    const EXACT: bool = false;
    fn from_f64_exact(x: f64) -> Self {
        x
    }
    fn as_f64(&self) -> f64 {
        *self
    }
    fn eps_cost() -> Self {
        1e-9
    }
    fn eps_pivot() -> Self {
        1e-9
    }
    fn eps_drop() -> Self {
        1e-14
    }
    fn tied(a: &Self, b: &Self) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
    }
}

impl LpScalar for BigRational {
    const EXACT: bool = true;
    fn from_f64_exact(x: f64) -> Self {
        BigRational::from_f64(x).expect("finite f64")
    }
    fn as_f64(&self) -> f64 {
        rational_to_f64(self)
    }
    fn eps_cost() -> Self {
        BigRational::zero()
    }
    fn eps_pivot() -> Self {
        BigRational::zero()
    }
    fn eps_drop() -> Self {
        BigRational::zero()
    }
    fn tied(a: &Self, b: &Self) -> bool {
        a == b
    }
}

/// Solves `lp` in floating point.
pub fn lp_solve(lp: &LinearProgram) -> SolveReport {
    let start = Instant::now();
    if let Err(msg) = lp.validate() {
        return SolveReport {
            status: LpStatus::NumericalFailure,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: Vec::new(),
            primal_residual: f64::INFINITY,
            dual_residual: f64::INFINITY,
            iterations: 0,
            wall_time: start.elapsed(),
            farkas: None,
            ray: None,
            message: Some(msg),
        };
    }
    let raw = solve_generic::<f64>(lp);
    let primal_residual = if raw.status == LpStatus::Optimal {
        lp.primal_residual(&raw.primal)
    } else {
        f64::INFINITY
    };
    let (status, message) = if raw.status == LpStatus::Optimal && primal_residual > lp.residual_limit() {
        (LpStatus::NumericalFailure, Some(format!("optimal basis violates the constraints by {primal_residual:e}")))
    } else {
        (raw.status, raw.message)
    };
    SolveReport {
        status,
        objective: raw.objective,
        primal: raw.primal,
        duals: raw.duals,
        primal_residual,
        dual_residual: raw.dual_residual,
        iterations: raw.iterations,
        wall_time: start.elapsed(),
        farkas: raw.farkas,
        ray: raw.ray,
        message,
    }
}

/// Solves `lp` in exact rational arithmetic. Every finite `f64` is a dyadic
/// rational, so the data are converted without loss.
pub fn lp_solve_exact(lp: &LinearProgram) -> ExactSolveReport {
    if lp.validate().is_err() {
        return ExactSolveReport {
            status: LpStatus::NumericalFailure,
            objective: BigRational::zero(),
            primal: Vec::new(),
            duals: Vec::new(),
            iterations: 0,
        };
    }
    let raw = solve_generic::<BigRational>(lp);
    ExactSolveReport {
        status: raw.status,
        objective: raw.objective,
        primal: raw.primal,
        duals: raw.duals,
        iterations: raw.iterations,
    }
}

/// Solves `lp` with a revised simplex on sparse LU factors. Suited to large
/// tree-wide programs; reports primal values only (`duals` is empty).
pub fn lp_solve_sparse(lp: &LinearProgram) -> SolveReport {
    let start = Instant::now();
    let mut report = SolveReport {
        status: LpStatus::NumericalFailure,
        objective: f64::NAN,
        primal: Vec::new(),
        duals: Vec::new(),
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        iterations: 0,
        wall_time: Duration::ZERO,
        farkas: None,
        ray: None,
        message: None,
    };
    if let Err(msg) = lp.validate() {
        report.message = Some(msg);
        report.wall_time = start.elapsed();
        return report;
    }
    let direction = match lp.sense {
        Sense::Maximize => microlp::OptimizationDirection::Maximize,
        Sense::Minimize | Sense::Feasibility => microlp::OptimizationDirection::Minimize,
    };
    let mut problem = microlp::Problem::new(direction);
    let vars: Vec<microlp::Variable> = (0..lp.num_vars())
        .map(|j| {
            let cost = if lp.sense == Sense::Feasibility { 0.0 } else { lp.objective[j] };
            problem.add_var(cost, (lp.lower[j], lp.upper[j]))
        })
        .collect();
    for c in &lp.constraints {
        let expr: Vec<(microlp::Variable, f64)> = c.coeffs.iter().map(|&(j, a)| (vars[j], a)).collect();
        let op = match c.kind {
            ConstraintKind::Le => microlp::ComparisonOp::Le,
            ConstraintKind::Ge => microlp::ComparisonOp::Ge,
            ConstraintKind::Eq => microlp::ComparisonOp::Eq,
        };
        problem.add_constraint(&expr[..], op, c.rhs);
    }
    match problem.solve().map(|o| o.into_solution()) {
        Ok(Ok(solution)) => {
            report.status = LpStatus::Optimal;
            report.objective = if lp.sense == Sense::Feasibility { 0.0 } else { solution.objective() };
            report.primal = vars.iter().map(|&v| solution.var_value(v)).collect();
            report.primal_residual = lp.primal_residual(&report.primal);
            if report.primal_residual > lp.residual_limit() {
                report.status = LpStatus::NumericalFailure;
                report.message = Some(format!("solution violates the constraints by {:e}", report.primal_residual));
            }
            report.iterations = solution.stats().lp_iterations as usize;
        }
        Ok(Err(_)) => report.message = Some("solve interrupted".into()),
        Err(microlp::Error::Infeasible) => report.status = LpStatus::Infeasible,
        Err(microlp::Error::Unbounded) => report.status = LpStatus::Unbounded,
        Err(e) => report.message = Some(e.to_string()),
    }
    report.wall_time = start.elapsed();
    report
}

struct RawSolution<T> {
    status: LpStatus,
    objective: T,
    primal: Vec<T>,
    duals: Vec<T>,
    dual_residual: f64,
    iterations: usize,
    farkas: Option<Vec<f64>>,
    ray: Option<Vec<f64>>,
    message: Option<String>,
}

#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = lower + col
    Shift { col: usize },
    /// x = upper - col
    Mirror { col: usize },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau<T> {
    rows: Vec<Vec<(usize, T)>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Reduced costs.
    cost: Vec<T>,
    /// Current objective value (minimization form).
    value: T,
    kinds: Vec<ColKind>,
    /// Column whose reduced cost encodes the multiplier of each row.
    identity: Vec<usize>,
    /// Row still present (redundant equality rows are dropped).
    active: Vec<bool>,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded(usize),
    IterationLimit,
}

impl<T: LpScalar> Tableau<T> {
    fn entry(&self, row: usize, col: usize) -> Option<&T> {
        let r = &self.rows[row];
        r.binary_search_by_key(&col, |e| e.0).ok().map(|k| &r[k].1)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.entry(r, c).cloned().expect("pivot entry present");
        let row_r: Vec<(usize, T)> = self.rows[r]
            .iter()
            .map(|(j, v)| (*j, if *j == c { T::one() } else { v.clone() / piv.clone() }))
            .collect();
        let rhs_r = self.rhs[r].clone() / piv;
        let drop = T::eps_drop();

        for i in 0..self.rows.len() {
            if i == r || !self.active[i] {
                continue;
            }
            let factor = match self.entry(i, c) {
                Some(f) if !f.is_zero() => f.clone(),
                _ => continue,
            };
            let old = std::mem::take(&mut self.rows[i]);
            let mut merged = Vec::with_capacity(old.len() + row_r.len());
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < row_r.len() {
                let ja = old.get(a).map_or(usize::MAX, |e| e.0);
                let jb = row_r.get(b).map_or(usize::MAX, |e| e.0);
                if ja < jb {
                    merged.push(old[a].clone());
                    a += 1;
                } else if jb < ja {
                    let v = -(factor.clone() * row_r[b].1.clone());
                    if v.abs() > drop {
                        merged.push((jb, v));
                    }
                    b += 1;
                } else {
                    if ja != c {
                        let v = old[a].1.clone() - factor.clone() * row_r[b].1.clone();
                        if v.abs() > drop {
                            merged.push((ja, v));
                        }
                    }
                    a += 1;
                    b += 1;
                }
            }
            self.rows[i] = merged;
            let v = self.rhs[i].clone() - factor * rhs_r.clone();
            self.rhs[i] = if !T::EXACT && v.abs() <= drop { T::zero() } else { v };
        }

        let dc = self.cost[c].clone();
        if !dc.is_zero() {
            for (j, v) in &row_r {
                let nv = self.cost[*j].clone() - dc.clone() * v.clone();
                self.cost[*j] = if !T::EXACT && nv.abs() <= drop { T::zero() } else { nv };
            }
            self.cost[c] = T::zero();
            self.value = self.value.clone() + dc * rhs_r.clone();
        }
        self.rows[r] = row_r;
        self.rhs[r] = rhs_r;
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn run(&mut self, eligible: &dyn Fn(usize) -> bool, max_iter: usize) -> PhaseOutcome {
        let eps_cost = T::eps_cost();
        let eps_piv = T::eps_pivot();
        let mut streak = 0usize;
        let mut local = 0usize;
        loop {
            if local >= max_iter {
                return PhaseOutcome::IterationLimit;
            }
            let bland = streak >= DEGENERATE_STREAK;
            let mut enter: Option<usize> = None;
            for j in 0..self.cost.len() {
                let d = &self.cost[j];
                if !(*d < -eps_cost.clone()) || !eligible(j) {
                    continue;
                }
                match enter {
                    None => {
                        enter = Some(j);
                        if bland {
                            break;
                        }
                    }
                    Some(e) => {
                        if *d < self.cost[e] && !T::tied(d, &self.cost[e]) {
                            enter = Some(j);
                        }
                    }
                }
            }
            let Some(c) = enter else {
                return PhaseOutcome::Optimal;
            };

            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                if !self.active[i] {
                    continue;
                }
                let Some(a) = self.entry(i, c) else { continue };
                if !(*a > eps_piv) {
                    continue;
                }
                let ratio = if self.rhs[i].is_negative() {
                    T::zero()
                } else {
                    self.rhs[i].clone() / a.clone()
                };
                match &leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        if T::tied(&ratio, br) {
                            if self.basis[i] < self.basis[*bi] {
                                leave = Some((i, ratio));
                            }
                        } else if ratio < *br {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return PhaseOutcome::Unbounded(c);
            };
            if ratio.is_zero() {
                streak += 1;
            } else {
                streak = 0;
            }
            self.pivot(r, c);
            local += 1;
        }
    }

    fn reset_costs(&mut self, costs: &[T]) {
        self.cost = costs.to_vec();
        self.value = T::zero();
        for i in 0..self.rows.len() {
            if !self.active[i] {
                continue;
            }
            let cb = costs[self.basis[i]].clone();
            if cb.is_zero() {
                continue;
            }
            for (j, v) in &self.rows[i] {
                self.cost[*j] = self.cost[*j].clone() - cb.clone() * v.clone();
            }
            self.value = self.value.clone() + cb * self.rhs[i].clone();
        }
    }

    /// Multiplier of each row in minimization form: `y_i = c_id - d_id`.
    fn row_duals(&self, costs: &[T]) -> Vec<T> {
        (0..self.rows.len())
            .map(|i| {
                if !self.active[i] {
                    return T::zero();
                }
                let col = self.identity[i];
                costs[col].clone() - self.cost[col].clone()
            })
            .collect()
    }

    fn column_values(&self, ncols: usize) -> Vec<T> {
        let mut vals = vec![T::zero(); ncols];
        for i in 0..self.rows.len() {
            if self.active[i] {
                vals[self.basis[i]] = self.rhs[i].clone();
            }
        }
        vals
    }
}

fn solve_generic<T: LpScalar>(lp: &LinearProgram) -> RawSolution<T> {
    let n = lp.num_vars();

    // Structural columns.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    for j in 0..n {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let m = if lo.is_finite() {
            VarMap::Shift { col: ncols }
        } else if hi.is_finite() {
            VarMap::Mirror { col: ncols }
        } else {
            ncols += 1;
            VarMap::Split {
                pos: ncols - 1,
                neg: ncols,
            }
        };
        ncols += 1;
        maps.push(m);
    }
    let n_struct = ncols;

    // Rows in structural coordinates: (coeffs, kind, rhs, original index).
    let mut rows: Vec<(Vec<(usize, T)>, ConstraintKind, T, Option<usize>)> = Vec::new();
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut rhs = T::from_f64_exact(c.rhs);
        let mut coeffs: Vec<(usize, T)> = Vec::with_capacity(c.coeffs.len());
        for &(j, a) in &c.coeffs {
            if a == 0.0 {
                continue;
            }
            let at = T::from_f64_exact(a);
            match maps[j] {
                VarMap::Shift { col } => {
                    rhs = rhs - at.clone() * T::from_f64_exact(lp.lower[j]);
                    coeffs.push((col, at));
                }
                VarMap::Mirror { col } => {
                    rhs = rhs - at.clone() * T::from_f64_exact(lp.upper[j]);
                    coeffs.push((col, -at));
                }
                VarMap::Split { pos, neg } => {
                    coeffs.push((pos, at.clone()));
                    coeffs.push((neg, -at));
                }
            }
        }
        rows.push((merge_sorted(coeffs), c.kind, rhs, Some(i)));
    }
    for j in 0..n {
        if let VarMap::Shift { col } = maps[j] {
            if lp.upper[j].is_finite() {
                let width = T::from_f64_exact(lp.upper[j]) - T::from_f64_exact(lp.lower[j]);
                rows.push((vec![(col, T::one())], ConstraintKind::Le, width, None));
            }
        }
    }

    // Normalize rhs >= 0, add slack / surplus / artificial columns.
    let m = rows.len();
    let mut flipped = vec![false; m];
    let mut kinds = vec![ColKind::Structural; n_struct];
    let mut tab_rows = Vec::with_capacity(m);
    let mut rhs_vec = Vec::with_capacity(m);
    let mut basis = vec![0usize; m];
    let mut identity = vec![0usize; m];
    for (i, (mut coeffs, mut kind, mut rhs, _)) in rows.iter().cloned().enumerate() {
        if rhs.is_negative() {
            rhs = -rhs;
            for e in coeffs.iter_mut() {
                e.1 = -e.1.clone();
            }
            kind = match kind {
                ConstraintKind::Le => ConstraintKind::Ge,
                ConstraintKind::Ge => ConstraintKind::Le,
                ConstraintKind::Eq => ConstraintKind::Eq,
            };
            flipped[i] = true;
        }
        match kind {
            ConstraintKind::Le => {
                let s = kinds.len();
                kinds.push(ColKind::Slack);
                coeffs.push((s, T::one()));
                basis[i] = s;
                identity[i] = s;
            }
            ConstraintKind::Ge => {
                let s = kinds.len();
                kinds.push(ColKind::Slack);
                coeffs.push((s, -T::one()));
                let a = kinds.len();
                kinds.push(ColKind::Artificial);
                coeffs.push((a, T::one()));
                basis[i] = a;
                identity[i] = a;
            }
            ConstraintKind::Eq => {
                let a = kinds.len();
                kinds.push(ColKind::Artificial);
                coeffs.push((a, T::one()));
                basis[i] = a;
                identity[i] = a;
            }
        }
        tab_rows.push(coeffs);
        rhs_vec.push(rhs);
    }
    let total = kinds.len();
    let max_iter = 50_000 + 50 * (m + total);

    let mut tab = Tableau {
        rows: tab_rows,
        rhs: rhs_vec,
        basis,
        cost: vec![T::zero(); total],
        value: T::zero(),
        kinds: kinds.clone(),
        identity,
        active: vec![true; m],
        iterations: 0,
    };

    // Phase one.
    let has_artificial = kinds.iter().any(|k| *k == ColKind::Artificial);
    let mut farkas = None;
    if has_artificial {
        let phase1: Vec<T> = kinds
            .iter()
            .map(|k| if *k == ColKind::Artificial { T::one() } else { T::zero() })
            .collect();
        tab.reset_costs(&phase1);
        match tab.run(&|_| true, max_iter) {
            PhaseOutcome::Optimal => {}
            PhaseOutcome::Unbounded(_) | PhaseOutcome::IterationLimit => {
                return failure(n, m, tab.iterations, "phase one did not terminate");
            }
        }
        let scale = tab
            .rhs
            .iter()
            .map(|r| r.as_f64().abs())
            .fold(1.0, f64::max);
        let infeasible = if T::EXACT {
            tab.value.is_positive()
        } else {
            tab.value.as_f64() > 1e-9 * scale
        };
        if infeasible {
            let y = tab.row_duals(&phase1);
            let mut cert = vec![0.0; lp.constraints.len()];
            for (i, row) in rows.iter().enumerate() {
                if let Some(orig) = row.3 {
                    let v = y[i].as_f64();
                    cert[orig] = if flipped[i] { -v } else { v };
                }
            }
            return RawSolution {
                status: LpStatus::Infeasible,
                objective: T::zero(),
                primal: Vec::new(),
                duals: Vec::new(),
                dual_residual: f64::INFINITY,
                iterations: tab.iterations,
                farkas: Some(cert),
                ray: None,
                message: Some(format!("phase-one infeasibility {:e}", tab.value.as_f64())),
            };
        }
        // Drive artificials out of the basis; drop redundant rows.
        for i in 0..m {
            if tab.kinds[tab.basis[i]] != ColKind::Artificial {
                continue;
            }
            let col = tab.rows[i]
                .iter()
                .filter(|(j, v)| {
                    tab.kinds[*j] != ColKind::Artificial && v.abs() > T::eps_pivot()
                })
                .max_by(|a, b| {
                    a.1.abs()
                        .partial_cmp(&b.1.abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(b.0.cmp(&a.0))
                })
                .map(|e| e.0);
            match col {
                Some(c) => tab.pivot(i, c),
                None => tab.active[i] = false,
            }
        }
    }

    // Phase two.
    let mut costs = vec![T::zero(); total];
    let sign = match lp.sense {
        Sense::Maximize => -1.0,
        _ => 1.0,
    };
    let obj_constant = {
        let mut k = 0.0;
        if lp.sense != Sense::Feasibility {
            for j in 0..n {
                let c = sign * lp.objective[j];
                match maps[j] {
                    VarMap::Shift { col } => {
                        costs[col] = T::from_f64_exact(c);
                        k += c * lp.lower[j];
                    }
                    VarMap::Mirror { col } => {
                        costs[col] = -T::from_f64_exact(c);
                        k += c * lp.upper[j];
                    }
                    VarMap::Split { pos, neg } => {
                        costs[pos] = T::from_f64_exact(c);
                        costs[neg] = -T::from_f64_exact(c);
                    }
                }
            }
        }
        k
    };
    tab.reset_costs(&costs);
    let kinds_ref = kinds.clone();
    let outcome = tab.run(&|j| kinds_ref[j] != ColKind::Artificial, max_iter);

    let recover = |vals: &[T]| -> Vec<T> {
        (0..n)
            .map(|j| match maps[j] {
                VarMap::Shift { col } => T::from_f64_exact(lp.lower[j]) + vals[col].clone(),
                VarMap::Mirror { col } => T::from_f64_exact(lp.upper[j]) - vals[col].clone(),
                VarMap::Split { pos, neg } => vals[pos].clone() - vals[neg].clone(),
            })
            .collect()
    };

    match outcome {
        PhaseOutcome::IterationLimit => failure(n, m, tab.iterations, "iteration limit in phase two"),
        PhaseOutcome::Unbounded(c) => {
            let mut dir = vec![T::zero(); total];
            dir[c] = T::one();
            for i in 0..m {
                if !tab.active[i] {
                    continue;
                }
                if let Some(a) = tab.entry(i, c) {
                    dir[tab.basis[i]] = -a.clone();
                }
            }
            let ray = (0..n)
                .map(|j| match maps[j] {
                    VarMap::Shift { col } => dir[col].as_f64(),
                    VarMap::Mirror { col } => -dir[col].as_f64(),
                    VarMap::Split { pos, neg } => dir[pos].as_f64() - dir[neg].as_f64(),
                })
                .collect();
            RawSolution {
                status: LpStatus::Unbounded,
                objective: T::zero(),
                primal: Vec::new(),
                duals: Vec::new(),
                dual_residual: f64::INFINITY,
                iterations: tab.iterations,
                farkas: None,
                ray: Some(ray),
                message: None,
            }
        }
        PhaseOutcome::Optimal => {
            let vals = tab.column_values(total);
            let primal = recover(&vals);
            let y = tab.row_duals(&costs);
            let mut duals = vec![T::zero(); lp.constraints.len()];
            for (i, row) in rows.iter().enumerate() {
                if let Some(orig) = row.3 {
                    let mut v = y[i].clone();
                    if flipped[i] {
                        v = -v;
                    }
                    if lp.sense == Sense::Maximize {
                        v = -v;
                    }
                    duals[orig] = v;
                }
            }
            let dual_residual = tab
                .cost
                .iter()
                .zip(&kinds)
                .filter(|(_, k)| **k != ColKind::Artificial)
                .map(|(d, _)| (-d.as_f64()).max(0.0))
                .fold(0.0, f64::max);
            let mut objective = tab.value.clone() + T::from_f64_exact(obj_constant);
            if lp.sense == Sense::Maximize {
                objective = -objective;
            }
            RawSolution {
                status: LpStatus::Optimal,
                objective,
                primal,
                duals,
                dual_residual,
                iterations: tab.iterations,
                farkas: farkas.take(),
                ray: None,
                message: None,
            }
        }
    }
}

fn failure<T: LpScalar>(_n: usize, _m: usize, iterations: usize, msg: &str) -> RawSolution<T> {
    RawSolution {
        status: LpStatus::NumericalFailure,
        objective: T::zero(),
        primal: Vec::new(),
        duals: Vec::new(),
        dual_residual: f64::INFINITY,
        iterations,
        farkas: None,
        ray: None,
        message: Some(msg.to_owned()),
    }
}

fn merge_sorted<T: LpScalar>(mut coeffs: Vec<(usize, T)>) -> Vec<(usize, T)> {
    coeffs.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, T)> = Vec::with_capacity(coeffs.len());
    for (j, v) in coeffs {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 = last.1.clone() + v,
            _ => out.push((j, v)),
        }
    }
    out.retain(|e| !e.1.is_zero());
    out
}

/// Exact conversion helper used by tests comparing both arithmetic modes.
pub fn to_rational(x: f64) -> BigRational {
    BigRational::from_f64(x).unwrap_or_else(|| BigRational::from_integer(BigInt::zero()))
}
