//! The discrete forward-backward-forward iteration for bilevel equilibrium
//! problems.
//!
//! One step reads
//!
//! ```text
//! y_n     = J_{lambda_n}^g (x_n - lambda_n beta_n B x_n)
//! x_{n+1} = y_n + lambda_n beta_n (B x_n - B y_n)
//! ```
//!
//! Iterates are deliberately not projected back onto `K` between steps; the
//! recursion as printed leaves `x_{n+1}` free.

use crate::bifunctions::EquilibriumBifunction;
use crate::error::{Result, SolverError};
use crate::geometry::{BoxSet, Point};
use crate::operators::MonotoneMap;
use crate::schedule::Schedule;

pub const DEFAULT_STOP_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const ESTIMATE_GRID: usize = 21;

/// A complete bilevel equilibrium problem: lower-level operator `B` defining
/// `f(x, y) = <Bx, y - x>`, upper-level bifunction `g`, and the box `K`.
#[derive(Clone, Debug)]
pub struct BepInstance {
    pub lower: MonotoneMap,
    pub upper: EquilibriumBifunction,
    pub k: BoxSet,
}

impl BepInstance {
    pub fn new(lower: MonotoneMap, upper: EquilibriumBifunction, k: BoxSet) -> Result<Self> {
        if lower.dim != k.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: k.dim(),
                got: lower.dim,
            });
        }
        if upper.feasible_set != k {
            return Err(SolverError::InvalidParameter(
                "upper-level feasible set differs from K".into(),
            ));
        }
        Ok(BepInstance { lower, upper, k })
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Certified Lipschitz constant of the lower-level operator.
    pub fn lipschitz(&self) -> f64 {
        self.lower.lipschitz
    }

    /// `f(x, y) = <Bx, y - x>`.
    pub fn f(&self, x: &Point, y: &Point) -> f64 {
        self.lower.eval(x).dot(&y.sub(x))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct StoppingRule {
    /// Threshold on `||x_{n+1} - x_n||`.
    pub tol_fix: f64,
    /// Threshold on `||x_n - y_n||`.
    pub tol_gap: f64,
    pub max_iter: usize,
}

impl Default for StoppingRule {
    fn default() -> Self {
        StoppingRule {
            tol_fix: DEFAULT_STOP_TOL,
            tol_gap: DEFAULT_STOP_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// One per-iteration record of a run.
#[derive(Clone, Debug)]
pub struct IterRecord {
    pub n: usize,
    pub x: Point,
    pub y: Point,
    pub lambda: f64,
    pub beta: f64,
    /// `||x_{n+1} - x_n||`
    pub res_fix: f64,
    /// `||x_n - y_n||`
    pub res_gap: f64,
    pub dist_ref: Option<f64>,
    pub estimate_slack: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IterationTrace {
    pub records: Vec<IterRecord>,
    pub converged: bool,
    pub final_point: Point,
    pub x0_in_k: bool,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// `sum_n ||x_n - y_n||^2` over the recorded run.
    pub fn gap_square_sum(&self) -> f64 {
        self.records.iter().map(|r| r.res_gap * r.res_gap).sum()
    }

    /// Fraction of `gap_square_sum` contributed by the last `frac` of the
    /// iterations; small tails witness square-summability empirically.
    pub fn gap_square_tail_fraction(&self, frac: f64) -> f64 {
        let total = self.gap_square_sum();
        if total == 0.0 {
            return 0.0;
        }
        let start = ((1.0 - frac) * self.records.len() as f64).floor() as usize;
        let tail: f64 = self.records[start..]
            .iter()
            .map(|r| r.res_gap * r.res_gap)
            .sum();
        tail / total
    }
}

/// One FBF step at parameters `(lambda, beta)`.
///
/// Returns `(y, x_next)`; `x_next` may lie outside `K`.
pub fn fbf_step(
    inst: &BepInstance,
    x: &Point,
    lambda: f64,
    beta: f64,
) -> Result<(Point, Point)> {
    if lambda <= 0.0 || beta <= 0.0 {
        return Err(SolverError::InvalidParameter(
            "fbf_step needs lambda > 0 and beta > 0".into(),
        ));
    }
    if lambda * beta * inst.lipschitz() >= 1.0 {
        return Err(SolverError::InvalidParameter(format!(
            "step bound violated: lambda * beta * L = {} >= 1",
            lambda * beta * inst.lipschitz()
        )));
    }
    let bx = inst.lower.eval(x);
    let y = inst.upper.resolvent(lambda, &x.add_scaled(-lambda * beta, &bx))?;
    let by = inst.lower.eval(&y);
    let x_next = y.add_scaled(lambda * beta, &bx.sub(&by));
    Ok((y, x_next))
}

/// `F_B(u, 0) - sigma_{S_f}(0) = sup_{y in K} f(y, u)`, evaluated on the
/// certificate grid (exact for affine-in-`y` bifunctions since the grid
/// contains the box vertices).
pub fn fitzpatrick_sup_zero(inst: &BepInstance, u: &Point, grid: usize) -> f64 {
    inst.k
        .grid(grid)
        .iter()
        .map(|y| inst.f(y, u))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Slack of the per-iteration estimate specialized to `p = 0`:
/// nonnegative slack means the printed inequality holds at this iteration.
pub fn estimate_slack(
    inst: &BepInstance,
    u: &Point,
    x_n: &Point,
    y_n: &Point,
    x_next: &Point,
    lambda: f64,
    beta: f64,
) -> Result<f64> {
    if lambda <= 0.0 || beta <= 0.0 || lambda * beta * inst.lipschitz() >= 1.0 {
        return Err(SolverError::InvalidParameter(
            "estimate_slack needs lambda, beta > 0 with lambda * beta * L < 1".into(),
        ));
    }
    let sup = fitzpatrick_sup_zero(inst, u, ESTIMATE_GRID);
    Ok(estimate_slack_with_sup(
        inst, u, x_n, y_n, x_next, lambda, beta, sup,
    ))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn estimate_slack_with_sup(
    inst: &BepInstance,
    u: &Point,
    x_n: &Point,
    y_n: &Point,
    x_next: &Point,
    lambda: f64,
    beta: f64,
    fitzpatrick_sup: f64,
) -> f64 {
    let lb = lambda * beta;
    let lbl = lb * inst.lipschitz();
    let gap_sq = x_n.sub(y_n).norm_sq();
    let a_n = x_n.sub(u).norm_sq();
    let a_next = x_next.sub(u).norm_sq();
    let rhs = -(1.0 - lbl * lbl) * gap_sq + lb * fitzpatrick_sup;
    let lhs = a_next - a_n + lb * inst.f(u, y_n);
    rhs - lhs
}

/// Run the FBF iteration under `sched` until both residuals fall below the
/// stopping tolerances or `max_iter` is reached.
///
/// When a reference solution `u` is supplied, every record carries the
/// distance to `u` and the `p = 0` per-iteration slack.
pub fn run_fbf(
    inst: &BepInstance,
    x0: &Point,
    sched: &Schedule,
    stop: &StoppingRule,
    reference: Option<&Point>,
) -> Result<IterationTrace> {
    sched.validate(inst.lipschitz(), stop.max_iter.min(10_000).max(1))?;
    let x0_in_k = inst.k.contains(x0, 0.0);
    let fitz_sup = reference.map(|u| fitzpatrick_sup_zero(inst, u, ESTIMATE_GRID));
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut converged = false;
    for n in 1..=stop.max_iter {
        let lambda = sched.lambda(n);
        let beta = sched.beta(n);
        let (y, x_next) = fbf_step(inst, &x, lambda, beta)?;
        let res_fix = x_next.sub(&x).norm();
        let res_gap = x.sub(&y).norm();
        let dist_ref = reference.map(|u| x.dist(u));
        let slack = reference.map(|u| {
            estimate_slack_with_sup(inst, u, &x, &y, &x_next, lambda, beta, fitz_sup.unwrap())
        });
        records.push(IterRecord {
            n,
            x: x.clone(),
            y,
            lambda,
            beta,
            res_fix,
            res_gap,
            dist_ref,
            estimate_slack: slack,
        });
        x = x_next;
        if res_fix <= stop.tol_fix && res_gap <= stop.tol_gap {
            converged = true;
            break;
        }
    }
    Ok(IterationTrace {
        records,
        converged,
        final_point: x,
        x0_in_k,
    })
}
