//! Brute-force grid oracles for desk-scale verification.
//!
//! These are deliberately independent of the iterative solvers: residuals and
//! solution sets are computed by exhaustive grid evaluation, capped at
//! dimension 4.

use crate::error::{Result, SolverError};
use crate::fbf::BepInstance;
use crate::geometry::{BoxSet, Point};

pub const ORACLE_MAX_DIM: usize = 4;
pub const DEFAULT_ORACLE_GRID: usize = 101;

/// Max over grid `y` of `(-f(x, y))_+`; zero certifies `x` as a grid
/// equilibrium solution.
pub fn ep_residual<F>(f_eval: F, x: &Point, k: &BoxSet, grid: usize) -> f64
where
    F: Fn(&Point, &Point) -> f64,
{
    k.grid(grid)
        .iter()
        .map(|y| (-f_eval(x, y)).max(0.0))
        .fold(0.0, f64::max)
}

/// Max over grid `y` of `(f(y, x))_+`; zero certifies the dual (Minty)
/// solution at grid resolution.
pub fn dual_ep_residual<F>(f_eval: F, x: &Point, k: &BoxSet, grid: usize) -> f64
where
    F: Fn(&Point, &Point) -> f64,
{
    k.grid(grid)
        .iter()
        .map(|y| f_eval(y, x).max(0.0))
        .fold(0.0, f64::max)
}

fn guard_dim(k: &BoxSet) -> Result<()> {
    if k.dim() > ORACLE_MAX_DIM {
        return Err(SolverError::DimensionGuard {
            dim: k.dim(),
            max: ORACLE_MAX_DIM,
        });
    }
    Ok(())
}

/// All grid points with `ep_residual <= tol`, in lexicographic order.
pub fn solve_ep_grid<F>(f_eval: F, k: &BoxSet, grid: usize, tol: f64) -> Result<Vec<Point>>
where
    F: Fn(&Point, &Point) -> f64,
{
    guard_dim(k)?;
    let points = k.grid(grid);
    Ok(points
        .iter()
        .filter(|x| {
            points
                .iter()
                .all(|y| f_eval(x, y) >= -tol)
        })
        .cloned()
        .collect())
}

/// Two-stage grid search for the bilevel problem: stage 1 computes the grid
/// lower-level solution set `S_f`, stage 2 filters it by the upper-level
/// residual over that set.
pub fn solve_bep_grid(inst: &BepInstance, grid: usize, tol: f64) -> Result<Vec<Point>> {
    guard_dim(&inst.k)?;
    let s_f = solve_ep_grid(|x, y| inst.f(x, y), &inst.k, grid, tol)?;
    if s_f.is_empty() {
        return Err(SolverError::EmptyGridSolutionSet);
    }
    Ok(s_f
        .iter()
        .filter(|x| s_f.iter().all(|y| inst.upper.eval(x, y) >= -tol))
        .cloned()
        .collect())
}
