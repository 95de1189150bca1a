//! Upper-level equilibrium bifunctions `g` with resolvent oracles.
//!
//! The resolvent of `g` at `x` is the unique `z` in `K` with
//! `g(z, y) + (1/lambda) <z - x, y - z> >= 0` for all `y` in `K`. Two concrete
//! families ship with closed-form or inner-solve resolvents, plus the trivial
//! `g = 0` whose resolvent is the projection.

use crate::error::{Result, SolverError};
use crate::geometry::{BoxSet, Point};
use crate::operators::MonotoneMap;

pub const DEFAULT_INNER_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_INNER: usize = 1_000_000;
pub const DEFAULT_CERTIFICATE_GRID: usize = 21;

/// `g(x, y) = phi(y) - phi(x)` with `phi(x) = (w/2) ||x - c||^2`.
#[derive(Clone, Debug)]
pub struct ProxBifunction {
    pub center: Point,
    pub weight: f64,
}

impl ProxBifunction {
    pub fn new(center: Point, weight: f64) -> Result<Self> {
        if weight < 0.0 {
            return Err(SolverError::InvalidParameter(
                "prox weight must be nonnegative".into(),
            ));
        }
        Ok(ProxBifunction { center, weight })
    }

    pub fn phi(&self, x: &Point) -> f64 {
        0.5 * self.weight * x.sub(&self.center).norm_sq()
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.phi(y) - self.phi(x)
    }
}

/// `g((u1, v1), (u2, v2)) = <A1 u1, u2 - u1> + <A2 v1, v2 - v1>`.
///
/// Equivalently `<G x, y - x>` where `G = A1 x A2` acts blockwise.
#[derive(Clone, Debug)]
pub struct PairedOperatorBifunction {
    pub a1: MonotoneMap,
    pub a2: MonotoneMap,
}

impl PairedOperatorBifunction {
    pub fn dim(&self) -> usize {
        self.a1.dim + self.a2.dim
    }

    pub fn lipschitz(&self) -> f64 {
        self.a1.lipschitz.max(self.a2.lipschitz)
    }

    /// Blockwise product map `G(u, v) = (A1 u, A2 v)`.
    pub fn product_eval(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim(), "paired operator dimension mismatch");
        let (u, v) = x.as_slice().split_at(self.a1.dim);
        let gu = self.a1.eval(&Point(u.to_vec()));
        let gv = self.a2.eval(&Point(v.to_vec()));
        gu.concat(&gv)
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.product_eval(x).dot(&y.sub(x))
    }
}

/// An upper-level bifunction together with its feasible set and resolvent
/// oracle parameters.
#[derive(Clone, Debug)]
pub struct EquilibriumBifunction {
    pub kind: BifunctionKind,
    pub feasible_set: BoxSet,
    pub inner_tol: f64,
    pub max_inner: usize,
}

#[derive(Clone, Debug)]
pub enum BifunctionKind {
    /// `g = 0`; the resolvent is the projection onto `K`.
    Zero,
    Prox(ProxBifunction),
    Paired(PairedOperatorBifunction),
}

impl EquilibriumBifunction {
    pub fn zero(feasible_set: BoxSet) -> Self {
        EquilibriumBifunction {
            kind: BifunctionKind::Zero,
            feasible_set,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn prox(g: ProxBifunction, feasible_set: BoxSet) -> Self {
        EquilibriumBifunction {
            kind: BifunctionKind::Prox(g),
            feasible_set,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn paired(g: PairedOperatorBifunction, feasible_set: BoxSet) -> Self {
        EquilibriumBifunction {
            kind: BifunctionKind::Paired(g),
            feasible_set,
            inner_tol: DEFAULT_INNER_TOL,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        match &self.kind {
            BifunctionKind::Zero => 0.0,
            BifunctionKind::Prox(g) => g.eval(x, y),
            BifunctionKind::Paired(g) => g.eval(x, y),
        }
    }

    /// `J_lambda^g(x)`.
    pub fn resolvent(&self, lambda: f64, x: &Point) -> Result<Point> {
        if lambda <= 0.0 {
            return Err(SolverError::InvalidParameter(
                "resolvent parameter lambda must be positive".into(),
            ));
        }
        match &self.kind {
            BifunctionKind::Zero => Ok(self.feasible_set.project(x)),
            BifunctionKind::Prox(g) => Ok(prox_resolvent(g, &self.feasible_set, lambda, x)),
            BifunctionKind::Paired(g) => operator_resolvent(
                g,
                &self.feasible_set,
                lambda,
                x,
                self.inner_tol,
                self.max_inner,
            ),
        }
    }
}

/// Closed-form resolvent of the prox bifunction over a box.
///
/// The subproblem `min_y phi(y) + (1/(2 lambda)) ||y - x||^2` is a separable
/// quadratic, so clamping the unconstrained minimizer is exact.
pub fn prox_resolvent(g: &ProxBifunction, k: &BoxSet, lambda: f64, x: &Point) -> Point {
    assert!(lambda > 0.0);
    let lw = lambda * g.weight;
    let unconstrained = x.add_scaled(lw, &g.center).scale(1.0 / (1.0 + lw));
    k.project(&unconstrained)
}

/// Resolvent of the paired-operator bifunction by a damped projected
/// fixed-point iteration.
///
/// `z` solves the strongly monotone VI `<lambda G z + z - x, y - z> >= 0` on
/// `K`. The map `z -> lambda G z + z - x` is 1-strongly monotone and
/// `(1 + lambda L_A)`-Lipschitz, so the projected step with
/// `tau = 1 / (1 + lambda L_A)^2` contracts with factor
/// `sqrt(1 - tau)` per iteration.
pub fn operator_resolvent(
    g: &PairedOperatorBifunction,
    k: &BoxSet,
    lambda: f64,
    x: &Point,
    tol: f64,
    max_inner: usize,
) -> Result<Point> {
    assert!(lambda > 0.0);
    let tau = 1.0 / (1.0 + lambda * g.lipschitz()).powi(2);
    let mut z = k.project(x);
    for _ in 0..max_inner {
        let grad = g.product_eval(&z).scale(lambda).add(&z).sub(x);
        let next = k.project(&z.add_scaled(-tau, &grad));
        let change = next.sub(&z).norm();
        z = next;
        if change <= tol {
            return Ok(z);
        }
    }
    let grad = g.product_eval(&z).scale(lambda).add(&z).sub(x);
    let residual = z.sub(&k.project(&z.add_scaled(-tau, &grad))).norm();
    Err(SolverError::ResolventNonConvergence { max_inner, residual })
}

/// Minimum over a uniform grid of `y` in `K` of the defining resolvent
/// inequality `g(z, y) + (1/lambda) <z - x, y - z>`.
///
/// A valid resolvent output yields a value `>= -tol`; a point off the
/// resolvent produces a strictly negative witness.
pub fn resolvent_certificate<F>(
    g_eval: F,
    k: &BoxSet,
    lambda: f64,
    x: &Point,
    z: &Point,
    grid: usize,
) -> f64
where
    F: Fn(&Point, &Point) -> f64,
{
    assert!(lambda > 0.0);
    k.grid(grid)
        .iter()
        .map(|y| g_eval(z, y) + z.sub(x).dot(&y.sub(z)) / lambda)
        .fold(f64::INFINITY, f64::min)
}
