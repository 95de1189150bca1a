//! Bilinear saddle-point problems as bilevel equilibrium instances.
//!
//! The coupling `Gamma(u, v) = u^T M v + a^T u + b^T v` on a box `U x V`
//! induces the lower-level bifunction `f(x, y) = <Bx, y - x>` with the
//! skew-affine operator
//!
//! ```text
//! B(u, v) = (Mv + a, -M^T u - b)
//! ```
//!
//! which is monotone and Lipschitz with constant `||M||_2`. The module also
//! evaluates the summability-condition terms in closed form for the worked
//! `Gamma(u, v) = uv + u + v` instance.

use serde::{Deserialize, Serialize};

use crate::bifunctions::EquilibriumBifunction;
use crate::error::Result;
use crate::fbf::BepInstance;
use crate::geometry::{BoxSet, DenseMatrix, Point, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL};
use crate::operators::MonotoneMap;
use crate::schedule::Schedule;

/// Largest dimension at which Fitzpatrick suprema use exact vertex
/// enumeration; beyond it a grid lower bound is returned.
pub const VERTEX_ENUM_MAX_DIM: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SaddleProblem {
    pub m: DenseMatrix,
    pub a: Point,
    pub b: Point,
    pub u_box: BoxSet,
    pub v_box: BoxSet,
}

impl SaddleProblem {
    pub fn new(m: DenseMatrix, a: Point, b: Point, u_box: BoxSet, v_box: BoxSet) -> Result<Self> {
        use crate::error::SolverError;
        if m.rows != a.dim() || m.rows != u_box.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: m.rows,
                got: a.dim().max(u_box.dim()),
            });
        }
        if m.cols != b.dim() || m.cols != v_box.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: m.cols,
                got: b.dim().max(v_box.dim()),
            });
        }
        Ok(SaddleProblem { m, a, b, u_box, v_box })
    }

    /// The worked instance `Gamma(u, v) = uv + u + v` on `[0, 1]^2`, whose
    /// saddle set is the singleton `(0, 1)`.
    pub fn example() -> Self {
        SaddleProblem::new(
            DenseMatrix::from_rows(&[vec![1.0]]).unwrap(),
            Point(vec![1.0]),
            Point(vec![1.0]),
            BoxSet::cube(0.0, 1.0, 1).unwrap(),
            BoxSet::cube(0.0, 1.0, 1).unwrap(),
        )
        .unwrap()
    }

    pub fn dim(&self) -> usize {
        self.m.rows + self.m.cols
    }

    pub fn gamma(&self, u: &Point, v: &Point) -> f64 {
        u.dot(&self.m.matvec(v)) + self.a.dot(u) + self.b.dot(v)
    }

    /// `f((u1, v1), (u2, v2)) = Gamma(u2, v1) - Gamma(u1, v2)`.
    pub fn coupling(&self, x: &Point, y: &Point) -> f64 {
        let (u1, v1) = self.split(x);
        let (u2, v2) = self.split(y);
        self.gamma(&u2, &v1) - self.gamma(&u1, &v2)
    }

    pub fn split(&self, x: &Point) -> (Point, Point) {
        let (u, v) = x.as_slice().split_at(self.m.rows);
        (Point(u.to_vec()), Point(v.to_vec()))
    }

    pub fn feasible_set(&self) -> BoxSet {
        self.u_box.product(&self.v_box)
    }

    /// Evaluate `B(u, v) = (Mv + a, -M^T u - b)`.
    pub fn operator_eval(&self, x: &Point) -> Point {
        let (u, v) = self.split(x);
        let top = self.m.matvec(&v).add(&self.a);
        let bottom = self.m.tr_matvec(&u).add(&self.b).scale(-1.0);
        top.concat(&bottom)
    }

    /// The skew-affine lower-level operator with its exact Lipschitz
    /// certificate `||M||_2`.
    pub fn operator(&self) -> Result<MonotoneMap> {
        let l = self
            .m
            .spectral_norm(DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)?;
        let sp = self.clone();
        Ok(MonotoneMap::from_fn(self.dim(), l, move |x| {
            sp.operator_eval(x)
        }))
    }

    /// Assemble the full bilevel instance with a given upper-level bifunction.
    pub fn build_bep(&self, upper: EquilibriumBifunction) -> Result<BepInstance> {
        BepInstance::new(self.operator()?, upper, self.feasible_set())
    }
}

/// Closed-form conjugate terms for the worked example with solution
/// `u* = (0, 1)`:
/// `(Gamma(., 1))*(2p/beta)`, `(-Gamma(0, .))*(2q/beta)` and
/// `sigma_{S_f}(2p/beta, 2q/beta)`.
pub fn example_conjugates(p: f64, q: f64, beta: f64) -> (f64, f64, f64) {
    assert!(beta > 0.0);
    let first = if p > beta { 2.0 * p / beta - 3.0 } else { -1.0 };
    let second = if q > -beta / 2.0 {
        1.0 + 2.0 * q / beta
    } else {
        0.0
    };
    let third = 2.0 * q / beta;
    (first, second, third)
}

/// Supremum of `<w, y> + f(y, u)` over `y in K`, the Fitzpatrick transform of
/// the saddle coupling at `(u, w)`.
///
/// `f(., u)` is affine in `y` for a skew-affine operator, so the supremum is
/// attained at a box vertex; up to [`VERTEX_ENUM_MAX_DIM`] vertices are
/// enumerated exactly, beyond that a uniform grid gives a lower bound.
pub fn fitzpatrick_grid(sp: &SaddleProblem, u: &Point, w: &Point, grid: usize) -> f64 {
    let k = sp.feasible_set();
    let candidates = if k.dim() <= VERTEX_ENUM_MAX_DIM {
        k.vertices()
    } else {
        k.grid(grid.max(2))
    };
    candidates
        .iter()
        .map(|y| w.dot(y) + sp.coupling(y, u))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionSum {
    pub partial_sum: f64,
    pub half_sum: f64,
    /// Set when the second half of the horizon still contributes materially.
    pub diverging: bool,
}

/// Partial sum of `lambda_n beta_n * [conjugate term]` for the worked example
/// with fixed normal-cone components `(p, q)`.
pub fn selection_condition_partial_sum(
    sched: &Schedule,
    p: f64,
    q: f64,
    horizon: usize,
) -> ConditionSum {
    assert!(horizon >= 1);
    let mut sum = 0.0;
    let mut half_sum = 0.0;
    for n in 1..=horizon {
        let beta = sched.beta(n);
        let (c1, c2, sigma) = example_conjugates(p, q, beta);
        sum += sched.product(n) * (c1 + c2 - sigma);
        if n <= horizon / 2 {
            half_sum = sum;
        }
    }
    let tail = (sum - half_sum).abs();
    ConditionSum {
        partial_sum: sum,
        half_sum,
        diverging: horizon >= 4 && tail > 0.01 * sum.abs().max(1e-300),
    }
}
