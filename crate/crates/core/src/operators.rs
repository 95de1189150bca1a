//! Monotone vector-field oracles `B` with Lipschitz certificates.
//!
//! The lower-level bifunction is always `f(x, y) = <Bx, y - x>`; the operator
//! carries a certified Lipschitz constant used by the step-size bound `1/L`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SolverError};
use crate::geometry::{BoxSet, DenseMatrix, Point, DEFAULT_SPECTRAL_MAX_ITER, DEFAULT_SPECTRAL_TOL};

/// A monotone map with a Lipschitz-constant certificate.
///
/// The certificate is supplied at construction (exact for affine maps via the
/// spectral norm of the linear part); the sampled checks below are validators,
/// not estimators of record.
#[derive(Clone)]
pub struct MonotoneMap {
    eval: Arc<dyn Fn(&Point) -> Point + Send + Sync>,
    pub lipschitz: f64,
    pub dim: usize,
}

impl std::fmt::Debug for MonotoneMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MonotoneMap")
            .field("lipschitz", &self.lipschitz)
            .field("dim", &self.dim)
            .finish()
    }
}

impl MonotoneMap {
    pub fn from_fn<F>(dim: usize, lipschitz: f64, eval: F) -> Self
    where
        F: Fn(&Point) -> Point + Send + Sync + 'static,
    {
        MonotoneMap {
            eval: Arc::new(eval),
            lipschitz,
            dim,
        }
    }

    /// The zero operator; degenerates the FBF step to a pure resolvent step.
    pub fn zero(dim: usize) -> Self {
        MonotoneMap::from_fn(dim, 0.0, move |_| Point::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        MonotoneMap::from_fn(dim, 1.0, |x| x.clone())
    }

    /// `x -> s * x`, monotone for `s >= 0`.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        MonotoneMap::from_fn(dim, s.abs(), move |x| x.scale(s))
    }

    /// Gradient of `(w/2) ||x - c||^2`, i.e. `x -> w (x - c)`.
    pub fn quadratic_gradient(c: Point, w: f64) -> Self {
        let dim = c.dim();
        MonotoneMap::from_fn(dim, w, move |x| x.sub(&c).scale(w))
    }

    pub fn eval(&self, x: &Point) -> Point {
        assert_eq!(x.dim(), self.dim, "operator input dimension mismatch");
        (self.eval)(x)
    }
}

/// `x -> A x + offset` with `A + A^T` positive semidefinite.
#[derive(Clone, Debug)]
pub struct AffineMap {
    pub matrix: DenseMatrix,
    pub offset: Point,
}

impl AffineMap {
    pub fn new(matrix: DenseMatrix, offset: Point) -> Result<Self> {
        if matrix.rows != matrix.cols {
            return Err(SolverError::InvalidParameter(
                "affine map matrix must be square".into(),
            ));
        }
        if matrix.rows != offset.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: matrix.rows,
                got: offset.dim(),
            });
        }
        let min_eig = min_symmetric_part_eig(&matrix)?;
        if min_eig < -1e-8 {
            return Err(SolverError::InvalidParameter(format!(
                "affine map is not monotone: symmetric part has eigenvalue {min_eig}"
            )));
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn dim(&self) -> usize {
        self.offset.dim()
    }

    pub fn eval(&self, x: &Point) -> Result<Point> {
        if x.dim() != self.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(self.matrix.matvec(x).add(&self.offset))
    }

    /// Exact Lipschitz certificate: the spectral norm of the linear part.
    pub fn lipschitz(&self) -> Result<f64> {
        self.matrix
            .spectral_norm(DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)
    }

    pub fn into_monotone_map(self) -> Result<MonotoneMap> {
        let l = self.lipschitz()?;
        let dim = self.dim();
        Ok(MonotoneMap::from_fn(dim, l, move |x| {
            self.matrix.matvec(x).add(&self.offset)
        }))
    }
}

/// Smallest eigenvalue of `(A + A^T) / 2` via a shifted power iteration.
fn min_symmetric_part_eig(a: &DenseMatrix) -> Result<f64> {
    let n = a.rows;
    if n == 0 {
        return Ok(0.0);
    }
    let mut sym = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym.entries[i * n + j] = 0.5 * (a.get(i, j) + a.get(j, i));
        }
    }
    let bound = sym.spectral_norm(DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)?;
    if bound == 0.0 {
        return Ok(0.0);
    }
    // shifted = bound*I - sym is PSD with top eigenvalue bound - lambda_min.
    let mut shifted = sym.clone();
    for i in 0..n {
        for j in 0..n {
            shifted.entries[i * n + j] = -shifted.entries[i * n + j];
        }
        shifted.entries[i * n + i] += bound;
    }
    // shifted is symmetric PSD, so its spectral norm is its top eigenvalue.
    let top = shifted.spectral_norm(DEFAULT_SPECTRAL_TOL, DEFAULT_SPECTRAL_MAX_ITER)?;
    Ok(bound - top)
}

fn sample_pairs(region: &BoxSet, samples: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        let x = region.sample(&mut rng);
        let y = region.sample(&mut rng);
        if x.sub(&y).norm() > 0.0 {
            out.push((x, y));
        }
    }
    out
}

/// Minimum sampled value of `<Bx - By, x - y>` over `region`.
///
/// Nonnegative (up to 1e-10) for a monotone map; exactly zero for skew-affine
/// maps since the skew part drops out of the quadratic form.
pub fn monotonicity_deficit(b: &MonotoneMap, region: &BoxSet, samples: usize, seed: u64) -> f64 {
    assert!(samples >= 1);
    sample_pairs(region, samples, seed)
        .iter()
        .map(|(x, y)| b.eval(x).sub(&b.eval(y)).dot(&x.sub(y)))
        .fold(f64::INFINITY, f64::min)
}

/// Maximum sampled ratio `||Bx - By|| / ||x - y||` over `region`.
pub fn lipschitz_estimate(b: &MonotoneMap, region: &BoxSet, samples: usize, seed: u64) -> f64 {
    assert!(samples >= 1);
    sample_pairs(region, samples, seed)
        .iter()
        .map(|(x, y)| b.eval(x).sub(&b.eval(y)).norm() / x.sub(y).norm())
        .fold(0.0, f64::max)
}

/// Sampling region used by the validators: the bounding box of `K` inflated
/// by a factor of 2, since forward steps can leave `K`.
pub fn validation_region(k: &BoxSet) -> BoxSet {
    k.inflate(2.0)
}
