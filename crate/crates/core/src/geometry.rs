//! Finite-dimensional vectors, box feasible sets and spectral-norm estimation.
//!
//! The ambient space is `R^d` with the Euclidean inner product. Every other
//! module builds on the primitives here.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SolverError};

/// A point of `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Euclidean inner product. Errors on dimension mismatch.
    pub fn inner(&self, other: &Point) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self.dot(other))
    }

    /// Inner product for internal use; dimensions must already agree.
    pub fn dot(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim(), "point dimension mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn add(&self, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim(), "point dimension mismatch");
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim(), "point dimension mismatch");
        Point(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Point) -> Point {
        assert_eq!(self.dim(), other.dim(), "point dimension mismatch");
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.sub(other).norm()
    }

    /// Concatenate two points into one (product-space element).
    pub fn concat(&self, other: &Point) -> Point {
        let mut coords = self.0.clone();
        coords.extend_from_slice(&other.0);
        Point(coords)
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for Point {
    fn from(coords: Vec<f64>) -> Self {
        Point(coords)
    }
}

/// A product of closed intervals, the feasible set `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    pub lower: Point,
    pub upper: Point,
}

impl BoxSet {
    pub fn new(lower: Point, upper: Point) -> Result<Self> {
        if lower.dim() != upper.dim() {
            return Err(SolverError::DimensionMismatch {
                expected: lower.dim(),
                got: upper.dim(),
            });
        }
        for i in 0..lower.dim() {
            if !(lower[i] <= upper[i]) {
                return Err(SolverError::InvalidParameter(format!(
                    "empty box: lower[{i}] = {} > upper[{i}] = {}",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    /// `[lo, hi]^dim`
    pub fn cube(lo: f64, hi: f64, dim: usize) -> Result<Self> {
        BoxSet::new(Point(vec![lo; dim]), Point(vec![hi; dim]))
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    /// Coordinatewise clamp onto the box.
    pub fn project(&self, x: &Point) -> Point {
        assert_eq!(self.dim(), x.dim(), "point dimension mismatch");
        Point(
            x.0.iter()
                .enumerate()
                .map(|(i, &c)| c.clamp(self.lower[i], self.upper[i]))
                .collect(),
        )
    }

    pub fn contains(&self, x: &Point, tol: f64) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lower[i] - tol && x[i] <= self.upper[i] + tol)
    }

    pub fn center(&self) -> Point {
        self.lower.add(&self.upper).scale(0.5)
    }

    /// Box scaled about its center by `factor`.
    pub fn inflate(&self, factor: f64) -> BoxSet {
        let c = self.center();
        let half = self.upper.sub(&c).scale(factor);
        BoxSet {
            lower: c.sub(&half),
            upper: c.add(&half),
        }
    }

    /// Cartesian product with another box.
    pub fn product(&self, other: &BoxSet) -> BoxSet {
        BoxSet {
            lower: self.lower.concat(&other.lower),
            upper: self.upper.concat(&other.upper),
        }
    }

    /// Uniform grid with `per_axis` points per axis, in lexicographic order.
    /// Degenerate axes (lower == upper) contribute the single point.
    pub fn grid(&self, per_axis: usize) -> Vec<Point> {
        assert!(per_axis >= 2, "grid needs at least 2 points per axis");
        let d = self.dim();
        let axis_points: Vec<Vec<f64>> = (0..d)
            .map(|i| {
                let (lo, hi) = (self.lower[i], self.upper[i]);
                if lo == hi {
                    vec![lo]
                } else {
                    (0..per_axis)
                        .map(|k| lo + (hi - lo) * k as f64 / (per_axis - 1) as f64)
                        .collect()
                }
            })
            .collect();
        cartesian(&axis_points)
    }

    /// The 2^d corner points, in lexicographic order.
    pub fn vertices(&self) -> Vec<Point> {
        let axis_points: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                if self.lower[i] == self.upper[i] {
                    vec![self.lower[i]]
                } else {
                    vec![self.lower[i], self.upper[i]]
                }
            })
            .collect();
        cartesian(&axis_points)
    }

    pub fn sample<R: rand::Rng>(&self, rng: &mut R) -> Point {
        Point(
            (0..self.dim())
                .map(|i| rng.gen_range(self.lower[i]..=self.upper[i]))
                .collect(),
        )
    }
}

fn cartesian(axis_points: &[Vec<f64>]) -> Vec<Point> {
    let mut out = vec![vec![]];
    for axis in axis_points {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(Point).collect()
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(SolverError::InvalidParameter(format!(
                "entry count {} does not match {rows}x{cols}",
                entries.len()
            )));
        }
        if !entries.iter().all(|e| e.is_finite()) {
            return Err(SolverError::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(DenseMatrix { rows, cols, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(SolverError::InvalidParameter("ragged matrix rows".into()));
        }
        DenseMatrix::new(r, c, rows.concat())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            entries: vec![0.0; rows * cols],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn matvec(&self, x: &Point) -> Point {
        assert_eq!(self.cols, x.dim(), "matvec dimension mismatch");
        Point(
            (0..self.rows)
                .map(|i| (0..self.cols).map(|j| self.get(i, j) * x[j]).sum())
                .collect(),
        )
    }

    pub fn tr_matvec(&self, x: &Point) -> Point {
        assert_eq!(self.rows, x.dim(), "tr_matvec dimension mismatch");
        Point(
            (0..self.cols)
                .map(|j| (0..self.rows).map(|i| self.get(i, j) * x[i]).sum())
                .collect(),
        )
    }

    /// Largest singular value via power iteration on `M^T M`.
    ///
    /// Starts from the normalized all-ones vector so repeated calls produce
    /// identical certificates. Stops when the Rayleigh quotient is stable to
    /// `tol` relative, errors after `max_iter` sweeps.
    pub fn spectral_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        if tol <= 0.0 {
            return Err(SolverError::InvalidParameter("tol must be positive".into()));
        }
        if max_iter == 0 {
            return Err(SolverError::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        let n = self.cols;
        if n == 0 || self.rows == 0 {
            return Ok(0.0);
        }
        let mut v = Point(vec![1.0 / (n as f64).sqrt(); n]);
        let mut mu_prev = f64::NAN;
        let mut last = 0.0;
        for _ in 0..max_iter {
            let w = self.tr_matvec(&self.matvec(&v));
            let mu = v.dot(&w);
            if mu <= 0.0 {
                // v is (numerically) in the kernel of M; the all-ones start
                // only lands there when M itself annihilates it exactly.
                return Ok(0.0);
            }
            last = mu.sqrt();
            if !mu_prev.is_nan() && (mu - mu_prev).abs() <= tol * mu {
                return Ok(last);
            }
            mu_prev = mu;
            let wn = w.norm();
            if wn == 0.0 {
                return Ok(0.0);
            }
            v = w.scale(1.0 / wn);
        }
        Err(SolverError::PowerIterationNonConvergence {
            max_iter,
            last_estimate: last,
        })
    }
}

pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-10;
pub const DEFAULT_SPECTRAL_MAX_ITER: usize = 10_000;
