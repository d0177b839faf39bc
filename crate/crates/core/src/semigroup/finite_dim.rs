use std::sync::Arc;

use crate::error::Result;
use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::semigroup::{check_time, Semigroup};
use crate::space::{SpaceTag, SpatialGrid};

/// `exp(tM)` on `ℝⁿ`; the oracle backend.
#[derive(Debug, Clone)]
pub struct FiniteDimSemigroup<T> {
    grid: Arc<SpatialGrid<T>>,
    matrix: Matrix<T>,
}

impl<T: Real> FiniteDimSemigroup<T> {
    pub fn new(matrix: Matrix<T>) -> Result<Self> {
        let grid = SpatialGrid::points(matrix.dim())?;
        Ok(Self { grid, matrix })
    }

    /// The zero generator: `S(t) = I`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(Matrix::zeros(n))
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn exp(&self, t: T) -> Result<Matrix<T>> {
        check_time(t)?;
        if t == T::zero() {
            return Ok(Matrix::identity(self.matrix.dim()));
        }
        self.matrix.scaled(t).expm()
    }
}

impl<T: Real> Semigroup<T> for FiniteDimSemigroup<T> {
    fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    fn tag(&self) -> SpaceTag<T> {
        SpaceTag::Euclidean
    }

    fn apply_values(&self, t: T, v: &[T]) -> Result<Vec<T>> {
        check_time(t)?;
        if t == T::zero() {
            return Ok(v.to_vec());
        }
        Ok(self.exp(t)?.matvec(v))
    }

    fn orbit_values(&self, dt: T, steps: usize, v: &[T]) -> Result<Vec<Vec<T>>> {
        let e = self.exp(dt)?;
        let mut out = Vec::with_capacity(steps + 1);
        out.push(v.to_vec());
        for s in 0..steps {
            let next = e.matvec(&out[s]);
            out.push(next);
        }
        Ok(out)
    }

    /// Largest Gershgorin bound of the symmetric part (a log-norm bound).
    fn growth_bound(&self) -> T {
        let n = self.matrix.dim();
        (0..n)
            .map(|i| {
                let off: T = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| T::half() * (self.matrix.get(i, j) + self.matrix.get(j, i)).abs())
                    .sum();
                self.matrix.get(i, i) + off
            })
            .fold(T::neg_infinity(), T::max)
            .max(T::neg_infinity())
    }
}
