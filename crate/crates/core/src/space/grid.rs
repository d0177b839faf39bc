use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::trapezoid_weights;
use crate::scalar::{nearest_multiple, Real};

/// Shape of the spatial domain a grid discretizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    /// `[0, 1]` with `node_0 = 0`.
    UnitInterval,
    /// `(0, ∞)` truncated to `[0, truncation_length]`.
    HalfLine,
    /// Plain `ℝⁿ` coordinates (finite-dimensional oracle backend).
    Points,
}

/// Uniform node set on one of the supported domains.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid<T> {
    kind: GridKind,
    nodes: Vec<T>,
    step: T,
    weights: Vec<T>,
}

impl<T: Real> SpatialGrid<T> {
    pub fn unit_interval(n_points: usize) -> Result<Arc<Self>> {
        if n_points < 2 {
            return Err(if n_points == 0 {
                Error::EmptyGrid
            } else {
                invalid("n_points", "unit interval grid needs at least two nodes")
            });
        }
        let step = T::one() / T::from_count(n_points - 1);
        Ok(Arc::new(Self::uniform(GridKind::UnitInterval, n_points, step)))
    }

    /// Unit-interval grid whose spacing is exactly `step` (`1/step` must be an integer).
    pub fn unit_interval_with_step(step: T) -> Result<Arc<Self>> {
        let cells = crate::scalar::exact_multiple(T::one(), step)
            .filter(|&c| c > 0)
            .ok_or_else(|| invalid("step", "1/step must be a positive integer"))?;
        Self::unit_interval(cells + 1)
    }

    pub fn half_line(n_points: usize, truncation_length: T) -> Result<Arc<Self>> {
        if n_points < 2 {
            return Err(if n_points == 0 {
                Error::EmptyGrid
            } else {
                invalid("n_points", "half-line grid needs at least two nodes")
            });
        }
        if !(truncation_length > T::zero()) || !truncation_length.is_finite() {
            return Err(invalid("truncation_length", "must be positive and finite"));
        }
        let step = truncation_length / T::from_count(n_points - 1);
        Ok(Arc::new(Self::uniform(GridKind::HalfLine, n_points, step)))
    }

    /// Half-line grid with spacing `step`; `truncation_length / step` must be an integer.
    pub fn half_line_with_step(step: T, truncation_length: T) -> Result<Arc<Self>> {
        let cells = crate::scalar::exact_multiple(truncation_length, step)
            .filter(|&c| c > 0)
            .ok_or_else(|| invalid("step", "truncation_length/step must be a positive integer"))?;
        Self::half_line(cells + 1, truncation_length)
    }

    pub fn points(n: usize) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::EmptyGrid);
        }
        let nodes = (0..n).map(T::from_count).collect();
        Ok(Arc::new(Self {
            kind: GridKind::Points,
            nodes,
            step: T::one(),
            weights: vec![T::one(); n],
        }))
    }

    fn uniform(kind: GridKind, n: usize, step: T) -> Self {
        let nodes = (0..n).map(|i| step * T::from_count(i)).collect();
        Self {
            kind,
            nodes,
            step,
            weights: trapezoid_weights(n, step),
        }
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn step(&self) -> T {
        self.step
    }

    /// Right end point of the discretized domain.
    pub fn length(&self) -> T {
        *self.nodes.last().expect("grids are non-empty")
    }

    pub fn truncation_length(&self) -> Option<T> {
        (self.kind == GridKind::HalfLine).then(|| self.length())
    }

    /// Quadrature weights used by every pairing and integral norm on this grid
    /// (trapezoid on intervals, unit weights for `Points`).
    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Nearest whole number of cells covered by a shift of length `t`, and the rounding error.
    pub fn shift_count(&self, t: T) -> (usize, T) {
        nearest_multiple(t, self.step)
    }

    pub fn compatible(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || (self.kind == other.kind && self.len() == other.len() && self.step == other.step)
    }
}

pub(crate) fn ensure_compatible<T: Real>(a: &SpatialGrid<T>, b: &SpatialGrid<T>, what: &str) -> Result<()> {
    if a.compatible(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{what}: {:?}/{} nodes vs {:?}/{} nodes",
            a.kind(),
            a.len(),
            b.kind(),
            b.len()
        )))
    }
}
