use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::{exact_multiple, Real};
use crate::space::function::{norm_values, GridFunction, SpaceTag};
use crate::space::grid::SpatialGrid;

/// History window `θ ↦ X(t+θ)` on a uniform grid of `[-1, 0]`.
///
/// Row `j` holds the state at `θ_j = -1 + j/m`, so row `0` is `θ = -1` and
/// row `m` is `θ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentFunction<T> {
    grid: Arc<SpatialGrid<T>>,
    tag: SpaceTag<T>,
    rows: Vec<Vec<T>>,
    p: T,
}

impl<T: Real> SegmentFunction<T> {
    pub fn new(grid: Arc<SpatialGrid<T>>, tag: SpaceTag<T>, rows: Vec<Vec<T>>, p: T) -> Result<Self> {
        if rows.len() < 2 {
            return Err(invalid("rows", "history grid needs both end points -1 and 0"));
        }
        if !(p >= T::one()) {
            return Err(invalid("p", "exponent must satisfy p >= 1"));
        }
        for row in &rows {
            // validates length and the C0 constraint row by row
            GridFunction::new(grid.clone(), row.clone(), tag)?;
        }
        Ok(Self { grid, tag, rows, p })
    }

    pub(crate) fn from_rows_unchecked(grid: Arc<SpatialGrid<T>>, tag: SpaceTag<T>, rows: Vec<Vec<T>>, p: T) -> Self {
        Self { grid, tag, rows, p }
    }

    pub fn zeros(grid: Arc<SpatialGrid<T>>, tag: SpaceTag<T>, history_steps: usize, p: T) -> Self {
        let rows = vec![vec![T::zero(); grid.len()]; history_steps + 1];
        Self { grid, tag, rows, p }
    }

    /// Samples `f(θ, ξ)` with `history_steps` cells on `[-1, 0]`.
    pub fn from_fn(
        grid: Arc<SpatialGrid<T>>,
        tag: SpaceTag<T>,
        history_steps: usize,
        p: T,
        f: impl Fn(T, T) -> T,
    ) -> Result<Self> {
        if history_steps == 0 {
            return Err(invalid("history_steps", "must be positive"));
        }
        let dth = T::one() / T::from_count(history_steps);
        let rows = (0..=history_steps)
            .map(|j| {
                let theta = -T::one() + dth * T::from_count(j);
                grid.nodes().iter().map(|&x| f(theta, x)).collect()
            })
            .collect();
        Self::new(grid, tag, rows, p)
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn tag(&self) -> SpaceTag<T> {
        self.tag
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Number of cells `m` on `[-1, 0]`.
    pub fn history_steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn step(&self) -> T {
        T::one() / T::from_count(self.history_steps())
    }

    pub fn theta(&self, j: usize) -> T {
        -T::one() + self.step() * T::from_count(j)
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[T] {
        &self.rows[j]
    }

    pub fn into_rows(self) -> Vec<Vec<T>> {
        self.rows
    }

    /// Row at `θ` as a grid function; `θ` must be a history node.
    pub fn at(&self, theta: T) -> Result<GridFunction<T>> {
        let j = exact_multiple(theta + T::one(), self.step())
            .filter(|&j| j <= self.history_steps())
            .ok_or(Error::OffGrid {
                t: theta.as_f64(),
                step: self.step().as_f64(),
            })?;
        Ok(GridFunction::from_parts_unchecked(
            self.grid.clone(),
            self.rows[j].clone(),
            self.tag,
        ))
    }

    /// `(∫_{-1}^0 ‖h(θ)‖_E^p dθ)^{1/p}` by the trapezoid rule.
    pub fn norm_lp(&self, p: T) -> T {
        let h = self.step();
        let m = self.history_steps();
        let mut acc = T::zero();
        for (j, row) in self.rows.iter().enumerate() {
            let w = if j == 0 || j == m { h * T::half() } else { h };
            acc += w * norm_values(&self.grid, self.tag, row).powf(p);
        }
        acc.powf(p.recip())
    }

    pub fn norm(&self) -> T {
        self.norm_lp(self.p)
    }
}
