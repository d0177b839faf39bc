use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::semigroup::{check_time, Semigroup};
use crate::space::{GridFunction, GridKind, SpaceTag, SpatialGrid};

/// Damped right translation on `C_0([0,1])`:
/// `S(t)x(ξ) = e^{-μt} x(ξ - t)` for `ξ ≥ t` and `0` otherwise.
///
/// Shifts are whole grid cells; `t` is rounded to the nearest multiple of the
/// grid step (see [`TransportSemigroup::rounding`]).
#[derive(Debug, Clone)]
pub struct TransportSemigroup<T> {
    grid: Arc<SpatialGrid<T>>,
    decay: T,
}

impl<T: Real> TransportSemigroup<T> {
    pub fn new(grid: Arc<SpatialGrid<T>>, decay: T) -> Result<Self> {
        if grid.kind() != GridKind::UnitInterval {
            return Err(invalid("grid", "transport acts on a unit-interval grid"));
        }
        if !(decay >= T::zero()) || !decay.is_finite() {
            return Err(invalid("decay", "must be finite and non-negative"));
        }
        Ok(Self { grid, decay })
    }

    pub fn decay(&self) -> T {
        self.decay
    }

    /// Difference between `t` and the shift actually applied.
    pub fn rounding(&self, t: T) -> T {
        self.grid.shift_count(t).1
    }

    /// `S(t)x` for a `C_0`-tagged grid function.
    pub fn transport_apply(&self, t: T, x: &GridFunction<T>) -> Result<GridFunction<T>> {
        if x.tag() != SpaceTag::C0 {
            return Err(Error::GridMismatch("transport expects a C0 function".into()));
        }
        self.apply(t, x)
    }
}

impl<T: Real> Semigroup<T> for TransportSemigroup<T> {
    fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    fn tag(&self) -> SpaceTag<T> {
        SpaceTag::C0
    }

    fn apply_values(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        check_time(t)?;
        let (k, _) = self.grid.shift_count(t);
        if t == T::zero() {
            return Ok(x.to_vec());
        }
        let factor = (-self.decay * t).exp();
        let n = x.len();
        let mut out = vec![T::zero(); n];
        if k < n {
            for (o, &v) in out[k..].iter_mut().zip(x) {
                *o = factor * v;
            }
        }
        Ok(out)
    }

    fn orbit_values(&self, dt: T, steps: usize, x: &[T]) -> Result<Vec<Vec<T>>> {
        check_time(dt)?;
        (0..=steps)
            .map(|s| self.apply_values(dt * T::from_count(s), x))
            .collect()
    }

    fn growth_bound(&self) -> T {
        -self.decay
    }
}
