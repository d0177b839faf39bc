//! Strongly continuous semigroups on the discretized state spaces and the
//! delay semigroup on the lifted space.

mod delay;
mod finite_dim;
mod mckendrick;
mod transport;

pub use delay::{left_translation_apply, s_curl_apply, DelaySemigroup};
pub use finite_dim::FiniteDimSemigroup;
pub use mckendrick::{Extension, McKendrickSemigroup, RenewalConfig};
pub use transport::TransportSemigroup;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::space::{ensure_compatible, GridFunction, SpaceTag, SpatialGrid};

/// A semigroup `S(t)` acting on samples over a fixed spatial grid.
pub trait Semigroup<T: Real>: Send + Sync {
    fn grid(&self) -> &Arc<SpatialGrid<T>>;

    /// Space the semigroup acts on.
    fn tag(&self) -> SpaceTag<T>;

    /// `S(t)x` on raw nodal values.
    fn apply_values(&self, t: T, x: &[T]) -> Result<Vec<T>>;

    /// `[x, S(dt)x, S(2dt)x, …, S(steps·dt)x]`.
    fn orbit_values(&self, dt: T, steps: usize, x: &[T]) -> Result<Vec<Vec<T>>> {
        (0..=steps)
            .map(|k| self.apply_values(dt * T::from_count(k), x))
            .collect()
    }

    /// `ω` with `‖S(t)‖ ≤ e^{ωt}`.
    fn growth_bound(&self) -> T;

    fn apply(&self, t: T, x: &GridFunction<T>) -> Result<GridFunction<T>> {
        ensure_compatible(self.grid(), x.grid(), "semigroup argument")?;
        let v = self.apply_values(t, x.values())?;
        Ok(GridFunction::from_parts_unchecked(x.grid().clone(), v, x.tag()))
    }
}

pub(crate) fn check_time<T: Real>(t: T) -> Result<()> {
    if t < T::zero() || !t.is_finite() {
        Err(Error::NegativeTime(t.as_f64()))
    } else {
        Ok(())
    }
}

/// The concrete semigroups the solver can be driven by.
#[derive(Debug, Clone)]
pub enum Generator<T> {
    Transport(TransportSemigroup<T>),
    McKendrick(McKendrickSemigroup<T>),
    FiniteDim(FiniteDimSemigroup<T>),
}

impl<T: Real> Generator<T> {
    fn inner(&self) -> &dyn Semigroup<T> {
        match self {
            Self::Transport(s) => s,
            Self::McKendrick(s) => s,
            Self::FiniteDim(s) => s,
        }
    }

    /// Short name used in manifests and logs.
    pub fn name(&self) -> &'static str {
        match self {
            Self::Transport(_) => "transport",
            Self::McKendrick(_) => "mckendrick",
            Self::FiniteDim(_) => "finite_dim",
        }
    }
}

impl<T: Real> Semigroup<T> for Generator<T> {
    fn grid(&self) -> &Arc<SpatialGrid<T>> {
        self.inner().grid()
    }

    fn tag(&self) -> SpaceTag<T> {
        self.inner().tag()
    }

    fn apply_values(&self, t: T, x: &[T]) -> Result<Vec<T>> {
        self.inner().apply_values(t, x)
    }

    fn orbit_values(&self, dt: T, steps: usize, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.inner().orbit_values(dt, steps, x)
    }

    fn growth_bound(&self) -> T {
        self.inner().growth_bound()
    }
}
