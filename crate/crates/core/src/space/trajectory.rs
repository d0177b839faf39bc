use crate::error::{invalid, Error, Result};
use crate::scalar::{exact_multiple, Real};
use crate::space::function::{GridFunction, SpaceTag};
use crate::space::grid::ensure_compatible;
use crate::space::lifted::LiftedState;
use crate::space::segment::SegmentFunction;

/// States on the uniform time grid `0, Δt, …, NΔt`, together with the initial
/// history that precedes them.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    dt: T,
    states: Vec<GridFunction<T>>,
    history: SegmentFunction<T>,
    lifted: Option<Vec<LiftedState<T>>>,
}

impl<T: Real> Trajectory<T> {
    pub fn new(dt: T, states: Vec<GridFunction<T>>, history: SegmentFunction<T>) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(invalid("dt", "time step must be positive"));
        }
        let first = states.first().ok_or(Error::EmptyGrid)?;
        for s in &states {
            ensure_compatible(first.grid(), s.grid(), "trajectory states")?;
        }
        ensure_compatible(first.grid(), history.grid(), "trajectory history")?;
        Ok(Self {
            dt,
            states,
            history,
            lifted: None,
        })
    }

    pub fn with_lifted(mut self, lifted: Vec<LiftedState<T>>) -> Result<Self> {
        if lifted.len() != self.states.len() {
            return Err(Error::GridMismatch(format!(
                "{} lifted states for {} time nodes",
                lifted.len(),
                self.states.len()
            )));
        }
        self.lifted = Some(lifted);
        Ok(self)
    }

    /// Builds a trajectory from raw per-node samples sharing one grid and tag.
    pub(crate) fn from_values(dt: T, values: Vec<Vec<T>>, history: &SegmentFunction<T>, tag: SpaceTag<T>) -> Self {
        let grid = history.grid().clone();
        let states = values
            .into_iter()
            .map(|v| GridFunction::from_parts_unchecked(grid.clone(), v, tag))
            .collect();
        Self {
            dt,
            states,
            history: history.clone(),
            lifted: None,
        }
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn horizon(&self) -> T {
        self.dt * T::from_count(self.steps())
    }

    pub fn time(&self, n: usize) -> T {
        self.dt * T::from_count(n)
    }

    pub fn states(&self) -> &[GridFunction<T>] {
        &self.states
    }

    pub fn state(&self, n: usize) -> &GridFunction<T> {
        &self.states[n]
    }

    pub fn history(&self) -> &SegmentFunction<T> {
        &self.history
    }

    pub fn lifted(&self) -> Option<&[LiftedState<T>]> {
        self.lifted.as_deref()
    }

    /// Index of time `t` on the trajectory grid.
    pub fn index_of(&self, t: T) -> Result<usize> {
        let off = Error::OffGrid {
            t: t.as_f64(),
            step: self.dt.as_f64(),
        };
        if t < T::zero() {
            return Err(off);
        }
        exact_multiple(t, self.dt).filter(|&n| n < self.states.len()).ok_or(off)
    }

    pub fn at(&self, t: T) -> Result<&GridFunction<T>> {
        Ok(&self.states[self.index_of(t)?])
    }
}

/// The segment `θ ↦ X(t+θ)`. Nodes with `t + θ ≤ 0` read the initial history.
pub fn segment_extract<T: Real>(traj: &Trajectory<T>, t: T) -> Result<SegmentFunction<T>> {
    let n = traj.index_of(t)?;
    let m = traj.history.history_steps();
    if exact_multiple(traj.history.step(), traj.dt) != Some(1) {
        return Err(Error::GridMismatch(
            "history step must equal the trajectory time step".into(),
        ));
    }
    Ok(segment_from_values(
        n,
        m,
        traj.history.rows(),
        |l| traj.states[l].values(),
        traj.history.grid().clone(),
        traj.history.tag(),
        traj.history.p(),
    ))
}

/// Shared index arithmetic for building `X_{t_n}` from stored samples.
pub(crate) fn segment_row<'a, T>(
    n: usize,
    j: usize,
    m: usize,
    history: &'a [Vec<T>],
    state: impl Fn(usize) -> &'a [T],
) -> &'a [T] {
    // time index of θ_j relative to t_n
    let l = n as isize + j as isize - m as isize;
    if l <= 0 {
        &history[(m as isize + l) as usize]
    } else {
        state(l as usize)
    }
}

pub(crate) fn segment_from_values<'a, T: Real>(
    n: usize,
    m: usize,
    history: &'a [Vec<T>],
    state: impl Fn(usize) -> &'a [T] + Copy,
    grid: std::sync::Arc<crate::space::grid::SpatialGrid<T>>,
    tag: SpaceTag<T>,
    p: T,
) -> SegmentFunction<T> {
    let rows = (0..=m).map(|j| segment_row(n, j, m, history, state).to_vec()).collect();
    SegmentFunction::from_rows_unchecked(grid, tag, rows, p)
}
