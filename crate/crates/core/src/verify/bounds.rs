//! Empirical constants for the moment, initial-data Lipschitz and path-continuity properties.

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::semigroup::Semigroup;
use crate::solver::DelayProblem;
use crate::space::Trajectory;

/// `max_i ‖X(t_{i+1}) − X(t_i)‖_E`.
pub fn path_modulus<T: Real>(traj: &Trajectory<T>) -> Result<T> {
    let mut m = T::zero();
    for w in traj.states().windows(2) {
        m = m.max(w[1].sub(&w[0])?.norm());
    }
    Ok(m)
}

/// `sup_s` of the ensemble mean of `‖X(s)‖^q`.
pub fn moment_sup<T: Real>(ensemble: &[Trajectory<T>], q: T) -> Result<T> {
    if ensemble.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let len = ensemble[0].len();
    if ensemble.iter().any(|t| t.len() != len) {
        return Err(Error::GridMismatch("ensemble time grids differ".into()));
    }
    let n = T::from_count(ensemble.len());
    Ok((0..len)
        .map(|s| ensemble.iter().map(|t| t.state(s).norm().powf(q)).sum::<T>() / n)
        .fold(T::zero(), T::max))
}

/// `sup_s E‖X(s;x) − X(s;y)‖^q` for ensembles paired member-by-member on shared noise.
pub fn paired_moment_sup<T: Real>(a: &[Trajectory<T>], b: &[Trajectory<T>], q: T) -> Result<T> {
    if a.is_empty() || a.len() != b.len() {
        return Err(Error::EmptyEnsemble);
    }
    let len = a[0].len();
    let n = T::from_count(a.len());
    let mut best = T::zero();
    for s in 0..len {
        let mut acc = T::zero();
        for (x, y) in a.iter().zip(b) {
            acc += x.state(s).sub(y.state(s))?.norm().powf(q);
        }
        best = best.max(acc / n);
    }
    Ok(best)
}

/// Gronwall constant `e^{q(ω⁺ + 2L)T}` bounding `sup_s ‖X(s;x) − X(s;y)‖^q / ‖x − y‖^q`
/// for initial data sharing the history.
pub fn gronwall_bound<T: Real>(problem: &DelayProblem<T>) -> T {
    let omega = problem.generator.growth_bound().max(T::zero());
    (problem.q * (omega + T::two() * problem.lipschitz()) * problem.horizon).exp()
}
