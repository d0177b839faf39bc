//! Discretized state spaces, their norms, and segment / lift bookkeeping.

mod function;
mod grid;
mod lifted;
mod segment;
mod trajectory;

pub use function::{norm_e, norm_values, GridFunction, SpaceTag};
pub use grid::{GridKind, SpatialGrid};
pub use lifted::{norm_ep, LiftedState};
pub use segment::SegmentFunction;
pub use trajectory::{segment_extract, Trajectory};

pub(crate) use function::pair_values;
pub(crate) use grid::ensure_compatible;
pub(crate) use trajectory::segment_row;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Bielecki-type norm `sup_s e^{-βs} (E‖Y(s)‖^q)^{1/q}` of an ensemble, where
/// the expectation is the ensemble mean and `‖·‖` is `norm_E` of each state.
pub fn bielecki_norm<T: Real>(ensemble: &[Trajectory<T>], beta: T, q: T) -> Result<T> {
    bielecki_norm_by(ensemble, beta, q, |traj, n| traj.state(n).norm())
}

/// Same as [`bielecki_norm`] with the lifted-state norm on `E × Lᵖ`.
pub fn bielecki_norm_lifted<T: Real>(ensemble: &[Trajectory<T>], beta: T, q: T, p: T) -> Result<T> {
    if ensemble.iter().any(|t| t.lifted().is_none()) {
        return Err(invalid("ensemble", "trajectories carry no lifted states"));
    }
    bielecki_norm_by(ensemble, beta, q, |traj, n| {
        traj.lifted().expect("checked above")[n].norm(p)
    })
}

/// Generic form: `state_norm(traj, n)` supplies the norm of the state at node `n`.
pub fn bielecki_norm_by<T: Real>(
    ensemble: &[Trajectory<T>],
    beta: T,
    q: T,
    state_norm: impl Fn(&Trajectory<T>, usize) -> T,
) -> Result<T> {
    let first = ensemble.first().ok_or(Error::EmptyEnsemble)?;
    if beta < T::zero() {
        return Err(invalid("beta", "must be non-negative"));
    }
    if !(q >= T::one()) {
        return Err(invalid("q", "exponent must satisfy q >= 1"));
    }
    if ensemble.iter().any(|t| t.len() != first.len() || t.dt() != first.dt()) {
        return Err(Error::GridMismatch("ensemble members must share the time grid".into()));
    }
    let count = T::from_count(ensemble.len());
    let mut sup = T::zero();
    for n in 0..first.len() {
        let moment = ensemble.iter().map(|traj| state_norm(traj, n).powf(q)).sum::<T>() / count;
        let weighted = (-beta * first.time(n)).exp() * moment.powf(q.recip());
        sup = sup.max(weighted);
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn grid() -> Arc<SpatialGrid<f64>> {
        SpatialGrid::unit_interval(17).unwrap()
    }

    fn history(m: usize, c: f64) -> SegmentFunction<f64> {
        SegmentFunction::from_fn(grid(), SpaceTag::C0, m, 2.0, move |_, x| c * x).unwrap()
    }

    fn constant_trajectory(c: f64, steps: usize, dt: f64) -> Trajectory<f64> {
        let x = GridFunction::from_fn(grid(), SpaceTag::C0, |xi| c * xi).unwrap();
        Trajectory::new(dt, vec![x; steps + 1], history((1.0 / dt) as usize, c)).unwrap()
    }

    #[test]
    fn norm_ep_examples() {
        let g = grid();
        let zero = LiftedState::new(
            GridFunction::zeros(g.clone(), SpaceTag::C0),
            SegmentFunction::zeros(g.clone(), SpaceTag::C0, 8, 2.0),
        )
        .unwrap();
        assert_eq!(norm_ep(&zero, 2.0).unwrap(), 0.0);

        let head = GridFunction::from_fn(g.clone(), SpaceTag::C0, |x| x).unwrap();
        let tail = SegmentFunction::from_fn(g.clone(), SpaceTag::C0, 8, 1.0, |_, x| x).unwrap();
        let y = LiftedState::new(head.clone(), tail).unwrap();
        assert!((norm_ep(&y, 1.0).unwrap() - 2.0).abs() < 1e-14);

        let y = LiftedState::new(head.scale(3.0), SegmentFunction::zeros(g, SpaceTag::C0, 8, 2.0)).unwrap();
        assert_eq!(norm_ep(&y, 2.0).unwrap(), 3.0);
        assert!(norm_ep(&y, 0.5).is_err());
    }

    #[test]
    fn bielecki_examples() {
        let zero = constant_trajectory(0.0, 8, 0.125);
        assert_eq!(bielecki_norm(&[zero], 1.0, 2.0).unwrap(), 0.0);
        let c = constant_trajectory(1.5, 8, 0.125);
        assert_eq!(bielecki_norm(std::slice::from_ref(&c), 0.0, 2.0).unwrap(), 1.5);
        assert_eq!(bielecki_norm(&[c], 3.0, 2.0).unwrap(), 1.5);
        assert_eq!(bielecki_norm::<f64>(&[], 1.0, 2.0), Err(Error::EmptyEnsemble));
    }

    #[test]
    fn bielecki_is_monotone_in_beta_for_constant_paths() {
        let c = vec![constant_trajectory(0.7, 8, 0.125), constant_trajectory(1.2, 8, 0.125)];
        let a = bielecki_norm(&c, 0.5, 2.0).unwrap();
        let b = bielecki_norm(&c, 2.0, 2.0).unwrap();
        assert!(b <= a);
    }

    #[test]
    fn segment_extract_reads_history_then_trajectory() {
        let dt = 0.125;
        let g = grid();
        let hist = history(8, 2.0);
        let states: Vec<_> = (0..=8)
            .map(|n| GridFunction::from_fn(g.clone(), SpaceTag::C0, |x| n as f64 * x).unwrap())
            .collect();
        let traj = Trajectory::new(dt, states, hist.clone()).unwrap();
        assert_eq!(segment_extract(&traj, 0.0).unwrap(), hist);

        let seg = segment_extract(&traj, 0.5).unwrap();
        // θ_j ≤ -0.5 read f₀, later rows read X(0.5+θ)
        for j in 0..=8 {
            let expect: &[f64] = if j <= 4 {
                hist.row(j + 4)
            } else {
                traj.state(j - 4).values()
            };
            assert_eq!(seg.row(j), expect);
        }
        assert_eq!(seg.row(8), traj.state(4).values());
        assert!(segment_extract(&traj, 1.5).is_err());
        assert!(segment_extract(&traj, 0.3).is_err());
    }

    #[test]
    fn segment_of_constant_trajectory_is_constant() {
        let traj = constant_trajectory(2.0, 8, 0.125);
        let seg = segment_extract(&traj, 1.0).unwrap();
        assert!(seg.rows().iter().all(|r| r == traj.state(0).values()));
    }

    fn c0_function(coeffs: Vec<f64>) -> GridFunction<f64> {
        GridFunction::from_fn(grid(), SpaceTag::C0, move |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * std::f64::consts::PI * x).sin())
                .sum()
        })
        .unwrap()
    }

    proptest! {
        #[test]
        fn norm_e_is_a_norm(
            a in proptest::collection::vec(-5.0..5.0f64, 4),
            b in proptest::collection::vec(-5.0..5.0f64, 4),
            c in -4.0..4.0f64,
        ) {
            let x = c0_function(a);
            let y = c0_function(b);
            for tag in [SpaceTag::C0, SpaceTag::L1, SpaceTag::L1Weighted(0.7)] {
                let xs = GridFunction::new(grid(), x.values().to_vec(), tag).unwrap();
                let ys = GridFunction::new(grid(), y.values().to_vec(), tag).unwrap();
                let sum = xs.add(&ys).unwrap().norm();
                prop_assert!(sum <= xs.norm() + ys.norm() + 1e-12);
                prop_assert!((xs.scale(c).norm() - c.abs() * xs.norm()).abs() <= 1e-12 * (1.0 + xs.norm()));
            }
        }

        #[test]
        fn norm_ep_is_a_norm(
            a in proptest::collection::vec(-5.0..5.0f64, 4),
            b in proptest::collection::vec(-5.0..5.0f64, 4),
            c in -4.0..4.0f64,
            p in 1.0..4.0f64,
        ) {
            let x = c0_function(a.clone());
            let y = c0_function(b.clone());
            let mk = |f: &GridFunction<f64>, s: f64| {
                let v = f.values().to_vec();
                let tail = SegmentFunction::from_fn(grid(), SpaceTag::C0, 8, p, |th, xi| {
                    v[(xi * 16.0).round() as usize] * (1.0 + s * th)
                }).unwrap();
                LiftedState::new(f.clone(), tail).unwrap()
            };
            let yx = mk(&x, 0.5);
            let yy = mk(&y, -0.3);
            let tail_sum: Vec<Vec<f64>> = yx.tail.rows().iter().zip(yy.tail.rows())
                .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u + v).collect()).collect();
            let sum = LiftedState::new(
                x.add(&y).unwrap(),
                SegmentFunction::new(grid(), SpaceTag::C0, tail_sum, p).unwrap(),
            ).unwrap();
            prop_assert!(sum.norm(p) <= yx.norm(p) + yy.norm(p) + 1e-12);
            let scaled_rows: Vec<Vec<f64>> = yx.tail.rows().iter()
                .map(|r| r.iter().map(|v| c * v).collect()).collect();
            let scaled = LiftedState::new(
                x.scale(c),
                SegmentFunction::new(grid(), SpaceTag::C0, scaled_rows, p).unwrap(),
            ).unwrap();
            prop_assert!((scaled.norm(p) - c.abs() * yx.norm(p)).abs() <= 1e-12 * (1.0 + yx.norm(p)));
        }

        #[test]
        fn segment_at_zero_equals_state(n in 1usize..=8) {
            let dt = 0.125;
            let g = grid();
            let states: Vec<_> = (0..=8)
                .map(|k| GridFunction::from_fn(g.clone(), SpaceTag::C0, |x| (k as f64 + 1.0) * x * x).unwrap())
                .collect();
            let traj = Trajectory::new(dt, states, history(8, 3.0)).unwrap();
            let t = n as f64 * dt;
            let seg = segment_extract(&traj, t).unwrap();
            let head = seg.at(0.0).unwrap();
            prop_assert_eq!(head.values(), traj.at(t).unwrap().values());
        }
    }
}
