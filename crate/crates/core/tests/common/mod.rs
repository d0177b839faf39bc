#![allow(dead_code)]

use std::f64::consts::PI;

use stochdelay::linalg::Matrix;
use stochdelay::semigroup::{FiniteDimSemigroup, Generator, McKendrickSemigroup, RenewalConfig, TransportSemigroup};
use stochdelay::solver::{DelayKernel, DelayProblem, Drift, ScalarMap};
use stochdelay::space::{GridFunction, SegmentFunction, SpaceTag, SpatialGrid};

/// Transport example on `[0,1]` with `Δξ = Δt = 2^{-level}`.
pub fn transport_problem(level: u32, with_drift: bool) -> DelayProblem<f64> {
    let m = 1usize << level;
    let grid = SpatialGrid::unit_interval(m + 1).unwrap();
    let sg = TransportSemigroup::new(grid.clone(), 0.5).unwrap();
    let drift = if with_drift {
        Drift {
            phi: Some(DelayKernel::from_fn(&grid, m, |th, x| 0.6 * (1.0 + th) * (PI * x).sin()).unwrap()),
            k: Some(DelayKernel::from_fn(&grid, m, |th, x| 0.4 * (1.0 + 0.5 * th) * x).unwrap()),
            f1: ScalarMap::Sine {
                amplitude: 0.8,
                frequency: 1.0,
            },
            f2: ScalarMap::Tanh {
                amplitude: 0.5,
                scale: 2.0,
            },
        }
    } else {
        Drift::zero()
    };
    DelayProblem {
        generator: Generator::Transport(sg),
        drift,
        noise: vec![GridFunction::from_fn(grid.clone(), SpaceTag::C0, |x| 0.5 * (PI * x).sin() * x).unwrap()],
        x0: GridFunction::from_fn(grid.clone(), SpaceTag::C0, |x| (PI * x).sin()).unwrap(),
        f0: SegmentFunction::from_fn(grid, SpaceTag::C0, m, 2.0, |th, x| (1.0 + 0.5 * th) * (PI * x).sin()).unwrap(),
        p: 2.0,
        q: 2.0,
        horizon: 1.0,
        noise_support: None,
    }
}

/// McKendrick example on `[0, 10]` with `Δa = Δt = 2^{-level}`.
pub fn mckendrick_problem(level: u32, with_drift: bool) -> DelayProblem<f64> {
    let m = 1usize << level;
    let h = 1.0 / m as f64;
    let grid = SpatialGrid::half_line_with_step(h, 10.0).unwrap();
    let n = grid.len();
    let mu: Vec<f64> = grid.nodes().iter().map(|&a| 0.2 + 0.01 * a * a).collect();
    let b: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&a| {
            if (1.0..5.0).contains(&a) {
                0.6 * (PI * (a - 1.0) / 4.0).sin()
            } else {
                0.0
            }
        })
        .collect();
    assert_eq!(mu.len(), n);
    let sg = McKendrickSemigroup::new(grid.clone(), mu, b, 1.0, RenewalConfig::default()).unwrap();
    let drift = if with_drift {
        Drift {
            phi: Some(DelayKernel::from_fn(&grid, m, |th, a| 0.3 * (1.0 + th) * (-a / 4.0).exp()).unwrap()),
            k: None,
            f1: ScalarMap::Tanh {
                amplitude: 0.3,
                scale: 1.0,
            },
            f2: ScalarMap::Zero,
        }
    } else {
        Drift::zero()
    };
    let bump = |a: f64, c: f64, w: f64| {
        let r = (a - c) / w;
        if r.abs() < 1.0 {
            (1.0 - r * r).powi(2)
        } else {
            0.0
        }
    };
    DelayProblem {
        generator: Generator::McKendrick(sg),
        drift,
        noise: vec![GridFunction::from_fn(grid.clone(), SpaceTag::L1, |a| 0.3 * bump(a, 1.0, 1.0)).unwrap()],
        x0: GridFunction::from_fn(grid.clone(), SpaceTag::L1, |a| bump(a, 2.0, 1.5)).unwrap(),
        f0: SegmentFunction::from_fn(grid, SpaceTag::L1, m, 2.0, |_, a| bump(a, 2.0, 1.5)).unwrap(),
        p: 2.0,
        q: 2.0,
        horizon: 1.0,
        noise_support: Some(2.0),
    }
}

/// `dX = (MX + φ)dt + ψ dW` on `ℝⁿ` with `Δt = 2^{-level}`; no drift unless set by the caller.
pub fn finite_dim_problem(level: u32, matrix: Matrix<f64>, psi: Vec<Vec<f64>>, x0: Vec<f64>) -> DelayProblem<f64> {
    let m = 1usize << level;
    let n = matrix.dim();
    let grid = SpatialGrid::points(n).unwrap();
    let tag = SpaceTag::Euclidean;
    let f0 = SegmentFunction::new(grid.clone(), tag, vec![x0.clone(); m + 1], 2.0).unwrap();
    DelayProblem {
        generator: Generator::FiniteDim(FiniteDimSemigroup::new(matrix).unwrap()),
        drift: Drift::zero(),
        noise: psi
            .into_iter()
            .map(|c| GridFunction::new(grid.clone(), c, tag).unwrap())
            .collect(),
        x0: GridFunction::new(grid, x0, tag).unwrap(),
        f0,
        p: 2.0,
        q: 2.0,
        horizon: 1.0,
        noise_support: None,
    }
}
