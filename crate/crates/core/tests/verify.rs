mod common;

use approx::assert_relative_eq;
use stochdelay::linalg::Matrix;
use stochdelay::noise::sample_path;
use stochdelay::solver::{picard_solve, PicardConfig, ScalarMap};
use stochdelay::space::GridFunction;
use stochdelay::verify::*;

fn quiet() -> ReportConfig<f64> {
    ReportConfig {
        n_random_functionals: 2,
        ..ReportConfig::default()
    }
}

#[test]
fn zero_problem_has_zero_residuals() {
    let build = |l: usize| {
        let mut pb = common::transport_problem(4 + l as u32, false);
        let g = pb.grid().clone();
        pb.x0 = GridFunction::zeros(g.clone(), pb.tag());
        pb.f0 = stochdelay::space::SegmentFunction::zeros(g.clone(), pb.tag(), pb.history_steps(), 2.0);
        pb.noise = vec![GridFunction::zeros(g, pb.tag())];
        Ok(pb)
    };
    let rep = equivalence_report(build, 2, &quiet()).unwrap();
    for l in &rep.levels {
        assert!(l.weak.iter().all(|&w| w == 0.0));
        assert_eq!(l.mild, 0.0);
        assert_eq!(l.strong, Some(0.0));
    }
    assert!(rep.verdict(0.4).pass);
}

#[test]
fn finite_dim_oracle_converges_at_first_order() {
    let m = Matrix::new(2, vec![-1.0, 0.3, -0.2, -0.5]).unwrap();
    let build = |l: usize| {
        let mut pb = common::finite_dim_problem(4 + l as u32, m.clone(), vec![vec![0.4, 0.1]], vec![1.0, -0.5]);
        pb.drift.f1 = ScalarMap::Tanh {
            amplitude: 0.5,
            scale: 1.0,
        };
        Ok(pb)
    };
    let rep = equivalence_report(build, 4, &quiet()).unwrap();
    for kind in ResidualKind::ALL {
        let order = rep.fitted_order(kind).unwrap();
        assert!((0.8..1.3).contains(&order), "{kind:?} order {order}");
    }
    assert!(rep.verdict(0.8).pass, "{:?}", rep.verdict(0.8));
}

#[test]
fn transport_residuals_shrink_together() {
    let build = |l: usize| Ok(common::transport_problem(5 + l as u32, true));
    let rep = equivalence_report(build, 3, &quiet()).unwrap();
    let v = rep.verdict(0.4);
    assert!(v.pass, "{v:?}");
    assert!(rep.divergence_levels().is_empty());
}

#[test]
fn flipped_drift_sign_breaks_the_weak_form() {
    // solve with +φ, check the residuals against −φ
    let pb = common::transport_problem(6, true);
    let path = sample_path(64, 1.0 / 64.0, 1, 5).unwrap();
    let sol = picard_solve(&pb, &path, &PicardConfig::default()).unwrap();
    let mut flipped = pb.clone();
    flipped.drift.f1 = ScalarMap::Sine {
        amplitude: -0.8,
        frequency: 1.0,
    };
    let suite = functional_suite(&pb.generator, 0, 0);
    let honest = weak_residual(&pb, &sol.trajectory, &path, &suite[3], 1.0).unwrap();
    let faulty = weak_residual(&flipped, &sol.trajectory, &path, &suite[3], 1.0).unwrap();
    assert!(faulty > 10.0 * honest, "{honest} vs {faulty}");
}

#[test]
fn weak_residual_is_subadditive() {
    let pb = common::transport_problem(6, true);
    let path = sample_path(64, 1.0 / 64.0, 1, 3).unwrap();
    let sol = picard_solve(&pb, &path, &PicardConfig::default()).unwrap();
    let suite = functional_suite(&pb.generator, 3, 1);
    for a in &suite {
        for b in suite.iter().step_by(3) {
            let r = |f: &TestFunctional<f64>| weak_residual(&pb, &sol.trajectory, &path, f, 1.0).unwrap();
            assert!(r(&a.sum(b)) <= r(a) + r(b) + 1e-14);
        }
    }
}

#[test]
fn mild_residual_sees_a_perturbation() {
    let pb = common::transport_problem(6, false);
    let path = sample_path(64, 1.0 / 64.0, 1, 8).unwrap();
    let sol = picard_solve(&pb, &path, &PicardConfig::default()).unwrap();
    let base = mild_residual(&pb, &sol.trajectory, &path, 1.0).unwrap();
    assert!(base < 1e-12, "drift-free mild residual {base}");
    let mut states = sol.trajectory.states().to_vec();
    let mut v = states[64].values().to_vec();
    v[20] += 0.05;
    states[64] = states[64].with_values(v).unwrap();
    let bumped = stochdelay::space::Trajectory::new(1.0 / 64.0, states, sol.trajectory.history().clone()).unwrap();
    let r = mild_residual(&pb, &bumped, &path, 1.0).unwrap();
    assert_relative_eq!(r, 0.05, max_relative = 1e-9);
}

#[test]
fn mckendrick_strong_residual_uses_the_boundary_row() {
    let pb = common::mckendrick_problem(4, true);
    let a = DiscreteGenerator::of(&pb.generator);
    assert!(matches!(a, DiscreteGenerator::Renewal { .. }));
    assert!(!a.ill_conditioned());
    let path = sample_path(16, 1.0 / 16.0, 1, 0).unwrap();
    let sol = picard_solve(&pb, &path, &PicardConfig::default()).unwrap();
    let s = strong_residual(&pb, &sol.trajectory, &path, 1.0).unwrap();
    assert!(s.is_some_and(|v| v.is_finite() && v < 0.2));
}

#[test]
fn ou_variance_oracle() {
    let pb = common::finite_dim_problem(6, Matrix::diagonal(&[-1.0, -1.0]), vec![vec![1.0, 0.0]], vec![0.0, 0.0]);
    let t = 1.0;
    let exact = (1.0 - (-2.0f64 * t).exp()) / 2.0;
    let rep = covariance_oracle_check_with(&pb, t, &[0, 1], 4000, 17, |k| if k == 0 { exact } else { 0.0 }).unwrap();
    // the left-point sum is biased by O(Δt)
    assert!(
        rep.probes[0].z.abs() < 5.0 || (rep.probes[0].mc_variance - exact).abs() < 0.02,
        "{rep:?}"
    );
    assert_eq!(rep.probes[1].mc_variance, 0.0);
    let quad = covariance_oracle_check(&pb, t, &[0], 4000, 17).unwrap();
    assert!(quad.within(5.0), "{quad:?}");
}

#[test]
fn covariance_oracle_rejects_drift() {
    let pb = common::transport_problem(4, true);
    assert!(covariance_oracle_check(&pb, 1.0, &[4], 10, 0).is_err());
}

#[test]
fn suite_functionals_are_smooth_and_supported_inside() {
    let pb = common::transport_problem(7, false);
    let suite = functional_suite(&pb.generator, 5, 3);
    assert_eq!(suite.len(), 15);
    for f in &suite {
        assert_eq!(f.density[0], 0.0);
        assert_eq!(*f.density.last().unwrap(), 0.0);
        assert!(f.adjoint.iter().all(|v| v.is_finite()));
    }
    // same seed, same suite
    assert_eq!(suite, functional_suite(&pb.generator, 5, 3));
}
