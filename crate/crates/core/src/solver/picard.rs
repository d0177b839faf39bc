use crate::error::{invalid, Error, Result};
use crate::noise::{convolution_series, NoisePath};
use crate::scalar::{exact_multiple, Real};
use crate::semigroup::Semigroup;
use crate::solver::problem::DelayProblem;
use crate::space::{norm_values, segment_row, GridFunction, Trajectory};

/// Picard iteration settings.
#[derive(Debug, Clone, Copy)]
pub struct PicardConfig<T> {
    /// Bielecki weight; `None` selects `ω⁺ + 4L`.
    pub beta: Option<T>,
    /// Stop when the sup-over-time distance of successive iterates drops below this.
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for PicardConfig<T> {
    fn default() -> Self {
        Self {
            beta: None,
            tol: T::lit(1e-10),
            max_iter: 200,
        }
    }
}

/// Convergence record of one Picard solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardDiagnostics<T> {
    pub iterations: usize,
    /// `max_n ‖Z_{k+1}(t_n) − Z_k(t_n)‖_E` per iteration.
    pub distances: Vec<T>,
    /// Ratios of successive distances in the Bielecki norm on `E × Lᵖ`.
    pub ratios: Vec<T>,
    pub beta: T,
    pub lipschitz: T,
    /// `C_{β,a} = ∫₀ᵀ a(u) e^{-βu} du` with `a(u) = 2L e^{ω⁺u}`.
    pub contraction_bound: T,
}

/// A solved trajectory and its diagnostics.
#[derive(Debug, Clone)]
pub struct Solution<T> {
    pub trajectory: Trajectory<T>,
    pub diagnostics: PicardDiagnostics<T>,
}

/// How the Bochner integral `∫S(t−s)φ ds` is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Left-point sum; the scheme the solver iterates.
    LeftPoint,
    /// Trapezoid sum; an independent reference for residuals.
    Trapezoid,
}

pub(crate) fn check_path<T: Real>(problem: &DelayProblem<T>, path: &NoisePath<T>) -> Result<()> {
    if path.dim() != problem.noise.len() {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional path for {} noise columns",
            path.dim(),
            problem.noise.len()
        )));
    }
    if exact_multiple(path.dt(), problem.dt()) != Some(1) {
        return Err(Error::GridMismatch(format!(
            "path step {} differs from the time step {}",
            path.dt().as_f64(),
            problem.dt().as_f64()
        )));
    }
    if path.n_steps() < problem.steps() {
        return Err(invalid("path", "does not cover the horizon"));
    }
    Ok(())
}

pub(crate) fn bielecki_weight<T: Real>(problem: &DelayProblem<T>, cfg: &PicardConfig<T>) -> (T, T, T) {
    let l = problem.lipschitz();
    let omega = problem.generator.growth_bound().max(T::zero());
    let beta = cfg.beta.unwrap_or(omega + T::lit(4.0) * l + T::lit(1e-3));
    let rate = beta - omega;
    let bound = if rate > T::zero() {
        T::two() * l * (T::one() - (-rate * problem.horizon).exp()) / rate
    } else {
        T::two() * l * problem.horizon
    };
    (beta, l, bound)
}

/// `S(t_n)x₀ + Σ_{i<n} S(t_n − t_i) ψ ΔW_i` for all `n`.
pub(crate) fn linear_part<T: Real>(problem: &DelayProblem<T>, path: &NoisePath<T>) -> Result<Vec<Vec<T>>> {
    let dt = problem.dt();
    let steps = problem.steps();
    let free = problem.generator.orbit_values(dt, steps, problem.x0.values())?;
    let orbits = problem
        .noise
        .iter()
        .map(|c| problem.generator.orbit_values(dt, steps, c.values()))
        .collect::<Result<Vec<_>>>()?;
    let zero_noise = problem.noise.iter().all(|c| c.values().iter().all(|&v| v == T::zero()));
    if zero_noise {
        return Ok(free);
    }
    let trimmed = truncated(path, steps)?;
    let stoch = convolution_series(&orbits, &trimmed);
    Ok(free
        .into_iter()
        .zip(stoch)
        .map(|(a, b)| a.iter().zip(&b).map(|(&x, &y)| x + y).collect())
        .collect())
}

fn truncated<T: Real>(path: &NoisePath<T>, steps: usize) -> Result<NoisePath<T>> {
    if path.n_steps() == steps {
        return Ok(path.clone());
    }
    NoisePath::from_increments(path.dt(), path.dim(), path.increments()[..steps * path.dim()].to_vec())
}

/// `φ(Z(t_i), Z_{t_i})` for `i = 0..=N` from trajectory samples.
pub(crate) fn drift_series<T: Real>(problem: &DelayProblem<T>, states: &[Vec<T>]) -> Vec<Vec<T>> {
    let m = problem.history_steps();
    let history = problem.f0.rows();
    let f2_states = problem.drift.map_f2(states);
    let f2_history = problem.drift.map_f2(history);
    (0..states.len())
        .map(|n| {
            problem.drift.eval_mapped(
                &states[n],
                m,
                &|j| segment_row(n, j, m, history, |l| &states[l]),
                Some(&|j| segment_row(n, j, m, &f2_history, |l| &f2_states[l])),
            )
        })
        .collect()
}

/// `Σ_i w_i Δt S(t_n − t_i) v_i` for every `n`, with left-point or trapezoid weights.
pub(crate) fn bochner_series<T: Real>(
    problem: &DelayProblem<T>,
    values: &[Vec<T>],
    rule: Quadrature,
) -> Result<Vec<Vec<T>>> {
    let dt = problem.dt();
    let steps = values.len() - 1;
    let len = problem.grid().len();
    let mut out = vec![vec![T::zero(); len]; steps + 1];
    for (i, v) in values.iter().enumerate() {
        if v.iter().all(|&x| x == T::zero()) {
            continue;
        }
        let orbit = problem.generator.orbit_values(dt, steps - i, v)?;
        for n in i..=steps {
            let w = match rule {
                Quadrature::LeftPoint if n == i => continue,
                Quadrature::LeftPoint => dt,
                Quadrature::Trapezoid if n == i => continue,
                Quadrature::Trapezoid if i == 0 || i == n => dt * T::half(),
                Quadrature::Trapezoid => dt,
            };
            for (o, &s) in out[n].iter_mut().zip(&orbit[n - i]) {
                *o += w * s;
            }
        }
    }
    Ok(out)
}

fn norms<T: Real>(problem: &DelayProblem<T>, a: &[Vec<T>], b: &[Vec<T>]) -> Vec<T> {
    let grid = problem.grid();
    let tag = problem.tag();
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d: Vec<T> = x.iter().zip(y).map(|(&u, &v)| u - v).collect();
            norm_values(grid, tag, &d)
        })
        .collect()
}

/// Bielecki norm on `E × Lᵖ(-1,0;E)` of a difference of two trajectories with the
/// same initial history, from the state-norm sequence `d_n`.
pub(crate) fn lifted_bielecki<T: Real>(d: &[T], m: usize, p: T, beta: T, dt: T) -> T {
    let h = T::one() / T::from_count(m);
    d.iter()
        .enumerate()
        .map(|(n, &dn)| {
            let seg: T = (0..=m)
                .map(|j| {
                    let l = n as isize + j as isize - m as isize;
                    let w = if j == 0 || j == m { h * T::half() } else { h };
                    if l <= 0 {
                        T::zero()
                    } else {
                        w * d[l as usize].powf(p)
                    }
                })
                .sum();
            (-beta * dt * T::from_count(n)).exp() * (dn + seg.powf(T::one() / p))
        })
        .fold(T::zero(), T::max)
}

/// Mild solution by Picard iteration of `𝒦(Z)(t) = S(t)x₀ + ∫S(t−s)φ(Z(s),Z_s)ds + ∫S(t−s)ψdW`
/// from `Z₀ = S(·)x₀`. Both integrals are left-point sums on the time grid.
pub fn picard_solve<T: Real>(
    problem: &DelayProblem<T>,
    path: &NoisePath<T>,
    cfg: &PicardConfig<T>,
) -> Result<Solution<T>> {
    problem.validate()?;
    check_path(problem, path)?;
    if !(cfg.tol > T::zero()) || cfg.max_iter == 0 {
        return Err(invalid("picard", "tol must be positive and max_iter at least 1"));
    }
    let (beta, lipschitz, contraction_bound) = bielecki_weight(problem, cfg);
    let dt = problem.dt();
    let steps = problem.steps();
    let m = problem.history_steps();
    let base = linear_part(problem, path)?;
    let mut diagnostics = PicardDiagnostics {
        iterations: 1,
        distances: Vec::new(),
        ratios: Vec::new(),
        beta,
        lipschitz,
        contraction_bound,
    };
    let states = if problem.drift.is_zero() {
        base
    } else {
        let mut z = problem.generator.orbit_values(dt, steps, problem.x0.values())?;
        let mut prev_lift: Option<T> = None;
        let mut growing = 0;
        diagnostics.iterations = 0;
        loop {
            if diagnostics.iterations >= cfg.max_iter {
                return Err(Error::NotConverged {
                    what: "Picard iteration",
                    iterations: diagnostics.iterations,
                    distance: diagnostics.distances.last().map_or(f64::NAN, |d| d.as_f64()),
                });
            }
            diagnostics.iterations += 1;
            let drift = drift_series(problem, &z);
            let conv = bochner_series(problem, &drift, Quadrature::LeftPoint)?;
            let next: Vec<Vec<T>> = base
                .iter()
                .zip(&conv)
                .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| x + y).collect())
                .collect();
            let d = norms(problem, &next, &z);
            let dist = d.iter().copied().fold(T::zero(), T::max);
            let lift = lifted_bielecki(&d, m, problem.p, beta, dt);
            diagnostics.distances.push(dist);
            if let Some(prev) = prev_lift {
                if prev > T::zero() && lift > T::zero() {
                    let r = lift / prev;
                    diagnostics.ratios.push(r);
                    growing = if r >= T::one() { growing + 1 } else { 0 };
                    if growing >= 3 {
                        return Err(Error::NonContraction {
                            ratios: diagnostics.ratios.iter().map(|r| r.as_f64()).collect(),
                        });
                    }
                }
            }
            prev_lift = Some(lift);
            z = next;
            if dist < cfg.tol {
                break;
            }
        }
        z
    };
    let trajectory = Trajectory::from_values(dt, states, &problem.f0, problem.tag());
    Ok(Solution {
        trajectory,
        diagnostics,
    })
}

/// Right-hand side of the variation-of-constants formula at `t`, assembled from `traj`.
pub fn mild_evaluate<T: Real>(
    problem: &DelayProblem<T>,
    traj: &Trajectory<T>,
    path: &NoisePath<T>,
    t: T,
    rule: Quadrature,
) -> Result<GridFunction<T>> {
    check_path(problem, path)?;
    let n = traj.index_of(t)?;
    let sub = DelayProblem {
        horizon: problem.dt() * T::from_count(n),
        ..problem.clone()
    };
    let mut out = if n == 0 {
        problem.x0.values().to_vec()
    } else {
        linear_part(&sub, path)?.pop().expect("non-empty")
    };
    if n > 0 && !problem.drift.is_zero() {
        let states: Vec<Vec<T>> = traj.states()[..=n].iter().map(|s| s.values().to_vec()).collect();
        let drift = drift_series(problem, &states);
        let conv = bochner_series(problem, &drift, rule)?;
        for (o, &c) in out.iter_mut().zip(&conv[n]) {
            *o += c;
        }
    }
    Ok(GridFunction::from_parts_unchecked(
        problem.grid().clone(),
        out,
        problem.tag(),
    ))
}
