use crate::error::Result;
use crate::noise::NoisePath;
use crate::quadrature::trapezoid_weights;
use crate::scalar::Real;
use crate::solver::{drift_series, mild_evaluate, DelayProblem, Quadrature};
use crate::space::{norm_values, Trajectory};
use crate::verify::functional::TestFunctional;
use crate::verify::generator::DiscreteGenerator;

/// Samples shared by the three residuals at `t_n`.
struct Pieces<T> {
    n: usize,
    states: Vec<Vec<T>>,
    drift: Vec<Vec<T>>,
    weights: Vec<T>,
    /// `Σ_c ψ_c W_c(t_n)`.
    noise: Vec<T>,
}

fn pieces<T: Real>(problem: &DelayProblem<T>, traj: &Trajectory<T>, path: &NoisePath<T>, t: T) -> Result<Pieces<T>> {
    let n = traj.index_of(t)?;
    let states: Vec<Vec<T>> = traj.states()[..=n].iter().map(|s| s.values().to_vec()).collect();
    let drift = if problem.drift.is_zero() {
        vec![vec![T::zero(); problem.grid().len()]; n + 1]
    } else {
        drift_series(problem, &states)
    };
    let weights = if n == 0 {
        vec![T::zero()]
    } else {
        trapezoid_weights(n + 1, traj.dt())
    };
    let mut noise = vec![T::zero(); problem.grid().len()];
    for i in 0..n {
        for (col, &dw) in problem.noise.iter().zip(path.increment(i)) {
            for (o, &c) in noise.iter_mut().zip(col.values()) {
                *o += dw * c;
            }
        }
    }
    Ok(Pieces {
        n,
        states,
        drift,
        weights,
        noise,
    })
}

fn time_integral<T: Real>(series: &[Vec<T>], weights: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); series[0].len()];
    for (v, &w) in series.iter().zip(weights) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    out
}

/// `|⟨X(t) − x₀, x*⟩ − ∫⟨X, A*x*⟩ − ∫⟨φ, x*⟩ − ⟨ψ, x*⟩W(t)|`, time integrals by trapezoid.
pub fn weak_residual<T: Real>(
    problem: &DelayProblem<T>,
    traj: &Trajectory<T>,
    path: &NoisePath<T>,
    functional: &TestFunctional<T>,
    t: T,
) -> Result<T> {
    let p = pieces(problem, traj, path, t)?;
    Ok(weak_from_pieces(problem, &p, functional))
}

fn weak_from_pieces<T: Real>(problem: &DelayProblem<T>, p: &Pieces<T>, x: &TestFunctional<T>) -> T {
    let grid = problem.grid();
    let lhs = x.pair(grid, &p.states[p.n]) - x.pair(grid, problem.x0.values());
    let generator: T = p
        .states
        .iter()
        .zip(&p.weights)
        .map(|(s, &w)| w * x.pair_adjoint(grid, s))
        .sum();
    let drift: T = p.drift.iter().zip(&p.weights).map(|(d, &w)| w * x.pair(grid, d)).sum();
    (lhs - generator - drift - x.pair(grid, &p.noise)).abs()
}

/// `‖X(t) − [S(t)x₀ + ∫S(t−s)φ ds + ∫S(t−s)ψ dW]‖_E` with the Bochner integral
/// by trapezoid, independent of the solver's left-point sum.
pub fn mild_residual<T: Real>(problem: &DelayProblem<T>, traj: &Trajectory<T>, path: &NoisePath<T>, t: T) -> Result<T> {
    let rhs = mild_evaluate(problem, traj, path, t, Quadrature::Trapezoid)?;
    Ok(traj.at(t)?.sub(&rhs)?.norm())
}

/// `‖X(t) − x₀ − A_h∫X − ∫φ − ψW(t)‖_E`, or `None` when the discrete
/// generator's boundary elimination is ill-conditioned. For the McKendrick
/// generator the age-zero entry is replaced by the boundary defect of `∫X`,
/// whose absolute value is added to the norm of the remaining entries.
pub fn strong_residual<T: Real>(
    problem: &DelayProblem<T>,
    traj: &Trajectory<T>,
    path: &NoisePath<T>,
    t: T,
) -> Result<Option<T>> {
    let p = pieces(problem, traj, path, t)?;
    Ok(strong_from_pieces(
        problem,
        &p,
        &DiscreteGenerator::of(&problem.generator),
    ))
}

fn strong_from_pieces<T: Real>(problem: &DelayProblem<T>, p: &Pieces<T>, a: &DiscreteGenerator<T>) -> Option<T> {
    if a.ill_conditioned() {
        return None;
    }
    let integral = time_integral(&p.states, &p.weights);
    let drift = time_integral(&p.drift, &p.weights);
    let ai = a.apply(&integral);
    let mut r: Vec<T> = (0..integral.len())
        .map(|i| p.states[p.n][i] - problem.x0.values()[i] - ai[i] - drift[i] - p.noise[i])
        .collect();
    let mut extra = T::zero();
    if matches!(a, DiscreteGenerator::Renewal { .. }) {
        extra = ai[0].abs();
        r[0] = T::zero();
    }
    Some(norm_values(problem.grid(), problem.tag(), &r) + extra)
}

/// All three residuals at one time, sharing the drift evaluation.
pub(crate) fn all_residuals<T: Real>(
    problem: &DelayProblem<T>,
    traj: &Trajectory<T>,
    path: &NoisePath<T>,
    functionals: &[TestFunctional<T>],
    t: T,
) -> Result<(Vec<T>, T, Option<T>)> {
    let p = pieces(problem, traj, path, t)?;
    let weak = functionals.iter().map(|x| weak_from_pieces(problem, &p, x)).collect();
    let mild = mild_residual(problem, traj, path, t)?;
    let strong = strong_from_pieces(problem, &p, &DiscreteGenerator::of(&problem.generator));
    Ok((weak, mild, strong))
}
