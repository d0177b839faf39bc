use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::noise::{member_seed, sample_path};
use crate::scalar::{exact_multiple, Real};
use crate::semigroup::Semigroup;
use crate::solver::DelayProblem;

/// Monte Carlo variance at one probe node against its oracle value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeVariance<T> {
    pub node: usize,
    pub position: T,
    pub mc_variance: T,
    pub std_error: T,
    pub oracle: T,
    /// `|mc − oracle| / std_error`.
    pub z: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport<T> {
    pub t: T,
    pub n_mc: usize,
    pub probes: Vec<ProbeVariance<T>>,
    pub max_z: T,
}

impl<T: Real> CovarianceReport<T> {
    /// All probes within `k` standard errors.
    pub fn within(&self, k: T) -> bool {
        self.max_z <= k
    }
}

/// Compares the Monte Carlo variance of `X(t)` (drift-free problem) at the probe
/// nodes with `Q(t)(ξ,ξ) = ∫₀ᵗ Σ_c (S(t−r)ψ_c)(ξ)² dr`, integrated by the
/// left-point rule in `r` — the rule of the Itô sum, so the comparison is
/// free of discretization bias and isolates the sampling.
pub fn covariance_oracle_check<T: Real>(
    problem: &DelayProblem<T>,
    t: T,
    probes: &[usize],
    n_mc: usize,
    seed: u64,
) -> Result<CovarianceReport<T>> {
    let orbits = probe_orbits(problem, t, probes)?;
    let dt = problem.dt();
    let oracle = |k: usize| {
        // lags t − r_i = (n − i)·dt for i = 0..n
        let sum: T = orbits
            .iter()
            .map(|o| o[1..].iter().map(|v| v[k] * v[k]).sum::<T>())
            .sum();
        sum * dt
    };
    covariance_oracle_check_with(problem, t, probes, n_mc, seed, oracle)
}

/// `orbits[c][s][k] = (S(s·dt)ψ_c)(ξ_{probe_k})`.
fn probe_orbits<T: Real>(problem: &DelayProblem<T>, t: T, probes: &[usize]) -> Result<Vec<Vec<Vec<T>>>> {
    problem.validate()?;
    if !problem.drift.is_zero() {
        return Err(Error::Hypothesis(
            "the covariance oracle needs a drift-free (Gaussian) problem".into(),
        ));
    }
    if probes.iter().any(|&k| k >= problem.grid().len()) {
        return Err(invalid("probes", "node index outside the grid"));
    }
    let n = exact_multiple(t, problem.dt()).ok_or(Error::OffGrid {
        t: t.as_f64(),
        step: problem.dt().as_f64(),
    })?;
    problem
        .noise
        .iter()
        .map(|c| {
            let orbit = problem.generator.orbit_values(problem.dt(), n, c.values())?;
            Ok(orbit
                .into_iter()
                .map(|v| probes.iter().map(|&k| v[k]).collect())
                .collect())
        })
        .collect()
}

/// As [`covariance_oracle_check`] with a caller-supplied oracle per probe index.
pub fn covariance_oracle_check_with<T: Real>(
    problem: &DelayProblem<T>,
    t: T,
    probes: &[usize],
    n_mc: usize,
    seed: u64,
    oracle: impl Fn(usize) -> T,
) -> Result<CovarianceReport<T>> {
    if n_mc < 2 {
        return Err(invalid("n_mc", "need at least two samples"));
    }
    let orbits = probe_orbits(problem, t, probes)?;
    let n = orbits[0].len() - 1;
    let d = problem.noise.len();
    let samples: Vec<Vec<T>> = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(n.max(1), problem.dt(), d, member_seed(seed, i as u64))?;
            let mut v = vec![T::zero(); probes.len()];
            for step in 0..n {
                for (c, &dw) in path.increment(step).iter().enumerate() {
                    for (o, &s) in v.iter_mut().zip(&orbits[c][n - step]) {
                        *o += dw * s;
                    }
                }
            }
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = T::from_count(n_mc);
    let probes_out: Vec<ProbeVariance<T>> = probes
        .iter()
        .enumerate()
        .map(|(k, &node)| {
            // the mean S(t)x₀ is deterministic, so squares of the centred samples are unbiased
            let sq: Vec<T> = samples.iter().map(|s| s[k] * s[k]).collect();
            let mean = sq.iter().copied().sum::<T>() / m;
            let var = sq.iter().map(|&x| (x - mean) * (x - mean)).sum::<T>() / (m - T::one());
            let se = (var / m).sqrt();
            let q = oracle(k);
            let z = if se > T::zero() {
                (mean - q).abs() / se
            } else if mean == q {
                T::zero()
            } else {
                T::infinity()
            };
            ProbeVariance {
                node,
                position: problem.grid().nodes()[node],
                mc_variance: mean,
                std_error: se,
                oracle: q,
                z,
            }
        })
        .collect();
    let max_z = probes_out.iter().map(|p| p.z).fold(T::zero(), T::max);
    Ok(CovarianceReport {
        t,
        n_mc,
        probes: probes_out,
        max_z,
    })
}
