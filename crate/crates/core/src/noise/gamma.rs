//! γ-radonifying norms of operators `L²(0,t;H) → E` by Monte Carlo, with the
//! Hilbert–Schmidt value as oracle when `E` is Euclidean.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::Matrix;
use crate::noise::haar::{cell_basis, Basis};
use crate::noise::rng::{normal, stream_rng};
use crate::scalar::Real;
use crate::semigroup::Semigroup;
use crate::space::{ensure_compatible, norm_values, GridFunction, SpaceTag, SpatialGrid};

/// Draws per deterministic Monte Carlo chunk; chunk `c` uses stream `c`.
const CHUNK: usize = 64;

/// `u ↦ R(u) ∈ L(H, E)`, piecewise constant on `cells` equal cells of `[0, interval]`.
#[derive(Debug, Clone)]
pub struct KernelOperator<T> {
    grid: Arc<SpatialGrid<T>>,
    tag: SpaceTag<T>,
    interval: T,
    cells: usize,
    dim: usize,
    /// `values[cell * dim + col]` is the `E`-valued column `R(u_cell) e_col`.
    values: Vec<Vec<T>>,
}

impl<T: Real> KernelOperator<T> {
    pub fn new(
        grid: Arc<SpatialGrid<T>>,
        tag: SpaceTag<T>,
        interval: T,
        cells: usize,
        dim: usize,
        values: Vec<Vec<T>>,
    ) -> Result<Self> {
        if cells == 0 || dim == 0 {
            return Err(invalid("kernel", "needs at least one cell and one column"));
        }
        if !(interval > T::zero()) {
            return Err(invalid("interval", "must be positive"));
        }
        if values.len() != cells * dim || values.iter().any(|v| v.len() != grid.len()) {
            return Err(Error::GridMismatch(
                "kernel columns do not match cells × dim × grid".into(),
            ));
        }
        Ok(Self {
            grid,
            tag,
            interval,
            cells,
            dim,
            values,
        })
    }

    /// Builds the kernel from `f(cell, col) -> values`.
    pub fn from_fn(
        grid: Arc<SpatialGrid<T>>,
        tag: SpaceTag<T>,
        interval: T,
        cells: usize,
        dim: usize,
        mut f: impl FnMut(usize, usize) -> Vec<T>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(cells * dim);
        for c in 0..cells {
            for col in 0..dim {
                values.push(f(c, col));
            }
        }
        Self::new(grid, tag, interval, cells, dim, values)
    }

    /// `u ↦ S(u)ψ` on `[0, t]`, evaluated at the left end of each cell.
    pub fn semigroup_orbit<S: Semigroup<T> + ?Sized>(
        sg: &S,
        psi: &[GridFunction<T>],
        t: T,
        cells: usize,
    ) -> Result<Self> {
        let orbits = orbits(sg, psi, t / T::from_count(cells), cells)?;
        let tag = psi.first().map_or(sg.tag(), |p| p.tag());
        Self::from_fn(sg.grid().clone(), tag, t, cells, psi.len(), |c, col| {
            orbits[col][c].clone()
        })
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval(&self) -> T {
        self.interval
    }

    pub fn column(&self, cell: usize, col: usize) -> &[T] {
        &self.values[cell * self.dim + col]
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut().flatten() {
            *v *= c;
        }
        out
    }

    /// `Σ_cells |cell| Σ_col ‖R e_col‖²₂`: the squared Hilbert–Schmidt norm when `E` is Euclidean.
    pub fn hilbert_schmidt_sq(&self) -> T {
        let w = self.interval / T::from_count(self.cells);
        self.values
            .iter()
            .map(|v| v.iter().map(|&x| x * x).sum::<T>())
            .sum::<T>()
            * w
    }

    /// Images `R(b_k ⊗ e_col)` for the orthonormal family `b_k(u) = f_k(u/t)/√t`,
    /// ordered by `k` then `col`.
    pub fn images(&self, basis: &Basis<T>) -> Vec<Vec<T>> {
        let fine = lcm(self.cells, basis.cells());
        let rk = fine / self.cells;
        let rb = fine / basis.cells();
        let scale = self.interval.sqrt() / T::from_count(fine);
        let n = self.grid.len();
        let mut out = Vec::with_capacity(basis.len() * self.dim);
        for k in 0..basis.len() {
            let f = basis.function(k);
            let (lo, hi) = basis.support(k);
            for col in 0..self.dim {
                let mut acc = vec![T::zero(); n];
                for fc in lo * rb..hi * rb {
                    let h = f[fc / rb];
                    if h == T::zero() {
                        continue;
                    }
                    let coef = h * scale;
                    for (a, &v) in acc.iter_mut().zip(self.column(fc / rk, col)) {
                        *a += coef * v;
                    }
                }
                out.push(acc);
            }
        }
        out
    }

    fn norm(&self, v: &[T]) -> T {
        norm_values(&self.grid, self.tag, v)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// `orbits[col][k] = S(k·step) ψ_col`, `k = 0..=steps`.
fn orbits<T: Real, S: Semigroup<T> + ?Sized>(
    sg: &S,
    psi: &[GridFunction<T>],
    step: T,
    steps: usize,
) -> Result<Vec<Vec<Vec<T>>>> {
    psi.iter()
        .map(|p| {
            ensure_compatible(sg.grid(), p.grid(), "noise column")?;
            sg.orbit_values(step, steps, p.values())
        })
        .collect()
}

/// Estimate of `E‖Σ_j γ_j R h_j‖²` at one truncation of the basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaLevel<T> {
    /// Number of basis functions `h_j` (times `dim H`) in the truncation.
    pub functions: usize,
    pub second_moment: T,
    pub std_error: T,
}

/// Monte Carlo γ-norm estimate over nested truncations; the deepest
/// truncation approximates the supremum in the definition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaEstimate<T> {
    pub levels: Vec<GammaLevel<T>>,
    pub n_mc: usize,
}

impl<T: Real> GammaEstimate<T> {
    pub fn deepest(&self) -> GammaLevel<T> {
        *self.levels.last().expect("at least one level")
    }

    /// Estimated `E‖Σγ_j Rh_j‖²` at the deepest truncation.
    pub fn second_moment(&self) -> T {
        self.deepest().second_moment
    }

    pub fn std_error(&self) -> T {
        self.deepest().std_error
    }

    /// Square root of [`second_moment`](Self::second_moment).
    pub fn norm(&self) -> T {
        self.second_moment().max(T::zero()).sqrt()
    }
}

/// Monte Carlo estimate of `‖R‖²_γ` with the Gaussian sum truncated at every
/// nested level of `basis`. Draws are split into fixed chunks with their own
/// derived streams and reduced in chunk order, so the result does not depend
/// on the thread count.
pub fn gamma_norm_estimate<T: Real>(
    r: &KernelOperator<T>,
    basis: &Basis<T>,
    n_mc: usize,
    seed: u64,
) -> Result<GammaEstimate<T>> {
    if n_mc == 0 {
        return Err(invalid("n_mc", "must be at least 1"));
    }
    basis.check_orthonormal(T::lit(1e-9).max(T::epsilon() * T::lit(64.0)))?;
    let images = r.images(basis);
    let ends: Vec<usize> = basis.level_ends().iter().map(|&e| e * r.dim).collect();
    let levels = ends.len();
    let chunks = n_mc.div_ceil(CHUNK);
    let partial: Vec<Vec<(T, T)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c as u64);
            let draws = CHUNK.min(n_mc - c * CHUNK);
            let mut sums = vec![(T::zero(), T::zero()); levels];
            let mut acc = vec![T::zero(); r.grid.len()];
            for _ in 0..draws {
                acc.iter_mut().for_each(|a| *a = T::zero());
                let mut level = 0;
                for (j, img) in images.iter().enumerate() {
                    let g: T = normal(&mut rng);
                    for (a, &v) in acc.iter_mut().zip(img) {
                        *a += g * v;
                    }
                    if j + 1 == ends[level] {
                        let x = r.norm(&acc);
                        let x2 = x * x;
                        sums[level].0 += x2;
                        sums[level].1 += x2 * x2;
                        level += 1;
                    }
                }
            }
            sums
        })
        .collect();
    let n = T::from_count(n_mc);
    let levels = (0..levels)
        .map(|l| {
            let (s1, s2) = partial
                .iter()
                .fold((T::zero(), T::zero()), |(a, b), p| (a + p[l].0, b + p[l].1));
            let mean = s1 / n;
            let var = if n_mc > 1 {
                ((s2 / n - mean * mean) * n / (n - T::one())).max(T::zero())
            } else {
                T::zero()
            };
            GammaLevel {
                functions: ends[l],
                second_moment: mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect();
    Ok(GammaEstimate { levels, n_mc })
}

/// Frobenius norm: the γ-norm of a matrix between Euclidean spaces.
pub fn gamma_norm_hs_oracle<T: Real>(matrix: &Matrix<T>) -> T {
    matrix.frobenius()
}

/// `sup_s` of the γ-norm of the factorization kernel at one point `s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedGamma<T> {
    /// `(s, estimate)` for every probed `s`.
    pub per_s: Vec<(T, GammaLevel<T>)>,
    /// `max_s √(E‖·‖²)`.
    pub sup: T,
    pub argmax: T,
}

/// `max_s ‖u ↦ (s−u)^{-α} S(s−u) ψ‖_γ` over `s = k·dt`, `k = stride, 2·stride, …, ⌊t/dt⌋`.
///
/// Cells of width `dt` carry the singular weight at their midpoints and the
/// semigroup at the left-point lag `s − u_i`; the γ-norm uses the cell basis,
/// which is exact for these piecewise-constant kernels.
#[allow(clippy::too_many_arguments)]
pub fn weighted_gamma_sup<T: Real, S: Semigroup<T> + ?Sized>(
    sg: &S,
    psi: &[GridFunction<T>],
    alpha: T,
    t: T,
    dt: T,
    stride: usize,
    n_mc: usize,
    seed: u64,
) -> Result<WeightedGamma<T>> {
    if !(alpha > T::zero() && alpha < T::half()) {
        return Err(Error::SingularExponent(alpha.as_f64()));
    }
    let steps = crate::scalar::exact_multiple(t, dt).ok_or(Error::OffGrid {
        t: t.as_f64(),
        step: dt.as_f64(),
    })?;
    if steps == 0 || stride == 0 {
        return Err(invalid("t", "need at least one probe point"));
    }
    let orbit = orbits(sg, psi, dt, steps)?;
    let tag = psi.first().map_or(sg.tag(), |p| p.tag());
    let mut per_s = Vec::new();
    let mut k = stride.min(steps);
    loop {
        let s = dt * T::from_count(k);
        let r = KernelOperator::from_fn(sg.grid().clone(), tag, s, k, psi.len(), |i, col| {
            // lag (k - i)·dt, weight at the cell midpoint
            let w = (dt * (T::from_count(k - i) - T::half())).powf(-alpha);
            orbit[col][k - i].iter().map(|&v| w * v).collect()
        })?;
        let est = gamma_norm_estimate(&r, &cell_basis(k)?, n_mc, seed ^ k as u64)?;
        per_s.push((s, est.deepest()));
        if k == steps {
            break;
        }
        k = (k + stride).min(steps);
    }
    let (argmax, best) = per_s
        .iter()
        .map(|(s, l)| (*s, l.second_moment.max(T::zero()).sqrt()))
        .fold((T::zero(), T::zero()), |a, b| if b.1 > a.1 { b } else { a });
    Ok(WeightedGamma {
        per_s,
        sup: best,
        argmax,
    })
}

/// Closed-form bound on `sup_{s≤t}` of the factorization kernel's γ-norm for
/// the McKendrick example with noise `σ` supported in `[0, d]`:
/// `C_γ √((d∨t) t^{1−2α}/(1−2α)) (2‖σ‖_{L²(0,d)} + ‖σ₂‖_{L²(0,t)})`, where `σ₂`
/// is the backward extension of `σ`.
pub fn mckendrick_gamma_bound<T: Real>(c_gamma: T, alpha: T, t: T, d: T, sigma_l2: T, sigma2_l2: T) -> Result<T> {
    if !(alpha > T::zero() && alpha < T::half()) {
        return Err(Error::SingularExponent(alpha.as_f64()));
    }
    let e = T::one() - T::two() * alpha;
    Ok(c_gamma * (d.max(t) * t.powf(e) / e).sqrt() * (T::two() * sigma_l2 + sigma2_l2))
}

/// Geometric envelope `‖ψ‖_∞ √(2β log 2) Σ_{n=from}^{to} 2^{-n/4}` for the
/// sup-norm of Haar partial-sum tails of the transport kernel.
pub fn haar_tail_envelope<T: Real>(psi_sup: T, beta: T, from: u32, to: u32) -> T {
    let q = T::two().powf(-T::lit(0.25));
    let s: T = (from..=to).map(|n| q.powi(n as i32)).sum();
    psi_sup * (T::two() * beta * T::LN_2()).sqrt() * s
}

/// Sup-norm of `Σ_{k ≥ 2^{from-1}} γ_k R h_k` (Haar levels `from..=depth`) for
/// `n_draws` independent Gaussian sequences.
pub fn haar_tail_sup<T: Real>(
    r: &KernelOperator<T>,
    basis: &Basis<T>,
    from: u32,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<T>> {
    if from == 0 {
        return Err(invalid("from", "tail starts at level 1 or later"));
    }
    let start = (1usize << (from - 1)) * r.dim;
    let images = r.images(basis);
    if start >= images.len() {
        return Ok(vec![T::zero(); n_draws]);
    }
    Ok((0..n_draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let mut acc = vec![T::zero(); r.grid.len()];
            for (j, img) in images.iter().enumerate() {
                let g: T = normal(&mut rng);
                if j < start {
                    continue;
                }
                for (a, &v) in acc.iter_mut().zip(img) {
                    *a += g * v;
                }
            }
            acc.iter().fold(T::zero(), |m, v| m.max(v.abs()))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::haar::haar_basis;

    fn euclid_kernel(vals: &[Vec<f64>], cells: usize) -> KernelOperator<f64> {
        let grid = SpatialGrid::points(vals[0].len()).unwrap();
        KernelOperator::from_fn(grid, SpaceTag::Euclidean, 1.0, cells, 1, |c, _| vals[c].clone()).unwrap()
    }

    #[test]
    fn zero_operator_has_zero_norm() {
        let r = euclid_kernel(&vec![vec![0.0, 0.0]; 4], 4);
        let est = gamma_norm_estimate(&r, &haar_basis(2).unwrap(), 100, 1).unwrap();
        assert_eq!(est.second_moment(), 0.0);
    }

    #[test]
    fn rank_one_operator() {
        // R f = <f, h_0> x with x = (3, 4): constant kernel
        let r = euclid_kernel(&vec![vec![3.0, 4.0]; 8], 8);
        let est = gamma_norm_estimate(&r, &haar_basis(3).unwrap(), 20000, 3).unwrap();
        assert!((est.second_moment() - 25.0).abs() < 5.0 * est.std_error());
        assert!((r.hilbert_schmidt_sq() - 25.0).abs() < 1e-12);
    }

    #[test]
    fn frobenius_oracle_examples() {
        let id = Matrix::<f64>::identity(4);
        assert!((gamma_norm_hs_oracle(&id) - 2.0).abs() < 1e-15);
        let d = Matrix::diagonal(&[3.0f64, 4.0]);
        assert!((gamma_norm_hs_oracle(&d) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn estimate_is_thread_count_independent() {
        let vals: Vec<Vec<f64>> = (0..16).map(|c| vec![c as f64 * 0.1, 1.0 - c as f64 * 0.05]).collect();
        let r = euclid_kernel(&vals, 16);
        let b = haar_basis(4).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| gamma_norm_estimate(&r, &b, 1000, 11).unwrap());
        let c = four.install(|| gamma_norm_estimate(&r, &b, 1000, 11).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn singular_exponent_rejected() {
        assert!(matches!(
            mckendrick_gamma_bound(1.0, 0.5, 1.0, 1.0, 1.0, 1.0),
            Err(Error::SingularExponent(_))
        ));
    }
}
