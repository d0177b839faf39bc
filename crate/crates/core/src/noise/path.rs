use crate::error::{invalid, Result};
use crate::noise::rng::{derive_seed, normal, stream_rng};
use crate::scalar::Real;

/// Stream tag reserved for bridge refinement draws.
const BRIDGE_STREAM: u64 = 0xB1D6_E000;

/// Increments of a `d`-dimensional Brownian motion on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath<T> {
    dt: T,
    seed: u64,
    dim: usize,
    level: u32,
    /// Row-major `n_steps × dim`.
    increments: Vec<T>,
}

/// Draws `n_steps` independent `N(0, dt·I_d)` increments from the stream of `seed`.
pub fn sample_path<T: Real>(n_steps: usize, dt: T, dim: usize, seed: u64) -> Result<NoisePath<T>> {
    if n_steps == 0 {
        return Err(invalid("n_steps", "must be at least 1"));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(invalid("dt", "must be positive"));
    }
    if dim == 0 {
        return Err(invalid("dim", "noise dimension must be at least 1"));
    }
    let mut rng = stream_rng(seed, 0);
    let sd = dt.sqrt();
    let increments = (0..n_steps * dim).map(|_| sd * normal::<T>(&mut rng)).collect();
    Ok(NoisePath {
        dt,
        seed,
        dim,
        level: 0,
        increments,
    })
}

/// Seed of ensemble member `member`.
pub fn member_seed(seed: u64, member: u64) -> u64 {
    derive_seed(seed, member.wrapping_add(1))
}

impl<T: Real> NoisePath<T> {
    /// A path from explicit increments (`n_steps × dim`, row-major).
    pub fn from_increments(dt: T, dim: usize, increments: Vec<T>) -> Result<Self> {
        if dim == 0 || increments.is_empty() || !increments.len().is_multiple_of(dim) {
            return Err(invalid("increments", "length must be a positive multiple of dim"));
        }
        if !(dt > T::zero()) {
            return Err(invalid("dt", "must be positive"));
        }
        Ok(Self {
            dt,
            seed: 0,
            dim,
            level: 0,
            increments,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of bridge refinements applied since sampling.
    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.dim
    }

    pub fn horizon(&self) -> T {
        self.dt * T::from_count(self.n_steps())
    }

    /// `ΔW_i` over `[t_i, t_{i+1})`.
    pub fn increment(&self, i: usize) -> &[T] {
        &self.increments[i * self.dim..(i + 1) * self.dim]
    }

    pub fn increments(&self) -> &[T] {
        &self.increments
    }

    /// `W(t_n)` for `n = 0..=n_steps`.
    pub fn brownian(&self) -> Vec<Vec<T>> {
        let mut w = vec![vec![T::zero(); self.dim]];
        for i in 0..self.n_steps() {
            let next: Vec<T> = w[i].iter().zip(self.increment(i)).map(|(&a, &b)| a + b).collect();
            w.push(next);
        }
        w
    }

    /// Brownian-bridge midpoint subdivision: halves `dt`, keeping every coarse
    /// increment equal to the sum of its two children.
    pub fn refine(&self) -> Self {
        let mut rng = stream_rng(derive_seed(self.seed, BRIDGE_STREAM), u64::from(self.level));
        let half_sd = self.dt.sqrt() * T::half();
        let n = self.n_steps();
        let mut out = Vec::with_capacity(2 * self.increments.len());
        for i in 0..n {
            let inc = self.increment(i);
            let mut first = Vec::with_capacity(self.dim);
            let mut second = Vec::with_capacity(self.dim);
            for &dw in inc {
                let a = T::half() * dw + half_sd * normal::<T>(&mut rng);
                first.push(a);
                second.push(dw - a);
            }
            out.extend(first);
            out.extend(second);
        }
        Self {
            dt: self.dt * T::half(),
            seed: self.seed,
            dim: self.dim,
            level: self.level + 1,
            increments: out,
        }
    }

    /// Applies [`refine`](Self::refine) `levels` times.
    pub fn refine_by(&self, levels: u32) -> Self {
        (0..levels).fold(self.clone(), |p, _| p.refine())
    }

    /// Sums adjacent pairs of increments (inverse of `refine` on the increments).
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.n_steps();
        if !n.is_multiple_of(2) {
            return Err(invalid("n_steps", "odd number of steps cannot be coarsened"));
        }
        let mut out = Vec::with_capacity(self.increments.len() / 2);
        for i in (0..n).step_by(2) {
            for c in 0..self.dim {
                out.push(self.increment(i)[c] + self.increment(i + 1)[c]);
            }
        }
        Ok(Self {
            dt: self.dt * T::two(),
            seed: self.seed,
            dim: self.dim,
            level: self.level.saturating_sub(1),
            increments: out,
        })
    }
}
