use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::trapezoid_weights;
use crate::scalar::{exact_multiple, Real};
use crate::semigroup::{Generator, Semigroup};
use crate::space::{ensure_compatible, GridFunction, SegmentFunction, SpaceTag, SpatialGrid};

/// Scalar Lipschitz nonlinearities `f₁`, `f₂`, applied pointwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarMap {
    Zero,
    /// `c·x`
    Linear {
        slope: f64,
    },
    /// `a·sin(ωx)`
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// `a·tanh(sx)`
    Tanh {
        amplitude: f64,
        scale: f64,
    },
}

impl ScalarMap {
    #[inline]
    pub fn eval<T: Real>(&self, x: T) -> T {
        match *self {
            Self::Zero => T::zero(),
            Self::Linear { slope } => T::lit(slope) * x,
            Self::Sine { amplitude, frequency } => T::lit(amplitude) * (T::lit(frequency) * x).sin(),
            Self::Tanh { amplitude, scale } => T::lit(amplitude) * (T::lit(scale) * x).tanh(),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Zero => 0.0,
            Self::Linear { slope } => slope.abs(),
            Self::Sine { amplitude, frequency } => (amplitude * frequency).abs(),
            Self::Tanh { amplitude, scale } => (amplitude * scale).abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz() == 0.0
    }

    /// `-f`.
    pub fn negated(&self) -> Self {
        match *self {
            Self::Zero => Self::Zero,
            Self::Linear { slope } => Self::Linear { slope: -slope },
            Self::Sine { amplitude, frequency } => Self::Sine {
                amplitude: -amplitude,
                frequency,
            },
            Self::Tanh { amplitude, scale } => Self::Tanh {
                amplitude: -amplitude,
                scale,
            },
        }
    }
}

/// Samples `κ(θ_j, ξ_i)` of a delay kernel, `θ_j = -1 + j/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayKernel<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Real> DelayKernel<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(invalid("kernel", "needs at least two θ nodes"));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::GridMismatch("ragged kernel rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid("kernel", "must be finite"));
        }
        Ok(Self { rows })
    }

    pub fn from_fn(grid: &SpatialGrid<T>, history_steps: usize, f: impl Fn(T, T) -> T) -> Result<Self> {
        let m = T::from_count(history_steps);
        let rows = (0..=history_steps)
            .map(|j| {
                let theta = T::from_count(j) / m - T::one();
                grid.nodes().iter().map(|&x| f(theta, x)).collect()
            })
            .collect();
        Self::new(rows)
    }

    pub fn history_steps(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            rows: self.rows.iter().map(|r| r.iter().map(|&v| c * v).collect()).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|&v| v == T::zero())
    }

    /// `sup_ξ ‖κ(·, ξ)‖_{L^{p'}(-1,0)}` with `1/p + 1/p' = 1`; `p = 1` gives the grid max.
    pub fn mixed_norm(&self, p: T) -> T {
        let m = self.history_steps();
        let w = trapezoid_weights(m + 1, T::one() / T::from_count(m));
        let n = self.rows[0].len();
        (0..n)
            .map(|i| {
                if p <= T::one() {
                    self.rows.iter().fold(T::zero(), |a, r| a.max(r[i].abs()))
                } else {
                    let q = p / (p - T::one());
                    let s: T = self.rows.iter().zip(&w).map(|(r, &wj)| wj * r[i].abs().powf(q)).sum();
                    s.powf(T::one() / q)
                }
            })
            .fold(T::zero(), T::max)
    }
}

/// `φ(x, h)(ξ) = ∫ϕ(θ,ξ)h(θ,ξ)dθ + f₁(x(ξ)) + ∫k(θ,ξ)f₂(h(θ,ξ))dθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift<T> {
    pub phi: Option<DelayKernel<T>>,
    pub k: Option<DelayKernel<T>>,
    pub f1: ScalarMap,
    pub f2: ScalarMap,
}

impl<T: Real> Drift<T> {
    pub fn zero() -> Self {
        Self {
            phi: None,
            k: None,
            f1: ScalarMap::Zero,
            f2: ScalarMap::Zero,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.f1.is_zero()
            && self.phi.as_ref().is_none_or(DelayKernel::is_zero)
            && (self.f2.is_zero() || self.k.as_ref().is_none_or(DelayKernel::is_zero))
    }

    /// `-φ`: every term with its sign flipped.
    pub fn negated(&self) -> Self {
        Self {
            phi: self.phi.as_ref().map(|k| k.scaled(-T::one())),
            k: self.k.as_ref().map(|k| k.scaled(-T::one())),
            f1: self.f1.negated(),
            f2: self.f2,
        }
    }

    /// Evaluates the drift with segment rows supplied by `row(j)`.
    pub(crate) fn eval_rows<'a>(&self, x: &[T], history_steps: usize, row: impl Fn(usize) -> &'a [T]) -> Vec<T>
    where
        T: 'a,
    {
        self.eval_mapped(x, history_steps, &row, None::<&dyn Fn(usize) -> &'a [T]>)
    }

    /// As [`eval_rows`](Self::eval_rows), optionally reading precomputed `f₂(h)` rows.
    pub(crate) fn eval_mapped<'a, 'b>(
        &self,
        x: &[T],
        history_steps: usize,
        row: &dyn Fn(usize) -> &'a [T],
        f2_row: Option<&dyn Fn(usize) -> &'b [T]>,
    ) -> Vec<T>
    where
        T: 'a + 'b,
    {
        let m = history_steps;
        let w = trapezoid_weights(m + 1, T::one() / T::from_count(m));
        let mut out: Vec<T> = x.iter().map(|&v| self.f1.eval(v)).collect();
        let phi = self.phi.as_ref().filter(|k| !k.is_zero());
        let k = self.k.as_ref().filter(|k| !k.is_zero() && !self.f2.is_zero());
        if phi.is_none() && k.is_none() {
            return out;
        }
        for (j, &wj) in w.iter().enumerate() {
            if let Some(phi) = phi {
                for ((o, &a), &hv) in out.iter_mut().zip(&phi.rows[j]).zip(row(j)) {
                    *o += wj * a * hv;
                }
            }
            if let Some(k) = k {
                match f2_row {
                    Some(f2) => {
                        for ((o, &a), &fv) in out.iter_mut().zip(&k.rows[j]).zip(f2(j)) {
                            *o += wj * a * fv;
                        }
                    }
                    None => {
                        for ((o, &a), &hv) in out.iter_mut().zip(&k.rows[j]).zip(row(j)) {
                            *o += wj * a * self.f2.eval(hv);
                        }
                    }
                }
            }
        }
        out
    }

    /// `f₂` applied to every sample.
    pub(crate) fn map_f2(&self, rows: &[Vec<T>]) -> Vec<Vec<T>> {
        rows.iter()
            .map(|r| r.iter().map(|&v| self.f2.eval(v)).collect())
            .collect()
    }

    /// Lipschitz constant `2^{1/p} (L_{f₁} ∨ (L_{f₂}‖k‖ + ‖ϕ‖))` on `E × Lᵖ(-1,0;E)`.
    pub fn lipschitz(&self, p: T) -> T {
        let norm = |k: &Option<DelayKernel<T>>| k.as_ref().map_or(T::zero(), |k| k.mixed_norm(p));
        let delay = T::lit(self.f2.lipschitz()) * norm(&self.k) + norm(&self.phi);
        T::two().powf(T::one() / p) * T::lit(self.f1.lipschitz()).max(delay)
    }
}

/// A stochastic delay equation `dX = (BX + φ(X, X_t))dt + ψ dW`, `X(0) = x₀`,
/// `X_0 = f₀`, on `[0, horizon]`. The history step of `f₀` is the time step.
#[derive(Debug, Clone)]
pub struct DelayProblem<T> {
    pub generator: Generator<T>,
    pub drift: Drift<T>,
    /// Noise columns `ψ e_c`, one per Wiener component.
    pub noise: Vec<GridFunction<T>>,
    pub x0: GridFunction<T>,
    pub f0: SegmentFunction<T>,
    pub p: T,
    pub q: T,
    pub horizon: T,
    /// Length `d` with `supp σ ⊂ [0, d]` (McKendrick noise), if declared.
    pub noise_support: Option<T>,
}

impl<T: Real> DelayProblem<T> {
    /// Checks grids, exponents and step alignment.
    pub fn validate(&self) -> Result<()> {
        let grid = self.generator.grid();
        ensure_compatible(grid, self.x0.grid(), "initial state")?;
        ensure_compatible(grid, self.f0.grid(), "initial history")?;
        if self.noise.is_empty() {
            return Err(invalid(
                "noise",
                "at least one noise column (possibly zero) is required",
            ));
        }
        for col in &self.noise {
            ensure_compatible(grid, col.grid(), "noise column")?;
        }
        if !(self.p >= T::one()) {
            return Err(invalid("p", "must be at least 1"));
        }
        if !(self.q >= T::one()) {
            return Err(invalid("q", "must be at least 1"));
        }
        if !(self.horizon > T::zero()) {
            return Err(invalid("horizon", "must be positive"));
        }
        let dt = self.dt();
        if exact_multiple(self.horizon, dt).is_none() {
            return Err(Error::OffGrid {
                t: self.horizon.as_f64(),
                step: dt.as_f64(),
            });
        }
        for (name, kernel) in [("phi", &self.drift.phi), ("k", &self.drift.k)] {
            if let Some(kernel) = kernel {
                if kernel.history_steps() != self.history_steps() || kernel.rows()[0].len() != grid.len() {
                    return Err(Error::GridMismatch(format!(
                        "kernel `{name}` does not match the history and spatial grids"
                    )));
                }
            }
        }
        match &self.generator {
            Generator::Transport(_) | Generator::McKendrick(_) => {
                if exact_multiple(dt, grid.step()).is_none_or(|k| k == 0) {
                    return Err(Error::Unsupported(format!(
                        "time step {} is not a whole number of spatial steps {}",
                        dt.as_f64(),
                        grid.step().as_f64()
                    )));
                }
            }
            Generator::FiniteDim(_) => {}
        }
        if matches!(self.generator, Generator::Transport(_)) {
            let bad = |f: ScalarMap| f.eval(T::zero()) != T::zero();
            if bad(self.drift.f1) || bad(self.drift.f2) {
                return Err(Error::Hypothesis(
                    "f1 and f2 must vanish at 0 so the drift maps into C0".into(),
                ));
            }
            if self.x0.tag() != SpaceTag::C0 || self.noise.iter().any(|c| c.tag() != SpaceTag::C0) {
                return Err(Error::Hypothesis("transport data must be C0 functions".into()));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        self.generator.grid()
    }

    pub fn tag(&self) -> SpaceTag<T> {
        self.x0.tag()
    }

    /// Time step, equal to the history step of `f₀`.
    pub fn dt(&self) -> T {
        self.f0.step()
    }

    pub fn history_steps(&self) -> usize {
        self.f0.history_steps()
    }

    pub fn steps(&self) -> usize {
        exact_multiple(self.horizon, self.dt()).unwrap_or(0)
    }

    pub fn lipschitz(&self) -> T {
        self.drift.lipschitz(self.p)
    }

    /// Copy with the drift removed.
    pub fn without_drift(&self) -> Self {
        Self {
            drift: Drift::zero(),
            ..self.clone()
        }
    }
}

/// `φ(x, h)` for a grid function and a segment on the problem's grids.
pub fn drift_phi<T: Real>(
    problem: &DelayProblem<T>,
    x: &GridFunction<T>,
    seg: &SegmentFunction<T>,
) -> Result<GridFunction<T>> {
    ensure_compatible(problem.grid(), x.grid(), "drift state")?;
    ensure_compatible(problem.grid(), seg.grid(), "drift segment")?;
    if seg.history_steps() != problem.history_steps() {
        return Err(Error::GridMismatch(
            "segment history grid differs from the kernels'".into(),
        ));
    }
    let v = problem.drift.eval_rows(x.values(), seg.history_steps(), |j| seg.row(j));
    Ok(GridFunction::from_parts_unchecked(x.grid().clone(), v, x.tag()))
}

/// Lipschitz constant of the problem's drift.
pub fn lipschitz_constant<T: Real>(problem: &DelayProblem<T>) -> T {
    problem.lipschitz()
}
