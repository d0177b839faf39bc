use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{cumulative_trapezoid, trapezoid};
use crate::scalar::Real;
use crate::semigroup::{check_time, Semigroup};
use crate::space::{GridFunction, GridKind, SpaceTag, SpatialGrid};

/// Stopping rule for the renewal Picard iteration.
#[derive(Debug, Clone, Copy)]
pub struct RenewalConfig<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for RenewalConfig<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-13),
            max_iter: 500,
        }
    }
}

/// Backward extension `g₂` on `[0, K·h]` with iteration diagnostics.
#[derive(Debug, Clone)]
pub struct Extension<T> {
    /// `g₂(s_i)` at `s_i = i·h`.
    pub values: Vec<T>,
    pub iterations: usize,
    /// Ratios of successive iterate distances in the weighted norm.
    pub contraction_ratios: Vec<T>,
    /// `‖g₂ − b_μ⋆g₂ − T_{μ,b}g‖` in the weighted norm after the last iterate.
    pub residual: T,
}

/// Age-structured population semigroup on `L¹(0, L)` with mortality `μ` and
/// birth kernel `b`. For ages below `t` the profile is continued backwards by
/// the solution of the renewal equation `g₂ = b_μ ⋆ g₂ + T_{μ,b} g`.
#[derive(Debug, Clone)]
pub struct McKendrickSemigroup<T> {
    grid: Arc<SpatialGrid<T>>,
    mortality: Vec<T>,
    birth: Vec<T>,
    weight: T,
    config: RenewalConfig<T>,
    /// `M(a_j) = ∫₀^{a_j} μ`.
    cum_mortality: Vec<T>,
    /// `b_μ(a_j) = e^{-M(a_j)} b(a_j)`.
    birth_survival: Vec<T>,
}

impl<T: Real> McKendrickSemigroup<T> {
    pub fn new(
        grid: Arc<SpatialGrid<T>>,
        mortality: Vec<T>,
        birth: Vec<T>,
        weight: T,
        config: RenewalConfig<T>,
    ) -> Result<Self> {
        if grid.kind() != GridKind::HalfLine {
            return Err(invalid("grid", "McKendrick acts on a half-line grid"));
        }
        if mortality.len() != grid.len() || birth.len() != grid.len() {
            return Err(Error::GridMismatch("mortality/birth length differs from grid".into()));
        }
        if mortality.iter().chain(&birth).any(|v| !v.is_finite()) {
            return Err(invalid("mortality/birth", "must be finite"));
        }
        if !(config.tol > T::zero()) || config.max_iter == 0 {
            return Err(invalid("renewal", "tol must be positive and max_iter at least 1"));
        }
        let cum_mortality = cumulative_trapezoid(&mortality, grid.step());
        let birth_survival: Vec<T> = birth
            .iter()
            .zip(&cum_mortality)
            .map(|(&b, &m)| b * (-m).exp())
            .collect();
        let bound = birth_survival.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        if !(weight > bound) {
            return Err(Error::ContractionViolated {
                weight: weight.as_f64(),
                bound: bound.as_f64(),
            });
        }
        Ok(Self {
            grid,
            mortality,
            birth,
            weight,
            config,
            cum_mortality,
            birth_survival,
        })
    }

    pub fn mortality(&self) -> &[T] {
        &self.mortality
    }

    pub fn birth(&self) -> &[T] {
        &self.birth
    }

    pub fn weight(&self) -> T {
        self.weight
    }

    pub fn birth_survival(&self) -> &[T] {
        &self.birth_survival
    }

    /// `‖b_μ‖_∞`.
    pub fn birth_survival_sup(&self) -> T {
        self.birth_survival.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// `e^{-∫_{a_i}^{a_j} μ}` for node indices `i ≤ j`.
    #[inline]
    fn survival(&self, i: usize, j: usize) -> T {
        (self.cum_mortality[i] - self.cum_mortality[j]).exp()
    }

    #[inline]
    fn b_mu(&self, l: usize) -> T {
        self.birth_survival.get(l).copied().unwrap_or_else(T::zero)
    }

    /// `T_{μ,b} g` at `s_i = i·h`, `i = 0..=k`.
    fn transferred_births(&self, g: &[T], k: usize) -> Vec<T> {
        let n = g.len();
        let h = self.grid.step();
        (0..=k)
            .map(|i| {
                if i + 1 >= n {
                    return T::zero();
                }
                let vals: Vec<T> = (i..n)
                    .map(|j| self.survival(j - i, j) * g[j - i] * self.birth[j])
                    .collect();
                trapezoid(&vals, h)
            })
            .collect()
    }

    /// `(b_μ ⋆ y)(s_i)` by the trapezoid rule.
    fn convolve(&self, y: &[T]) -> Vec<T> {
        let h = self.grid.step();
        (0..y.len())
            .map(|i| {
                if i == 0 {
                    return T::zero();
                }
                let mut s = T::half() * (self.b_mu(0) * y[i] + self.b_mu(i) * y[0]);
                for l in 1..i {
                    s += self.b_mu(l) * y[i - l];
                }
                s * h
            })
            .collect()
    }

    fn weighted_norm(&self, v: &[T]) -> T {
        let h = self.grid.step();
        let vals: Vec<T> = v
            .iter()
            .enumerate()
            .map(|(i, x)| x.abs() * (-self.weight * h * T::from_count(i)).exp())
            .collect();
        if vals.len() == 1 {
            vals[0] * h
        } else {
            trapezoid(&vals, h)
        }
    }

    /// The `(μ,b)`-extension of `g` on `[0, t]`.
    pub fn extension(&self, g: &GridFunction<T>, t: T) -> Result<Extension<T>> {
        check_time(t)?;
        crate::space::ensure_compatible(&self.grid, g.grid(), "extension argument")?;
        self.extension_values(g.values(), self.grid.shift_count(t).0)
    }

    /// Extension on `k + 1` nodes of spacing `h`.
    pub fn extension_values(&self, g: &[T], k: usize) -> Result<Extension<T>> {
        let source = self.transferred_births(g, k);
        let mut current = source.clone();
        let mut ratios = Vec::new();
        let mut prev: Option<T> = None;
        let mut iterations = 0;
        let converged = loop {
            if iterations >= self.config.max_iter {
                break false;
            }
            iterations += 1;
            let conv = self.convolve(&current);
            let next: Vec<T> = source.iter().zip(&conv).map(|(&s, &c)| s + c).collect();
            let diff: Vec<T> = next.iter().zip(&current).map(|(&a, &b)| a - b).collect();
            let dist = self.weighted_norm(&diff);
            if let Some(p) = prev {
                if p > T::zero() {
                    ratios.push(dist / p);
                }
            }
            prev = Some(dist);
            let scale = T::one().max(self.weighted_norm(&next));
            current = next;
            if dist <= self.config.tol * scale {
                break true;
            }
        };
        let conv = self.convolve(&current);
        let res: Vec<T> = current
            .iter()
            .zip(&conv)
            .zip(&source)
            .map(|((&y, &c), &s)| y - c - s)
            .collect();
        let residual = self.weighted_norm(&res);
        if !converged {
            return Err(Error::NotConverged {
                what: "renewal iteration",
                iterations,
                distance: prev.unwrap_or_else(T::zero).as_f64(),
            });
        }
        Ok(Extension {
            values: current,
            iterations,
            contraction_ratios: ratios,
            residual,
        })
    }

    fn assemble(&self, g: &[T], k: usize, ext: &[T]) -> Vec<T> {
        (0..g.len())
            .map(|j| {
                if j >= k {
                    self.survival(j - k, j) * g[j - k]
                } else {
                    self.survival(0, j) * ext[k - j]
                }
            })
            .collect()
    }

    /// Fraction of the mass of the constant-1 profile that reaches the truncation
    /// boundary within `horizon` (zero births).
    pub fn boundary_escape_fraction(&self, horizon: T) -> T {
        let n = self.grid.len();
        let h = self.grid.step();
        let len = self.grid.length();
        let first = self
            .grid
            .nodes()
            .iter()
            .position(|&a| a >= len - horizon)
            .unwrap_or(n - 1);
        let vals: Vec<T> = (first..n).map(|j| self.survival(j, n - 1)).collect();
        if vals.len() < 2 {
            return T::zero();
        }
        trapezoid(&vals, h) / len
    }
}

impl<T: Real> Semigroup<T> for McKendrickSemigroup<T> {
    fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    fn tag(&self) -> SpaceTag<T> {
        SpaceTag::L1
    }

    fn apply_values(&self, t: T, g: &[T]) -> Result<Vec<T>> {
        check_time(t)?;
        let (k, _) = self.grid.shift_count(t);
        if k == 0 {
            return Ok(g.to_vec());
        }
        let ext = self.extension_values(g, k)?;
        Ok(self.assemble(g, k, &ext.values))
    }

    fn orbit_values(&self, dt: T, steps: usize, g: &[T]) -> Result<Vec<Vec<T>>> {
        check_time(dt)?;
        let (k1, _) = self.grid.shift_count(dt);
        let ext = self.extension_values(g, k1 * steps)?;
        Ok((0..=steps)
            .map(|s| {
                let k = k1 * s;
                if k == 0 {
                    g.to_vec()
                } else {
                    self.assemble(g, k, &ext.values)
                }
            })
            .collect())
    }

    fn growth_bound(&self) -> T {
        let bmax = self.birth.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let mmin = self.mortality.iter().copied().fold(T::infinity(), T::min);
        bmax - mmin
    }
}
