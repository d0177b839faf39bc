use rand::Rng;

use crate::noise::rng::stream_rng;
use crate::scalar::Real;
use crate::semigroup::Generator;
use crate::semigroup::Semigroup;
use crate::space::{pair_values, GridKind, SpatialGrid};
use crate::verify::generator::DiscreteGenerator;

/// A test functional `x* = ⟨·, density⟩` together with `A_h* x*`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctional<T> {
    pub id: String,
    pub density: Vec<T>,
    pub adjoint: Vec<T>,
}

impl<T: Real> TestFunctional<T> {
    pub fn new(id: impl Into<String>, density: Vec<T>, generator: &Generator<T>) -> Self {
        let grid = generator.grid();
        let adjoint = DiscreteGenerator::of(generator).adjoint_density(grid.weights(), &density);
        Self {
            id: id.into(),
            density,
            adjoint,
        }
    }

    pub fn pair(&self, grid: &SpatialGrid<T>, x: &[T]) -> T {
        pair_values(grid, x, &self.density)
    }

    pub fn pair_adjoint(&self, grid: &SpatialGrid<T>, x: &[T]) -> T {
        pair_values(grid, x, &self.adjoint)
    }

    /// `x* + y*`.
    pub fn sum(&self, other: &Self) -> Self {
        let add = |a: &[T], b: &[T]| a.iter().zip(b).map(|(&x, &y)| x + y).collect();
        Self {
            id: format!("{}+{}", self.id, other.id),
            density: add(&self.density, &other.density),
            adjoint: add(&self.adjoint, &other.adjoint),
        }
    }
}

/// `exp(1 − 1/(1 − r²))` on `|r| < 1`, zero outside; smooth with unit peak.
pub fn bump<T: Real>(x: T, center: T, width: T) -> T {
    let r = (x - center) / width;
    if r.abs() >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - r * r)).exp()
    }
}

/// Centres and half-widths of the fixed bump profiles on `[0, 1]`.
pub const FIXED_BUMPS: [(f64, f64); 10] = [
    (0.20, 0.10),
    (0.30, 0.15),
    (0.40, 0.12),
    (0.50, 0.20),
    (0.50, 0.08),
    (0.60, 0.15),
    (0.65, 0.25),
    (0.70, 0.10),
    (0.75, 0.18),
    (0.80, 0.12),
];

/// Ten fixed bumps plus `n_random` random ones (logged by `seed`), each
/// compactly supported inside the domain. On a half-line the profiles are
/// scaled to `[0, 0.6 L]`; on `ℝⁿ` they are sampled at `i/(n-1)`.
pub fn functional_suite<T: Real>(generator: &Generator<T>, n_random: usize, seed: u64) -> Vec<TestFunctional<T>> {
    let grid = generator.grid();
    let scale = match grid.kind() {
        GridKind::HalfLine => grid.length() * T::lit(0.6),
        GridKind::UnitInterval => T::one(),
        GridKind::Points => T::one(),
    };
    let coords: Vec<T> = match grid.kind() {
        GridKind::Points => {
            let n = grid.len();
            (0..n)
                .map(|i| {
                    if n > 1 {
                        T::from_count(i) / T::from_count(n - 1)
                    } else {
                        T::half()
                    }
                })
                .collect()
        }
        _ => grid.nodes().iter().map(|&x| x / scale).collect(),
    };
    let make = |id: String, c: f64, w: f64| {
        let density = if grid.kind() == GridKind::Points {
            // smooth weights that never vanish identically on a coarse vector
            coords
                .iter()
                .map(|&x| (T::lit(w * 10.0) * (x - T::lit(c))).cos())
                .collect()
        } else {
            coords.iter().map(|&x| bump(x, T::lit(c), T::lit(w))).collect()
        };
        TestFunctional::new(id, density, generator)
    };
    let mut out: Vec<_> = FIXED_BUMPS
        .iter()
        .enumerate()
        .map(|(i, &(c, w))| make(format!("fixed{i}"), c, w))
        .collect();
    let mut rng = stream_rng(seed, 0xF0_F0);
    for i in 0..n_random {
        let w: f64 = rng.random_range(0.08..0.2);
        let c: f64 = rng.random_range(0.05 + w..0.95 - w);
        out.push(make(format!("random{i}"), c, w));
    }
    out
}
