use crate::linalg::Matrix;
use crate::scalar::Real;
use crate::semigroup::{Generator, Semigroup};

/// Condition-number ceiling above which the McKendrick boundary elimination
/// is considered unreliable.
pub const BOUNDARY_CONDITION_LIMIT: f64 = 1e8;

/// Discrete generator `A_h` of a backend.
#[derive(Debug, Clone)]
pub enum DiscreteGenerator<T> {
    /// Dense matrix acting on all nodes.
    Matrix(Matrix<T>),
    /// Upwind `-d/da - μ` on nodes `1..n`; node 0 carries the nonlocal
    /// boundary constraint `g(0) = ∫ b g`.
    Renewal {
        upwind: Matrix<T>,
        /// Trapezoid weights times `b`, so the constraint reads `g₀ = Σ_j c_j g_j`.
        boundary: Vec<T>,
        condition: T,
    },
}

fn upwind<T: Real>(n: usize, h: T, decay: impl Fn(usize) -> T) -> Matrix<T> {
    let mut a = Matrix::zeros(n);
    for i in 1..n {
        a.set(i, i, -T::one() / h - decay(i));
        a.set(i, i - 1, T::one() / h);
    }
    a
}

impl<T: Real> DiscreteGenerator<T> {
    /// Upwind discretization for transport (row 0 vanishes: `x(0) = 0` is kept),
    /// the renewal form for McKendrick, and `M` itself for the finite-dimensional backend.
    pub fn of(generator: &Generator<T>) -> Self {
        match generator {
            Generator::Transport(sg) => {
                let g = sg.grid();
                Self::Matrix(upwind(g.len(), g.step(), |_| sg.decay()))
            }
            Generator::McKendrick(sg) => {
                let g = sg.grid();
                let mu = sg.mortality();
                let boundary: Vec<T> = g.weights().iter().zip(sg.birth()).map(|(&w, &b)| w * b).collect();
                let denom = (T::one() - boundary[0]).abs();
                let spread: T = T::one() + boundary.iter().map(|v| v.abs()).sum::<T>();
                let condition = if denom > T::zero() {
                    spread / denom
                } else {
                    T::infinity()
                };
                Self::Renewal {
                    upwind: upwind(g.len(), g.step(), |i| mu[i]),
                    boundary,
                    condition,
                }
            }
            Generator::FiniteDim(sg) => Self::Matrix(sg.matrix().clone()),
        }
    }

    /// `A_h x`. For the renewal form the boundary entry is the constraint defect
    /// `x₀ − Σ c_j x_j` rather than a rate.
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::Matrix(a) => a.matvec(x),
            Self::Renewal { upwind, boundary, .. } => {
                let mut out = upwind.matvec(x);
                out[0] = x[0] - boundary.iter().zip(x).map(|(&c, &v)| c * v).sum::<T>();
                out
            }
        }
    }

    /// Whether the boundary elimination is too ill-conditioned to trust.
    pub fn ill_conditioned(&self) -> bool {
        match self {
            Self::Matrix(_) => false,
            Self::Renewal { condition, .. } => !(condition.as_f64() <= BOUNDARY_CONDITION_LIMIT),
        }
    }

    /// `W⁻¹ A_hᵀ W d`: the adjoint with respect to the pairing `⟨x, d⟩ = Σ w_i x_i d_i`.
    /// For the renewal form the boundary row is eliminated first.
    pub fn adjoint_density(&self, weights: &[T], d: &[T]) -> Vec<T> {
        let a = match self {
            Self::Matrix(a) => a.clone(),
            Self::Renewal { upwind, boundary, .. } => {
                // substitute g₀ = Σ_{j≥1} c_j g_j / (1 − c_0) into the upwind rows
                let n = boundary.len();
                let mut a = upwind.clone();
                let scale = T::one() / (T::one() - boundary[0]);
                for i in 1..n {
                    let coupling = upwind.get(i, 0);
                    if coupling == T::zero() {
                        continue;
                    }
                    a.set(i, 0, T::zero());
                    for (j, &b) in boundary.iter().enumerate().take(n).skip(1) {
                        let v = a.get(i, j) + coupling * b * scale;
                        a.set(i, j, v);
                    }
                }
                a
            }
        };
        let wd: Vec<T> = weights.iter().zip(d).map(|(&w, &v)| w * v).collect();
        let atwd = a.transpose().matvec(&wd);
        atwd.iter()
            .zip(weights)
            .map(|(&v, &w)| if w > T::zero() { v / w } else { T::zero() })
            .collect()
    }
}
