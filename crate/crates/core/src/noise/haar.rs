use crate::error::{Error, Result};
use crate::scalar::Real;

/// A finite orthonormal family in `L²(0,1)`, piecewise constant on `cells`
/// equal cells. `level_ends` marks nested truncations (the family's first
/// `level_ends[i]` functions form the `i`-th truncation).
#[derive(Debug, Clone)]
pub struct Basis<T> {
    cells: usize,
    functions: Vec<Vec<T>>,
    supports: Vec<(usize, usize)>,
    level_ends: Vec<usize>,
}

impl<T: Real> Basis<T> {
    pub fn new(cells: usize, functions: Vec<Vec<T>>, level_ends: Vec<usize>) -> Result<Self> {
        if cells == 0 || functions.is_empty() {
            return Err(crate::error::invalid(
                "basis",
                "needs at least one cell and one function",
            ));
        }
        if functions.iter().any(|f| f.len() != cells) {
            return Err(Error::GridMismatch(
                "basis function length differs from cell count".into(),
            ));
        }
        let mut level_ends = level_ends;
        if level_ends.last() != Some(&functions.len()) {
            level_ends.push(functions.len());
        }
        let supports = functions
            .iter()
            .map(|f| {
                let first = f.iter().position(|&v| v != T::zero()).unwrap_or(0);
                let last = f.iter().rposition(|&v| v != T::zero()).map_or(0, |l| l + 1);
                (first, last.max(first))
            })
            .collect();
        Ok(Self {
            cells,
            functions,
            supports,
            level_ends,
        })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, k: usize) -> &[T] {
        &self.functions[k]
    }

    pub fn support(&self, k: usize) -> (usize, usize) {
        self.supports[k]
    }

    pub fn level_ends(&self) -> &[usize] {
        &self.level_ends
    }

    /// `⟨f_i, f_j⟩_{L²(0,1)}`.
    pub fn inner(&self, i: usize, j: usize) -> T {
        let (a0, a1) = self.supports[i];
        let (b0, b1) = self.supports[j];
        let (lo, hi) = (a0.max(b0), a1.min(b1));
        if lo >= hi {
            return T::zero();
        }
        let s: T = (lo..hi).map(|c| self.functions[i][c] * self.functions[j][c]).sum();
        s / T::from_count(self.cells)
    }

    /// Errors with the worst Gram entry if it deviates from `δ_ij` by more than `tol`.
    pub fn check_orthonormal(&self, tol: T) -> Result<()> {
        let mut worst = (0, 0, T::zero(), T::zero());
        for i in 0..self.len() {
            for j in i..self.len() {
                let g = self.inner(i, j);
                let target = if i == j { T::one() } else { T::zero() };
                let dev = (g - target).abs();
                if dev > worst.3 {
                    worst = (i, j, g, dev);
                }
            }
        }
        if worst.3 > tol {
            Err(Error::NotOrthonormal {
                i: worst.0,
                j: worst.1,
                value: worst.2.as_f64(),
            })
        } else {
            Ok(())
        }
    }
}

/// The Haar system up to level `depth`: `h_0 ≡ 1` and, for `n = 1..=depth`,
/// `j = 1..=2^{n-1}`, `h_k = 2^{(n-1)/2}(1_{((2j-2)/2^n, (2j-1)/2^n)} - 1_{((2j-1)/2^n, 2j/2^n)})`
/// with `k = 2^{n-1} + j - 1`, sampled on `2^depth` cells.
pub fn haar_basis<T: Real>(depth: u32) -> Result<Basis<T>> {
    if depth > 20 {
        return Err(crate::error::invalid("depth", "at most 20"));
    }
    let cells = 1usize << depth;
    let mut functions = vec![vec![T::one(); cells]];
    let mut level_ends = vec![1];
    for n in 1..=depth {
        let amp = T::two().powf(T::from_count(n as usize - 1) * T::half());
        let width = cells >> n; // cells per half-support
        for j in 1..=(1usize << (n - 1)) {
            let mut f = vec![T::zero(); cells];
            let start = (2 * j - 2) * width;
            f[start..start + width].fill(amp);
            f[start + width..start + 2 * width].fill(-amp);
            functions.push(f);
        }
        level_ends.push(functions.len());
    }
    Basis::new(cells, functions, level_ends)
}

/// Normalized indicators `√cells · 1_{cell}`; complete for piecewise constants.
pub fn cell_basis<T: Real>(cells: usize) -> Result<Basis<T>> {
    let amp = T::from_count(cells).sqrt();
    let functions = (0..cells)
        .map(|c| {
            let mut f = vec![T::zero(); cells];
            f[c] = amp;
            f
        })
        .collect();
    Basis::new(cells, functions, vec![cells])
}
