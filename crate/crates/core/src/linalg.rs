//! Small dense row-major matrix helpers for the finite-dimensional backend and
//! the discrete generators used by the verifier.

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n {
            return Err(invalid(
                "matrix",
                format!("expected {} entries, got {}", n * n, data.len()),
            ));
        }
        Ok(Self { n, data })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn diagonal(d: &[T]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn scaled(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&v| v * c).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == T::zero() {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        self.data
            .chunks(self.n)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    fn add_scaled(&mut self, c: T, other: &Self) {
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.iter().map(|v| v.abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut b = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| {
                    a[i * n + col]
                        .abs()
                        .partial_cmp(&a[j * n + col].abs())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .expect("non-empty range");
            if a[pivot * n + col] == T::zero() {
                return Err(invalid("matrix", "singular system"));
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    b.swap(col * n + k, pivot * n + k);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == T::zero() {
                    continue;
                }
                for k in col..n {
                    let v = a[col * n + k];
                    a[r * n + k] -= f * v;
                }
                for k in 0..n {
                    let v = b[col * n + k];
                    b[r * n + k] -= f * v;
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for k in 0..n {
                let mut s = b[col * n + k];
                for j in col + 1..n {
                    s -= a[col * n + j] * b[j * n + k];
                }
                b[col * n + k] = s / d;
            }
        }
        Ok(Self { n, data: b })
    }

    /// Matrix exponential by scaling and squaring with a degree-(6,6) Padé approximant.
    pub fn expm(&self) -> Result<Self> {
        const Q: usize = 6;
        let n = self.n;
        let norm = self.norm_inf();
        let mut squarings = 0u32;
        if norm > T::half() {
            squarings = (norm / T::half()).log2().ceil().to_u32().unwrap_or(0);
        }
        let a = self.scaled(T::two().powi(-(squarings as i32)));
        // c_k = (2q-k)! q! / ((2q)! k! (q-k)!)
        let mut coeffs = [T::one(); Q + 1];
        for k in 1..=Q {
            coeffs[k] = coeffs[k - 1] * T::from_count(Q + 1 - k) / (T::from_count(k) * T::from_count(2 * Q + 1 - k));
        }
        let mut num = Self::identity(n);
        let mut den = Self::identity(n);
        let mut power = Self::identity(n);
        for (k, &c) in coeffs.iter().enumerate().skip(1) {
            power = power.matmul(&a);
            num.add_scaled(c, &power);
            let sign = if k % 2 == 1 { -c } else { c };
            den.add_scaled(sign, &power);
        }
        let mut e = den.solve(&num)?;
        for _ in 0..squarings {
            e = e.matmul(&e);
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let m = Matrix::diagonal(&[-1.0f64, 0.5, 3.0]);
        let e = m.expm().unwrap();
        for (i, d) in [-1.0f64, 0.5, 3.0].iter().enumerate() {
            assert!((e.get(i, i) - d.exp()).abs() < 1e-13 * d.exp().max(1.0));
        }
        assert_eq!(e.get(0, 1), 0.0);
    }

    #[test]
    fn expm_of_rotation_generator() {
        let m = Matrix::new(2, vec![0.0f64, -2.0, 2.0, 0.0]).unwrap();
        let e = m.expm().unwrap();
        assert!((e.get(0, 0) - 2.0f64.cos()).abs() < 1e-14);
        assert!((e.get(1, 0) - 2.0f64.sin()).abs() < 1e-14);
    }

    #[test]
    fn solve_recovers_identity() {
        let a = Matrix::new(3, vec![2.0f64, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]).unwrap();
        let inv = a.solve(&Matrix::identity(3)).unwrap();
        let prod = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - e).abs() < 1e-14);
            }
        }
    }
}
