use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::space::grid::{ensure_compatible, SpatialGrid};

/// Which Banach space a grid function is an element of; selects its norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceTag<T> {
    /// `C_0([0,1]) = {f ∈ C([0,1]) : f(0) = 0}` with the sup norm.
    C0,
    /// `L¹` with trapezoid quadrature.
    L1,
    /// `L¹_w` with weight `e^{-w a}`.
    L1Weighted(T),
    /// `ℝⁿ` with the Euclidean norm.
    Euclidean,
}

/// Grid samples of an element of the state space `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T> {
    grid: Arc<SpatialGrid<T>>,
    values: Vec<T>,
    tag: SpaceTag<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(grid: Arc<SpatialGrid<T>>, values: Vec<T>, tag: SpaceTag<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        validate_tag(&tag, &values)?;
        Ok(Self { grid, values, tag })
    }

    pub fn zeros(grid: Arc<SpatialGrid<T>>, tag: SpaceTag<T>) -> Self {
        let values = vec![T::zero(); grid.len()];
        Self { grid, values, tag }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<SpatialGrid<T>>, tag: SpaceTag<T>, f: impl Fn(T) -> T) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values, tag)
    }

    pub(crate) fn from_parts_unchecked(grid: Arc<SpatialGrid<T>>, values: Vec<T>, tag: SpaceTag<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values, tag }
    }

    pub fn grid(&self) -> &Arc<SpatialGrid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn tag(&self) -> SpaceTag<T> {
        self.tag
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid and tag, new values (validated).
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.tag)
    }

    pub fn norm(&self) -> T {
        norm_values(&self.grid, self.tag, &self.values)
    }

    pub fn scale(&self, c: T) -> Self {
        let values = self.values.iter().map(|&v| v * c).collect();
        Self::from_parts_unchecked(self.grid.clone(), values, self.tag)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: T, other: &Self) -> Result<Self> {
        ensure_compatible(&self.grid, &other.grid, "axpy")?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| a + c * b)
            .collect();
        Ok(Self::from_parts_unchecked(self.grid.clone(), values, self.tag))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(T::one(), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(-T::one(), other)
    }

    /// Quadrature pairing `⟨self, density⟩` using the grid weights.
    pub fn pair(&self, density: &[T]) -> T {
        pair_values(&self.grid, &self.values, density)
    }
}

fn validate_tag<T: Real>(tag: &SpaceTag<T>, values: &[T]) -> Result<()> {
    match *tag {
        SpaceTag::C0 => match values.first() {
            Some(&v0) if v0 != T::zero() => Err(Error::NotInC0(v0.as_f64())),
            _ => Ok(()),
        },
        SpaceTag::L1Weighted(w) if !(w > T::zero()) => Err(invalid("w", "weighted L1 space needs w > 0")),
        _ => Ok(()),
    }
}

/// `‖·‖_E` of raw samples.
pub fn norm_values<T: Real>(grid: &SpatialGrid<T>, tag: SpaceTag<T>, values: &[T]) -> T {
    match tag {
        SpaceTag::C0 => values.iter().fold(T::zero(), |m, v| m.max(v.abs())),
        SpaceTag::L1 => grid.weights().iter().zip(values).map(|(&w, v)| w * v.abs()).sum(),
        SpaceTag::L1Weighted(rate) => grid
            .weights()
            .iter()
            .zip(grid.nodes())
            .zip(values)
            .map(|((&w, &a), v)| w * v.abs() * (-rate * a).exp())
            .sum(),
        SpaceTag::Euclidean => values.iter().map(|&v| v * v).sum::<T>().sqrt(),
    }
}

pub(crate) fn pair_values<T: Real>(grid: &SpatialGrid<T>, values: &[T], density: &[T]) -> T {
    grid.weights()
        .iter()
        .zip(values)
        .zip(density)
        .map(|((&w, &v), &d)| w * v * d)
        .sum()
}

/// `norm_E`: sup norm for `C0`, trapezoid quadrature for the `L¹` spaces.
pub fn norm_e<T: Real>(x: &GridFunction<T>) -> Result<T> {
    if x.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(x.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_function_has_zero_norm() {
        let g = SpatialGrid::<f64>::unit_interval(17).unwrap();
        for tag in [SpaceTag::C0, SpaceTag::L1, SpaceTag::L1Weighted(1.0)] {
            assert_eq!(norm_e(&GridFunction::zeros(g.clone(), tag)).unwrap(), 0.0);
        }
    }

    #[test]
    fn sup_of_identity_is_one() {
        let g = SpatialGrid::<f64>::unit_interval(33).unwrap();
        let x = GridFunction::from_fn(g, SpaceTag::C0, |xi| xi).unwrap();
        assert_eq!(norm_e(&x).unwrap(), 1.0);
    }

    #[test]
    fn l1_of_constant_on_zero_two() {
        let g = SpatialGrid::<f64>::half_line(41, 2.0).unwrap();
        let x = GridFunction::from_fn(g, SpaceTag::L1, |_| 1.0).unwrap();
        // trapezoid is exact for constants
        assert!((norm_e(&x).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn weighted_l1_matches_closed_form() {
        let g = SpatialGrid::<f64>::half_line(2001, 20.0).unwrap();
        let x = GridFunction::from_fn(g, SpaceTag::L1Weighted(0.5), |_| 1.0).unwrap();
        // ∫_0^20 e^{-a/2} da = 2 (1 - e^{-10}), trapezoid error h²/12·(w²)·∫
        let exact = 2.0 * (1.0 - (-10.0f64).exp());
        assert!((x.norm() - exact).abs() < 1e-4);
    }

    #[test]
    fn c0_requires_zero_at_origin() {
        let g = SpatialGrid::<f64>::unit_interval(5).unwrap();
        assert_eq!(
            GridFunction::from_fn(g.clone(), SpaceTag::C0, |x| x + 1.0),
            Err(Error::NotInC0(1.0))
        );
        assert!(GridFunction::new(g.clone(), vec![0.0; 4], SpaceTag::C0).is_err());
        assert!(GridFunction::new(g, vec![0.0; 5], SpaceTag::L1Weighted(0.0)).is_err());
    }

    #[test]
    fn euclidean_norm() {
        let g = SpatialGrid::<f64>::points(2).unwrap();
        let x = GridFunction::new(g, vec![3.0, 4.0], SpaceTag::Euclidean).unwrap();
        assert_eq!(x.norm(), 5.0);
    }
}
