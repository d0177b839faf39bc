use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::space::function::GridFunction;
use crate::space::grid::ensure_compatible;
use crate::space::segment::SegmentFunction;

/// Element `[x, h]` of the product space `E × Lᵖ(-1, 0; E)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedState<T> {
    pub head: GridFunction<T>,
    pub tail: SegmentFunction<T>,
}

impl<T: Real> LiftedState<T> {
    pub fn new(head: GridFunction<T>, tail: SegmentFunction<T>) -> Result<Self> {
        ensure_compatible(head.grid(), tail.grid(), "lifted state head/tail")?;
        Ok(Self { head, tail })
    }

    pub fn norm(&self, p: T) -> T {
        self.head.norm() + self.tail.norm_lp(p)
    }
}

/// `‖[x, h]‖ = ‖x‖_E + ‖h‖_{Lᵖ(-1,0;E)}` (sum convention on the product).
pub fn norm_ep<T: Real>(y: &LiftedState<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(invalid("p", "exponent must satisfy p >= 1"));
    }
    ensure_compatible(y.head.grid(), y.tail.grid(), "norm_ep")?;
    Ok(y.norm(p))
}
