//! Simulation and verification of stochastic evolution equations with additive
//! noise and finite delay.
//!
//! The core is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the `*F64` aliases below name the common instantiations.

pub mod error;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod scalar;
pub mod semigroup;
pub mod solver;
pub mod space;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type GridFunctionF64 = space::GridFunction<f64>;
pub type SpatialGridF64 = space::SpatialGrid<f64>;
pub type SegmentFunctionF64 = space::SegmentFunction<f64>;
pub type LiftedStateF64 = space::LiftedState<f64>;
pub type TrajectoryF64 = space::Trajectory<f64>;
pub type GeneratorF64 = semigroup::Generator<f64>;
