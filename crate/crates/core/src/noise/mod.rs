//! Wiener paths, stochastic convolutions and γ-radonifying norms.

mod convolution;
mod gamma;
mod haar;
mod path;
pub mod rng;

pub use convolution::stochastic_convolution;
pub use gamma::{
    gamma_norm_estimate, gamma_norm_hs_oracle, haar_tail_envelope, haar_tail_sup, mckendrick_gamma_bound,
    weighted_gamma_sup, GammaEstimate, GammaLevel, KernelOperator, WeightedGamma,
};
pub use haar::{cell_basis, haar_basis, Basis};
pub use path::{member_seed, sample_path, NoisePath};

pub(crate) use convolution::convolution_series;
