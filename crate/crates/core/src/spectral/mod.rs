//! Fourier representation of fields on the periodic torus and the
//! differential operators the rest of the crate builds on.

mod field;
mod grid;
mod ops;
pub mod random;

pub use field::{SolenoidalField, SpectralField, DIVERGENCE_TOL};
pub use grid::Grid;
pub use ops::{
    advect, fractional_laplacian, gradient_linf, leray_project, linf_norm, lp_norm,
    sobolev_norm_direct, transport, Exponent, HERMITIAN_TOL,
};
pub(crate) use ops::{project_modes, sobolev_weight};
