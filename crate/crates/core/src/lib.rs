//! Littlewood-Paley calculus, Bony paraproducts and a pseudospectral
//! solver for the viscous non-resistive MHD system on the periodic torus.
//!
//! The modules mirror the layers of the toolkit:
//!
//! * [`spectral`]: grids, Fourier fields, Leray projection, transport products
//! * [`lp`]: dyadic cutoffs, Littlewood-Paley blocks, Besov/Sobolev norms
//! * [`paraproduct`]: Bony decomposition and commutators
//! * [`stokes`]: fractional Stokes propagator and the `log(T/ε)` scan
//! * [`mhd`]: time integration and energy/scaling diagnostics
//! * [`ledger`]: flux terms, `A(t)`, continuation constants and the
//!   propagation experiment
//! * [`experiments`]: configuration, constant fitting and report emission

// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod experiments;
pub mod ledger;
pub mod lp;
pub mod mhd;
pub mod paraproduct;
pub mod stokes;
pub mod spectral;

pub use error::{Error, Result};
