//! Numerical laboratory for maximal operators and Hilbert transforms along
//! variable curves `t -> (t, u(x, y) [t]^alpha)`, together with the
//! Littlewood–Paley, shifted maximal, oscillatory-integral and decoupling
//! machinery used to study them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod cutoff;
pub mod decoupling;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod grid;
pub mod oscillatory;
pub mod quadrature;
pub mod shifted_max;

pub use error::{Error, Result};
pub use fit::{fit_exponent, fit_semilog, FitResult};
pub use grid::{make_grid, norm_lp, random_field, spectral_shift, Band, Dims, GridFunction, TorusGrid};
