//! Laplace-domain algebra: polynomials in `s`, rational transfer functions,
//! controllable-canonical state-space realizations and unit-step responses.
//!
//! Polynomial coefficients are stored in ascending powers of `s`, so the
//! factored forms `(1 + sT)` used throughout the controller design read
//! directly as `[1.0, T]`.

mod poly;
mod roots;
mod statespace;
mod transfer;

pub use nalgebra::Complex;
pub use poly::Polynomial;
pub use roots::{balance, companion_matrix};
pub use statespace::{step_response, StateSpace};
pub use transfer::TransferFunction;

/// Double-precision complex number.
pub type C64 = Complex<f64>;

/// Relative threshold below which leading coefficients are dropped.
pub const COEFF_EPS: f64 = 1e-12;
