//! Special functions used by the channel statistics and the rate formulas.
//!
//! All functions are pure. Series are truncated once a term falls below
//! `1e-16` times the running sum, with a hard cap of [`MAX_SERIES_TERMS`]
//! (the Marcum series cap additionally scales with `√(ab)`).

mod bessel;
mod erf;
mod expint;
mod lambert;
mod marcum;

pub use bessel::{bessel_i0_scaled, bessel_j0};
pub use erf::erf;
pub use expint::{exp_integral_e1, exp_integral_e1_scaled};
pub use lambert::lambert_w0;
pub use marcum::marcum_q1;

use crate::error::{domain, Result};
use crate::scalar::Real;

pub const MAX_SERIES_TERMS: usize = 500;

/// Documented accuracy of a special function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl AccuracySpec {
    pub const fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol }
    }

    /// Whether `got` is within tolerance of `reference`.
    pub fn accepts(&self, got: f64, reference: f64) -> bool {
        let err = (got - reference).abs();
        err <= self.abs_tol || err <= self.rel_tol * reference.abs()
    }
}

pub const J0_ACCURACY: AccuracySpec = AccuracySpec::new(1e-12, 1e-10);
pub const I0_SCALED_ACCURACY: AccuracySpec = AccuracySpec::new(1e-14, 1e-10);
pub const MARCUM_Q1_ACCURACY: AccuracySpec = AccuracySpec::new(1e-10, 1e-10);
pub const E1_ACCURACY: AccuracySpec = AccuracySpec::new(1e-14, 1e-10);
pub const ERF_ACCURACY: AccuracySpec = AccuracySpec::new(1e-12, 1e-12);
pub const LAMBERT_W0_ACCURACY: AccuracySpec = AccuracySpec::new(1e-12, 1e-12);

/// Normalized sinc, `sin(πx)/(πx)` with `sinc(0) = 1`.
pub fn sinc<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain("sinc", x.to_f64_lossy(), "finite");
    }
    let y = T::PI() * x;
    if y.abs() < T::lit(1e-4) {
        let y2 = y * y;
        return Ok(T::one() - y2 / T::lit(6.0) + y2 * y2 / T::lit(120.0));
    }
    Ok(y.sin() / y)
}
