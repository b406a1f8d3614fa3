//! Scalar abstraction shared by the numerical kernels.
//!
//! Everything below the Monte Carlo layer is written against [`Real`] so the
//! same code runs in `f32` and `f64`. The accuracy contracts quoted in the
//! function docs hold for `f64`; `f32` instantiations are proportionally
//! looser.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal. Total for every finite input on both
    /// supported widths.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Relative threshold below which a series term is considered negligible.
    #[inline]
    fn series_eps() -> Self {
        Self::lit(1e-16).max(Self::epsilon() / Self::lit(4.0))
    }

    /// Euler–Mascheroni constant.
    #[inline]
    fn euler_gamma() -> Self {
        Self::lit(0.577_215_664_901_532_9)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
