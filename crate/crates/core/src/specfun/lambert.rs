use crate::error::{domain, Error, Result};
use crate::scalar::Real;

const MAX_HALLEY_STEPS: usize = 64;

/// Principal branch of the Lambert W function on `y >= 0`: the unique
/// `w >= 0` with `w e^w = y`.
///
/// Halley iteration on `f(w) = w e^w - y`. Initial guess: `ln(1 + y)` for
/// `y < e`, otherwise the two-term asymptotic `L1 - L2 + L2/L1` with
/// `L1 = ln y`, `L2 = ln ln y`.
pub fn lambert_w0<T: Real>(y: T) -> Result<T> {
    if !y.is_finite() || y < T::zero() {
        return domain("lambert_w0", y.to_f64_lossy(), "finite and >= 0");
    }
    if y == T::zero() {
        return Ok(T::zero());
    }
    let mut w = if y < T::E() {
        y.ln_1p()
    } else {
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    let two = T::lit(2.0);
    for _ in 0..MAX_HALLEY_STEPS {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + T::one();
        let step = f / (ew * wp1 - (w + two) * f / (two * wp1));
        w = w - step;
        if step.abs() <= T::epsilon() * T::lit(4.0) * (T::one() + w.abs()) {
            return Ok(w.max(T::zero()));
        }
    }
    Err(Error::Convergence {
        function: "lambert_w0",
        terms: MAX_HALLEY_STEPS,
    })
}
