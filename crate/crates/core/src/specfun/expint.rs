use crate::error::{domain, Error, Result};
use crate::scalar::Real;

use super::MAX_SERIES_TERMS;

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
pub fn exp_integral_e1<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::one() {
        e1_series(x)
    } else {
        Ok(e1_scaled_continued_fraction(x)? * (-x).exp())
    }
}

/// `e^x E1(x)`, finite for every positive `x` (tends to `1/x`).
pub fn exp_integral_e1_scaled<T: Real>(x: T) -> Result<T> {
    check(x)?;
    if x <= T::one() {
        Ok(e1_series(x)? * x.exp())
    } else {
        e1_scaled_continued_fraction(x)
    }
}

fn check<T: Real>(x: T) -> Result<()> {
    if !x.is_finite() || x <= T::zero() {
        return domain("exp_integral_e1", x.to_f64_lossy(), "finite and > 0");
    }
    Ok(())
}

/// `-γ - ln x + Σ_{n≥1} (-1)^{n+1} x^n / (n·n!)`; alternating but bounded by
/// `e^x - 1 <= e - 1` on `(0, 1]`.
fn e1_series<T: Real>(x: T) -> Result<T> {
    let mut sum = T::zero();
    let mut pow_over_fact = T::one();
    for n in 1..=MAX_SERIES_TERMS {
        let nf = T::lit(n as f64);
        pow_over_fact = pow_over_fact * (-x) / nf;
        let term = pow_over_fact / nf;
        sum = sum - term;
        if term.abs() <= T::series_eps() * sum.abs().max(T::series_eps()) {
            return Ok(-T::euler_gamma() - x.ln() + sum);
        }
    }
    Err(Error::Convergence {
        function: "exp_integral_e1",
        terms: MAX_SERIES_TERMS,
    })
}

/// Modified Lentz evaluation of `e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))`.
fn e1_scaled_continued_fraction<T: Real>(x: T) -> Result<T> {
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    let mut b = x + T::one();
    let mut c = T::one() / tiny;
    let mut d = T::one() / b;
    let mut h = d;
    for i in 1..=MAX_SERIES_TERMS {
        let fi = T::lit(i as f64);
        let an = -fi * fi;
        b = b + T::lit(2.0);
        d = T::one() / (an * d + b);
        c = b + an / c;
        let delta = c * d;
        h = h * delta;
        if (delta - T::one()).abs() <= T::series_eps() {
            return Ok(h);
        }
    }
    Err(Error::Convergence {
        function: "exp_integral_e1",
        terms: MAX_SERIES_TERMS,
    })
}
