//! Zeroth-order Bessel functions.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

use super::MAX_SERIES_TERMS;

/// Below this argument `J0` is evaluated by the periodic trapezoid rule on
/// its integral representation; above it by the Hankel asymptotic series.
const J0_ASYMPTOTIC_FROM: f64 = 25.0;

/// Switch between the ascending series and the large-argument expansion of
/// `e^{-x} I0(x)`.
const I0_ASYMPTOTIC_FROM: f64 = 30.0;

/// Bessel function of the first kind of order zero.
///
/// For `|x| <= 25` uses the midpoint rule on `J0(x) = (1/π) ∫_0^π cos(x sin t) dt`,
/// which converges geometrically for periodic analytic integrands: the
/// aliasing error is `2 J_{2N}(x)`, and `N` is chosen so that this is below
/// `1e-17`. Larger arguments use the Hankel expansion truncated at its
/// smallest term (about `e^{-2|x|}`).
pub fn bessel_j0<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain("bessel_j0", x.to_f64_lossy(), "finite");
    }
    let ax = x.abs();
    if ax <= T::lit(J0_ASYMPTOTIC_FROM) {
        Ok(j0_trapezoid(ax))
    } else {
        Ok(j0_hankel(ax))
    }
}

fn j0_trapezoid<T: Real>(ax: T) -> T {
    let axf = ax.to_f64_lossy();
    // J_n(x) is below 1e-17 once n exceeds x + 14 (x/2)^{1/3} + 10.
    let order = axf + 14.0 * (axf / 2.0).cbrt() + 20.0;
    let n = ((order / 2.0).ceil() as usize).max(16);
    let step = T::PI() / T::lit(n as f64);
    let half = T::lit(0.5);
    let sum: T = (0..n)
        .map(|j| (ax * ((T::lit(j as f64) + half) * step).sin()).cos())
        .sum();
    sum / T::lit(n as f64)
}

fn j0_hankel<T: Real>(ax: T) -> T {
    // P and Q of the Hankel expansion with mu = 4 nu^2 = 0.
    let eight_x = T::lit(8.0) * ax;
    let mut p = T::one();
    let mut q = T::zero();
    let mut term = T::one();
    let mut last = T::infinity();
    for k in 1..MAX_SERIES_TERMS {
        let odd = T::lit((2 * k - 1) as f64);
        term = term * (-(odd * odd)) / (T::lit(k as f64) * eight_x);
        let mag = term.abs();
        if mag >= last || mag < T::series_eps() * T::lit(1e-2) {
            break;
        }
        last = mag;
        // k odd feeds Q with sign (-1)^((k-1)/2), k even feeds P with (-1)^(k/2)
        match k % 4 {
            1 => q = q + term,
            2 => p = p - term,
            3 => q = q - term,
            _ => p = p + term,
        }
    }
    let chi = ax - T::FRAC_PI_4();
    (T::lit(2.0) / (T::PI() * ax)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// Exponentially scaled modified Bessel function `e^{-x} I0(x)` for `x >= 0`.
///
/// The ascending series `Σ (x²/4)^k / (k!)²` has positive terms only, so it is
/// used up to `x = 30`; beyond that the asymptotic expansion
/// `(2πx)^{-1/2} Σ ((2k-1)!!)² / (k! (8x)^k)` is truncated at its smallest
/// term, which is below `e^{-60}` there.
pub fn bessel_i0_scaled<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() || x < T::zero() {
        return domain("bessel_i0_scaled", x.to_f64_lossy(), "finite and >= 0");
    }
    if x <= T::lit(I0_ASYMPTOTIC_FROM) {
        let quarter_sq = x * x / T::lit(4.0);
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..=MAX_SERIES_TERMS {
            let kf = T::lit(k as f64);
            term = term * quarter_sq / (kf * kf);
            sum = sum + term;
            if term <= T::series_eps() * sum {
                return Ok(sum * (-x).exp());
            }
        }
        Err(Error::Convergence {
            function: "bessel_i0_scaled",
            terms: MAX_SERIES_TERMS,
        })
    } else {
        let eight_x = T::lit(8.0) * x;
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..MAX_SERIES_TERMS {
            let odd = T::lit((2 * k - 1) as f64);
            let next = term * odd * odd / (T::lit(k as f64) * eight_x);
            if next >= term {
                break;
            }
            term = next;
            sum = sum + term;
            if term <= T::series_eps() * sum {
                break;
            }
        }
        Ok(sum / (T::TAU() * x).sqrt())
    }
}
