use crate::error::{domain, Error, Result};
use crate::scalar::Real;

use super::MAX_SERIES_TERMS;

/// Error function, absolute accuracy 1e-12 or better in `f64`.
///
/// `|x| <= 3`: the positive-term series
/// `erf(x) = 2/√π e^{-x²} Σ 2^n x^{2n+1} / (2n+1)!!`.
/// `|x| > 3`: `1 - erfc(x)` with the Laplace continued fraction for `erfc`.
pub fn erf<T: Real>(x: T) -> Result<T> {
    if !x.is_finite() {
        return domain("erf", x.to_f64_lossy(), "finite");
    }
    let ax = x.abs();
    let value = if ax <= T::lit(3.0) {
        erf_series(ax)?
    } else if ax < T::lit(6.0) {
        T::one() - erfc_continued_fraction(ax)?
    } else {
        T::one()
    };
    Ok(if x < T::zero() { -value } else { value })
}

fn erf_series<T: Real>(x: T) -> Result<T> {
    if x == T::zero() {
        return Ok(T::zero());
    }
    let two_x2 = T::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..=MAX_SERIES_TERMS {
        term = term * two_x2 / T::lit((2 * n + 1) as f64);
        sum = sum + term;
        if term <= T::series_eps() * sum {
            return Ok(T::lit(2.0) / T::PI().sqrt() * (-x * x).exp() * sum);
        }
    }
    Err(Error::Convergence {
        function: "erf",
        terms: MAX_SERIES_TERMS,
    })
}

/// `erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`, `x > 0`.
fn erfc_continued_fraction<T: Real>(x: T) -> Result<T> {
    let tiny = T::lit(1e-300).max(T::min_positive_value());
    let mut f = x;
    let mut c = x;
    let mut d = T::zero();
    for n in 1..=MAX_SERIES_TERMS {
        let a = T::lit(n as f64 * 0.5);
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - T::one()).abs() <= T::series_eps() {
            return Ok((-x * x).exp() / (T::PI().sqrt() * f));
        }
    }
    Err(Error::Convergence {
        function: "erfc",
        terms: MAX_SERIES_TERMS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Alternating Taylor series with a fixed number of terms.
    fn erf_taylor(x: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut pow = x;
        let mut fact = 1.0;
        for n in 0..terms {
            if n > 0 {
                pow *= -x * x;
                fact *= n as f64;
            }
            sum += pow / (fact * (2 * n + 1) as f64);
        }
        2.0 / std::f64::consts::PI.sqrt() * sum
    }

    #[test]
    fn reference_values() {
        assert_eq!(erf(0.0_f64).unwrap(), 0.0);
        let oracle = erf_taylor(1.0, 30);
        assert!((oracle - 0.8427007929497149).abs() < 1e-15);
        assert!((erf(1.0_f64).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn matches_taylor_on_grid() {
        // The Taylor series cancels badly beyond ~3; compare inside.
        for i in 0..=60 {
            let x = i as f64 * 0.05;
            let t = erf_taylor(x, 80);
            assert!((erf(x).unwrap() - t).abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn branches_agree_at_three() {
        let s = erf_series(3.0_f64).unwrap();
        let c = 1.0 - erfc_continued_fraction(3.0_f64).unwrap();
        assert!((s - c).abs() < 1e-15);
        // erfc(3) = 2.209049699858544e-05
        assert!((erfc_continued_fraction(3.0_f64).unwrap() - 2.209049699858544e-05).abs() < 1e-18);
    }

    #[test]
    fn odd_and_bounded() {
        for i in 0..100 {
            let x = i as f64 * 0.13;
            let e = erf(x).unwrap();
            assert_eq!(erf(-x).unwrap(), -e);
            assert!(e > -1.0 && e <= 1.0);
        }
        assert!(erf(f64::NAN).is_err());
    }
}
