//! First-order Marcum Q function.
//!
//! With `z = ab` and `Ĩ_k(z) = e^{-z} I_k(z)`:
//!
//! ```text
//! a <  b:  Q1(a,b) =     e^{-(b-a)²/2} Σ_{k≥0} (a/b)^k Ĩ_k(z)
//! a >= b:  Q1(a,b) = 1 - e^{-(a-b)²/2} Σ_{k≥1} (b/a)^k Ĩ_k(z)
//! ```
//!
//! Both sums have positive terms. The ratios `Ĩ_k/Ĩ_{k-1}` come from a
//! backward (Miller) recurrence seeded with the Amos bound, and `Ĩ_0` from
//! [`bessel_i0_scaled`]. Terms behave like `ρ^k e^{-k²/2z}`, so the number
//! needed grows like `√z` when `ρ = min(a,b)/max(a,b)` is close to one; the
//! term cap scales accordingly.

use crate::error::{domain, Error, Result};
use crate::scalar::Real;

use super::bessel::bessel_i0_scaled;
use super::MAX_SERIES_TERMS;

/// Extra backward-recurrence steps, in units of `√z`, above the last index
/// needed. Contamination by the dominant solution decays like
/// `exp(-(start² - k²)/z)`, i.e. below `e^{-100}` here.
const MILLER_MARGIN_SQRT_Z: f64 = 10.0;

fn term_cap(z: f64) -> usize {
    MAX_SERIES_TERMS + (40.0 * z.sqrt()).ceil() as usize
}

/// `Q1(a, b)` for `a, b >= 0`, absolute accuracy 1e-10 or better in `f64`.
pub fn marcum_q1<T: Real>(a: T, b: T) -> Result<T> {
    if !a.is_finite() || a < T::zero() {
        return domain("marcum_q1", a.to_f64_lossy(), "finite and >= 0");
    }
    if !b.is_finite() || b < T::zero() {
        return domain("marcum_q1", b.to_f64_lossy(), "finite and >= 0");
    }
    if b == T::zero() {
        return Ok(T::one());
    }
    if a == T::zero() {
        return Ok((-b * b / T::lit(2.0)).exp());
    }

    let complement = a >= b;
    let (rho, gap) = if complement { (b / a, a - b) } else { (a / b, b - a) };
    let prefactor = (-gap * gap / T::lit(2.0)).exp();
    if prefactor == T::zero() {
        return Ok(if complement { T::one() } else { T::zero() });
    }

    let z = a * b;
    let sum = scaled_bessel_sum(rho, z, if complement { 1 } else { 0 })?;
    let q = if complement {
        T::one() - prefactor * sum
    } else {
        prefactor * sum
    };
    Ok(q.max(T::zero()).min(T::one()))
}

/// `Σ_{k≥first} ρ^k Ĩ_k(z)` for `0 < ρ <= 1`, `z > 0`.
fn scaled_bessel_sum<T: Real>(rho: T, z: T, first: usize) -> Result<T> {
    let zf = z.to_f64_lossy();
    let rhof = rho.to_f64_lossy();
    let cap = term_cap(zf);

    // Upper estimate of where the terms become negligible, from the Amos
    // upper bound on I_k/I_{k-1}; doubled if the true series needs more.
    let mut last = 0usize;
    {
        let mut t = 1.0f64;
        let mut s = if first == 0 { 1.0f64 } else { 0.0 };
        for k in 1..=cap {
            let kf = k as f64;
            t *= rhof * zf / (kf - 0.5 + ((kf + 0.5) * (kf + 0.5) + zf * zf).sqrt());
            s += t;
            if t < 1e-18 * s {
                last = k;
                break;
            }
        }
        if last == 0 {
            return Err(Error::Convergence {
                function: "marcum_q1",
                terms: cap,
            });
        }
    }

    loop {
        if let Some(sum) = sum_with_ratios(rho, z, first, last)? {
            return Ok(sum);
        }
        if last >= cap {
            return Err(Error::Convergence {
                function: "marcum_q1",
                terms: cap,
            });
        }
        last = (2 * last).min(cap);
    }
}

/// Sums up to index `last`; `None` if the truncation criterion was not met.
fn sum_with_ratios<T: Real>(rho: T, z: T, first: usize, last: usize) -> Result<Option<T>> {
    // Ratios Ĩ_k/Ĩ_{k-1} for k = 1..=last by backward recurrence
    // r_k = 1 / (2k/z + r_{k+1}).
    let start = last + 20 + (MILLER_MARGIN_SQRT_Z * z.to_f64_lossy().sqrt()).ceil() as usize;
    let two_over_z = T::lit(2.0) / z;
    let sf = T::lit(start as f64 + 1.0);
    let mut r = z / (sf + (sf * sf + z * z).sqrt());
    let mut ratios = vec![T::zero(); last + 1];
    for k in (1..=start).rev() {
        r = T::one() / (T::lit(k as f64) * two_over_z + r);
        if k <= last {
            ratios[k] = r;
        }
    }

    let mut term = bessel_i0_scaled(z)?;
    let mut sum = if first == 0 { term } else { T::zero() };
    for ratio in ratios.iter().skip(1) {
        term = term * rho * *ratio;
        sum = sum + term;
        if term <= T::series_eps() * sum {
            return Ok(Some(sum));
        }
    }
    Ok(None)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use proptest::prelude::*;

    /// 1 - ∫_0^b r e^{-(r²+a²)/2} I0(ar) dr, the Rician tail, by adaptive
    /// quadrature of the density (in scaled form).
    fn rician_tail_by_quadrature(a: f64, b: f64) -> f64 {
        let opts = QuadOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-13,
            max_intervals: 10_000,
        };
        let density = |r: f64| r * (-(r - a) * (r - a) / 2.0).exp() * bessel_i0_scaled(a * r).unwrap();
        1.0 - integrate(density, 0.0, b, &opts).unwrap().value
    }

    /// Poisson-mixture form Σ_k Pois(k; a²/2) · P(Gamma(k+1) > b²/2),
    /// summed by brute force for moderate arguments.
    fn poisson_mixture(a: f64, b: f64) -> f64 {
        let lam = a * a / 2.0;
        let y = b * b / 2.0;
        let mut total = 0.0;
        let mut w = (-lam).exp();
        // tail_k = e^{-y} Σ_{j≤k} y^j/j!
        let mut yterm = (-y).exp();
        let mut tail = yterm;
        for k in 0..2000 {
            if k > 0 {
                w *= lam / k as f64;
                yterm *= y / k as f64;
                tail += yterm;
            }
            total += w * tail.min(1.0);
        }
        total
    }

    #[test]
    fn boundary_identities() {
        for &a in &[0.0_f64, 0.3, 4.0, 40.0] {
            assert_eq!(marcum_q1(a, 0.0).unwrap(), 1.0);
        }
        for &b in &[0.1_f64, 1.0, 3.0] {
            assert_eq!(marcum_q1(0.0, b).unwrap(), (-b * b / 2.0).exp());
        }
    }

    #[test]
    fn reference_point_against_quadrature() {
        let oracle = rician_tail_by_quadrature(3.2, 1.7);
        let got = marcum_q1(3.2_f64, 1.7).unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }

    #[test]
    fn diagonal_identity() {
        // Q1(x, x) = (1 + e^{-x²} I0(x²)) / 2
        for &x in &[0.1_f64, 1.0, 5.0, 30.0, 150.0] {
            let expected = 0.5 * (1.0 + bessel_i0_scaled(x * x).unwrap());
            assert!((marcum_q1(x, x).unwrap() - expected).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn agrees_with_poisson_mixture() {
        for &(a, b) in &[(0.5, 0.7), (2.0, 1.0), (1.0, 2.0), (6.0, 6.5), (9.0, 8.0), (12.0, 13.0), (20.0, 19.0)] {
            let m = poisson_mixture(a, b);
            let got = marcum_q1(a, b).unwrap();
            assert!((got - m).abs() < 1e-11, "({a},{b}): {got} vs {m}");
        }
    }

    #[test]
    fn symmetric_sum_identity_large_arguments() {
        // Q1(a,b) + Q1(b,a) = 1 + e^{-(a-b)²/2} Ĩ_0(ab)
        for &(a, b) in &[(170.0_f64, 171.0), (1000.0, 999.5), (3000.0, 3000.3)] {
            let lhs = marcum_q1(a, b).unwrap() + marcum_q1(b, a).unwrap();
            let rhs = 1.0 + (-(a - b) * (a - b) / 2.0).exp() * bessel_i0_scaled(a * b).unwrap();
            assert!((lhs - rhs).abs() < 1e-10, "({a},{b})");
        }
    }

    #[test]
    fn large_arguments_approach_normal_tail() {
        // For large a,b: Q1(a,b) ≈ Φ(a - b) corrected; at a = b + δ with b huge
        // the value tends to 1 - Φ(b - a - 1/(2b)) up to O(1/b).
        let (a, b) = (2000.0_f64, 2001.0);
        let q = marcum_q1(a, b).unwrap();
        assert!((q - 0.1587).abs() < 5e-3, "{q}");
    }

    #[test]
    fn mismatch_regime_against_high_precision_quadrature() {
        // (a, b) = (√(2(1-σ²)x)/σ, √(2x)/σ); reference values from a
        // 40-digit quadrature of the Rician density.
        let cases = [
            (35.56714776306922_f64, 35.74632848279666, 0.43441049699377845),
            (1.0055402085998906, 1.0540925533894598, 0.70862713513643964),
            (44.719123426113796, 44.72135954999579, 0.50356866166741917),
            (316.2276079029154, 316.22776601683796, 0.50056770581907914),
        ];
        for (a, b, expected) in cases {
            let got = marcum_q1(a, b).unwrap();
            assert!((got - expected).abs() < 1e-10, "({a},{b}): {got} vs {expected}");
        }
    }

    #[test]
    fn rejects_negative() {
        assert!(marcum_q1(-1.0_f64, 1.0).is_err());
        assert!(marcum_q1(1.0_f64, -1.0).is_err());
    }

    #[test]
    fn density_quadrature_closes_to_one() {
        // Q1 + ∫_0^b density = 1, 100 pseudo-random points in [0, 10]².
        let mut state = 0x9E37_79B9_7F4A_7C15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 10.0
        };
        for _ in 0..100 {
            let (a, b) = (next(), next());
            let tail = rician_tail_by_quadrature(a, b);
            let q = marcum_q1(a, b).unwrap();
            assert!((q - tail).abs() < 1e-8, "({a},{b}): {q} vs {tail}");
        }
    }

    proptest! {
        #[test]
        fn monotone_in_each_argument(a in 0.0f64..30.0, b in 0.0f64..30.0, da in 0.0f64..1.0, db in 0.0f64..1.0) {
            let base = marcum_q1(a, b).unwrap();
            prop_assert!((0.0..=1.0).contains(&base));
            prop_assert!(marcum_q1(a, b + db).unwrap() <= base + 1e-12);
            prop_assert!(marcum_q1(a + da, b).unwrap() >= base - 1e-12);
        }
    }
}
