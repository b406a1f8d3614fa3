//! Spatial-mismatch channel between the predictor antenna (PA) and the
//! trailing receive antenna (RA).
//!
//! The PA measures `ĥ` at the position the RA reaches `δ` seconds later,
//! displaced by `d = |d_a - vδ|`. The RA channel is
//! `h = √(1-σ²) ĥ + σ q` with `ĥ, q ~ CN(0,1)` independent, where the
//! mismatch factor `σ` follows from the scattering correlation `Φ₁₂(d)`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::specfun::{bessel_i0_scaled, bessel_j0, marcum_q1, sinc};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Scattering law producing the antenna correlation `Φ₁₂(d)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationModel {
    /// Isotropic scattering, `J0(2πd/λ)`.
    Jakes,
    /// `exp(-(πd/λ)²)`.
    GaussianScattering,
    /// `sinc(2d/λ)`, normalized sinc.
    RectangularScattering,
}

impl CorrelationModel {
    pub const ALL: [CorrelationModel; 3] = [
        CorrelationModel::Jakes,
        CorrelationModel::GaussianScattering,
        CorrelationModel::RectangularScattering,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrelationModel::Jakes => "jakes",
            CorrelationModel::GaussianScattering => "gaussian",
            CorrelationModel::RectangularScattering => "rectangular",
        }
    }
}

impl fmt::Display for CorrelationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrelationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jakes" => Ok(CorrelationModel::Jakes),
            "gaussian" => Ok(CorrelationModel::GaussianScattering),
            "rectangular" => Ok(CorrelationModel::RectangularScattering),
            other => Err(Error::InvalidParameter(format!(
                "unknown correlation model '{other}' (expected jakes, gaussian or rectangular)"
            ))),
        }
    }
}

/// Physical and link parameters of one scenario, in SI and linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams<T> {
    /// Processing and feedback delay `δ` in seconds.
    pub delta: T,
    /// Carrier frequency in hertz.
    pub fc: T,
    /// PA–RA separation in meters.
    pub da: T,
    /// Vehicle speed in meters per second.
    pub v: T,
    /// Transmit power; equals the SNR since the noise has unit variance.
    pub power: T,
    pub model: CorrelationModel,
    /// Mismatch factor set directly, bypassing the kinematics.
    pub sigma_override: Option<T>,
}

impl<T: Real> ScenarioParams<T> {
    /// δ = 5 ms, f_c = 2.68 GHz, d_a = 1.5λ, Jakes scattering.
    pub fn reference(speed_mps: T, power: T) -> Self {
        let fc = T::lit(2.68e9);
        let lambda = T::lit(SPEED_OF_LIGHT) / fc;
        Self {
            delta: T::lit(5e-3),
            fc,
            da: T::lit(1.5) * lambda,
            v: speed_mps,
            power,
            model: CorrelationModel::Jakes,
            sigma_override: None,
        }
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma_override = Some(sigma);
        self
    }

    pub fn wavelength(&self) -> T {
        T::lit(SPEED_OF_LIGHT) / self.fc
    }

    /// Speed at which the RA lands exactly where the PA measured.
    pub fn matched_speed(&self) -> T {
        self.da / self.delta
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: T| Err(Error::InvalidParameter(format!("{what} = {v}")));
        if !(self.delta > T::zero() && self.delta.is_finite()) {
            return bad("delta must be > 0, got", self.delta);
        }
        if !(self.fc > T::zero() && self.fc.is_finite()) {
            return bad("fc must be > 0, got", self.fc);
        }
        if !(self.da >= T::zero() && self.da.is_finite()) {
            return bad("da must be >= 0, got", self.da);
        }
        if !(self.v >= T::zero() && self.v.is_finite()) {
            return bad("v must be >= 0, got", self.v);
        }
        if !(self.power > T::zero() && self.power.is_finite()) {
            return bad("power must be > 0, got", self.power);
        }
        if let Some(s) = self.sigma_override {
            if !(s >= T::zero() && s <= T::one()) {
                return bad("sigma must lie in [0, 1], got", s);
            }
        }
        Ok(())
    }

    /// Mismatch factor: the override if set, otherwise from the kinematics.
    pub fn resolve_sigma(&self) -> Result<SpatialCorrelation<T>> {
        self.validate()?;
        match self.sigma_override {
            Some(sigma) => Ok(SpatialCorrelation {
                sigma,
                phi12: T::nan(),
                d: effective_distance(self),
                clamped: false,
            }),
            None => sigma_from_scenario(self),
        }
    }
}

/// Mismatch factor together with the quantities it was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialCorrelation<T> {
    pub sigma: T,
    pub phi12: T,
    /// Effective distance in meters.
    pub d: T,
    /// Set when `|σ|` from the correlation exceeded one and was clamped.
    pub clamped: bool,
}

/// `d = |d_a - vδ|`.
pub fn effective_distance<T: Real>(params: &ScenarioParams<T>) -> T {
    (params.da - params.v * params.delta).abs()
}

/// Correlation `Φ₁₂(d)` between the PA and RA positions.
pub fn correlation_entry<T: Real>(d: T, lambda: T, model: CorrelationModel) -> Result<T> {
    if !(d >= T::zero()) || !(lambda > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "correlation needs d >= 0 and lambda > 0, got d = {d}, lambda = {lambda}"
        )));
    }
    let ratio = d / lambda;
    match model {
        CorrelationModel::Jakes => bessel_j0(T::TAU() * ratio),
        CorrelationModel::GaussianScattering => {
            let x = T::PI() * ratio;
            Ok((-x * x).exp())
        }
        CorrelationModel::RectangularScattering => sinc(T::lit(2.0) * ratio),
    }
}

/// Maps `Φ₁₂` to `(σ, clamped)`.
///
/// `σ = (Φ₁₂ - 1)/√(Φ₁₂ + (Φ₁₂ - 1)²)` is written in terms of `Φ₁₂` alone so no
/// square root of a negative correlation is taken. The sign is dropped (q is
/// circularly symmetric) and magnitudes above one, which occur exactly when
/// `Φ₁₂ < 0`, are clamped to one. The radicand `Φ² - Φ + 1` is always positive.
pub fn sigma_from_phi<T: Real>(phi12: T) -> (T, bool) {
    let gap = phi12 - T::one();
    let radicand = phi12 + gap * gap;
    if !(radicand > T::zero()) {
        return (T::one(), true);
    }
    let raw = (gap / radicand.sqrt()).abs();
    if raw > T::one() {
        (T::one(), true)
    } else {
        (raw, false)
    }
}

pub fn sigma_from_scenario<T: Real>(params: &ScenarioParams<T>) -> Result<SpatialCorrelation<T>> {
    params.validate()?;
    let d = effective_distance(params);
    let phi12 = correlation_entry(d, params.wavelength(), params.model)?;
    let (sigma, clamped) = sigma_from_phi(phi12);
    Ok(SpatialCorrelation {
        sigma,
        phi12,
        d,
        clamped,
    })
}

/// One joint realization of the PA and RA channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDraw<T> {
    pub h_hat: Complex<T>,
    pub h: Complex<T>,
    pub g_hat: T,
    pub g: T,
}

impl<T: Real> ChannelDraw<T> {
    /// Builds a draw from the PA channel and the innovation `q`.
    pub fn compose(sigma: T, h_hat: Complex<T>, q: Complex<T>) -> Self {
        let h = h_hat * (T::one() - sigma * sigma).sqrt() + q * sigma;
        Self {
            h_hat,
            h,
            g_hat: h_hat.norm_sqr(),
            g: h.norm_sqr(),
        }
    }

    /// A draw with prescribed gains; the coefficients are real and positive.
    pub fn from_gains(g_hat: T, g: T) -> Self {
        Self {
            h_hat: Complex::new(g_hat.sqrt(), T::zero()),
            h: Complex::new(g.sqrt(), T::zero()),
            g_hat,
            g,
        }
    }
}

/// Uniform in `[0, 1)` with 53 random bits.
#[inline]
pub fn uniform01<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `CN(0, 1)` sample by the Box–Muller transform: two uniforms give a
/// radius `√(-ln u₁)` (unit total variance) and a phase `2π u₂`.
///
/// This sampler is fixed; the Monte Carlo golden values depend on it.
#[inline]
pub fn standard_complex_normal<R: RngCore + ?Sized>(rng: &mut R) -> Complex<f64> {
    let u1 = 1.0 - uniform01(rng);
    let u2 = uniform01(rng);
    let radius = (-u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    Complex::new(radius * c, radius * s)
}

/// Draws `ĥ` then `q` from `rng` and composes `h`.
pub fn sample_joint<T: Real, R: RngCore + ?Sized>(sigma: T, rng: &mut R) -> Result<ChannelDraw<T>> {
    if !(sigma >= T::zero() && sigma <= T::one()) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    let conv = |z: Complex<f64>| Complex::new(T::lit(z.re), T::lit(z.im));
    let h_hat = conv(standard_complex_normal(rng));
    let q = conv(standard_complex_normal(rng));
    Ok(ChannelDraw::compose(sigma, h_hat, q))
}

fn check_conditional<T: Real>(x: T, g_hat: T, sigma: T) -> Result<()> {
    if sigma == T::zero() {
        return Err(Error::Degenerate);
    }
    if !(sigma > T::zero() && sigma <= T::one()) {
        return Err(Error::InvalidParameter(format!("sigma must lie in (0, 1], got {sigma}")));
    }
    if !(x >= T::zero()) || !(g_hat >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "gains must be >= 0, got x = {x}, g_hat = {g_hat}"
        )));
    }
    Ok(())
}

/// Marcum arguments `(√(2(1-σ²)ĝ)/σ, √(2x)/σ)` of the conditional law of `g`.
fn marcum_arguments<T: Real>(x: T, g_hat: T, sigma: T) -> (T, T) {
    let two = T::lit(2.0);
    let a = (two * (T::one() - sigma * sigma) * g_hat).sqrt() / sigma;
    let b = (two * x).sqrt() / sigma;
    (a, b)
}

/// `P(g > x | ĝ) = Q1(√(2(1-σ²)ĝ)/σ, √(2x)/σ)`. For `σ = 0` the event
/// `g >= x` is decided by `ĝ` itself.
pub fn conditional_gain_tail<T: Real>(x: T, g_hat: T, sigma: T) -> Result<T> {
    if sigma == T::zero() {
        return Ok(if g_hat >= x { T::one() } else { T::zero() });
    }
    check_conditional(x, g_hat, sigma)?;
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let (a, b) = marcum_arguments(x, g_hat, sigma);
    marcum_q1(a, b)
}

/// Conditional CDF `F_{g|ĝ}(x) = 1 - Q1(√(2(1-σ²)ĝ)/σ, √(2x)/σ)`.
pub fn conditional_gain_cdf<T: Real>(x: T, g_hat: T, sigma: T) -> Result<T> {
    check_conditional(x, g_hat, sigma)?;
    if x.is_infinite() {
        return Ok(T::one());
    }
    let (a, b) = marcum_arguments(x, g_hat, sigma);
    Ok(T::one() - marcum_q1(a, b)?)
}

/// Conditional density of `g` given `ĝ`, a scaled non-central chi-squared
/// with two degrees of freedom, evaluated in log space:
/// `ln f = -2 ln σ - (x + (1-σ²)ĝ)/σ² + z + ln(e^{-z} I0(z))`,
/// `z = 2√(x(1-σ²)ĝ)/σ²`.
pub fn conditional_gain_pdf<T: Real>(x: T, g_hat: T, sigma: T) -> Result<T> {
    check_conditional(x, g_hat, sigma)?;
    if x.is_infinite() {
        return Ok(T::zero());
    }
    let s2 = sigma * sigma;
    let shrink = T::one() - s2;
    let z = T::lit(2.0) * (x * shrink * g_hat).sqrt() / s2;
    let log_f = -T::lit(2.0) * sigma.ln() - (x + shrink * g_hat) / s2 + z + bessel_i0_scaled(z)?.ln();
    Ok(log_f.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, QuadOptions};
    use rand_chacha::ChaCha8Rng;
    use rand_core::SeedableRng;

    fn reference(v_kmh: f64) -> ScenarioParams<f64> {
        ScenarioParams::reference(v_kmh / 3.6, 100.0)
    }

    #[test]
    fn distance_examples() {
        let mut p = reference(0.0);
        assert_eq!(effective_distance(&p), p.da);
        p.v = p.matched_speed();
        assert!(effective_distance(&p) < 1e-15);
        // 33.56 m/s is within a millimetre of the matched speed.
        p.v = 33.56;
        assert!(effective_distance(&p) < 1e-3);
        assert!((p.matched_speed() * 3.6 - 120.8).abs() < 0.05);
    }

    #[test]
    fn distance_piecewise_linear() {
        let p = reference(0.0);
        let vm = p.matched_speed();
        for i in 0..50 {
            let dv = i as f64 * 0.3;
            let below = ScenarioParams { v: vm - dv, ..p };
            let above = ScenarioParams { v: vm + dv, ..p };
            assert!((effective_distance(&below) - dv * p.delta).abs() < 1e-12);
            assert!((effective_distance(&above) - dv * p.delta).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_examples() {
        let lambda = 0.1;
        for model in CorrelationModel::ALL {
            assert_eq!(correlation_entry(0.0, lambda, model).unwrap(), 1.0);
        }
        let d_zero = 2.404825557695773 * lambda / std::f64::consts::TAU;
        assert!(correlation_entry(d_zero, lambda, CorrelationModel::Jakes).unwrap().abs() < 1e-10);
        let g = correlation_entry(lambda / std::f64::consts::PI, lambda, CorrelationModel::GaussianScattering).unwrap();
        assert!((g - (-1.0f64).exp()).abs() < 1e-15);
        let r = correlation_entry(lambda / 4.0, lambda, CorrelationModel::RectangularScattering).unwrap();
        assert!((r - 2.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(correlation_entry(-1.0, lambda, CorrelationModel::Jakes).is_err());
    }

    #[test]
    fn sigma_mapping() {
        assert_eq!(sigma_from_phi(1.0), (0.0, false));
        assert_eq!(sigma_from_phi(0.0), (1.0, false));
        let (s, clamped) = sigma_from_phi(-0.3);
        assert_eq!(s, 1.0);
        assert!(clamped);
        let (s, clamped) = sigma_from_phi(0.5);
        assert!((s - 0.5 / 0.75f64.sqrt()).abs() < 1e-15 && !clamped);
    }

    #[test]
    fn sigma_at_100_kmh_golden() {
        // Independent evaluation (scipy J0 and the sigma map).
        let c = sigma_from_scenario(&reference(100.0)).unwrap();
        assert!((c.d - 0.028_905_397_305_140_967).abs() < 1e-12, "{}", c.d);
        assert!((c.phi12 - GOLDEN_PHI12_100KMH).abs() < 1e-12, "{}", c.phi12);
        assert!((c.sigma - GOLDEN_SIGMA_100KMH).abs() < 1e-12, "{}", c.sigma);
        assert!(!c.clamped);
    }

    const GOLDEN_PHI12_100KMH: f64 = 0.441_939_023_400_277_74;
    const GOLDEN_SIGMA_100KMH: f64 = 0.642_949_974_260_030_5;

    #[test]
    fn sigma_continuous_in_speed() {
        let mut prev = sigma_from_scenario(&reference(100.0)).unwrap();
        for i in 1..400 {
            let v = 100.0 + i as f64 * 0.1;
            let c = sigma_from_scenario(&reference(v)).unwrap();
            if !c.clamped && !prev.clamped && c.phi12 > 0.0 {
                assert!((c.sigma - prev.sigma).abs() < 0.02, "jump at {v} km/h");
            }
            prev = c;
        }
    }

    #[test]
    fn sigma_override_bypasses_kinematics() {
        let p = reference(60.0).with_sigma(0.1);
        assert_eq!(p.resolve_sigma().unwrap().sigma, 0.1);
        assert!(reference(60.0).with_sigma(1.5).resolve_sigma().is_err());
    }

    #[test]
    fn sample_limits() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let d = sample_joint(0.0, &mut rng).unwrap();
            assert_eq!(d.h, d.h_hat);
            assert_eq!(d.g, d.g_hat);
        }
        // σ = 1: h is the innovation alone.
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let d = sample_joint(1.0, &mut a).unwrap();
        let _ = standard_complex_normal(&mut b);
        let q = standard_complex_normal(&mut b);
        assert_eq!(d.h, q);
        assert!(sample_joint(1.1, &mut a).is_err());
    }

    #[test]
    fn sample_moments() {
        let sigma = 0.5;
        let n = 1_000_000;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut sg, mut sgh, mut sgg, mut sg2, mut sgh2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let d = sample_joint(sigma, &mut rng).unwrap();
            sg += d.g;
            sgh += d.g_hat;
            sgg += d.g * d.g_hat;
            sg2 += d.g * d.g;
            sgh2 += d.g_hat * d.g_hat;
        }
        let nf = n as f64;
        let (mg, mgh) = (sg / nf, sgh / nf);
        assert!((mg - 1.0).abs() < 0.01);
        assert!((mgh - 1.0).abs() < 0.01);
        // unit-mean exponentials: mean within 3 standard errors (sd = 1)
        assert!((mg - 1.0).abs() < 3.0 / nf.sqrt());
        assert!((mgh - 1.0).abs() < 3.0 / nf.sqrt());
        let cov = sgg / nf - mg * mgh;
        let corr = cov / ((sg2 / nf - mg * mg) * (sgh2 / nf - mgh * mgh)).sqrt();
        // corr(ĝ, g) = |ρ|² with ρ = √(1-σ²)
        assert!((corr - 0.75).abs() < 0.01, "{corr}");
    }

    #[test]
    fn conditional_cdf_examples() {
        assert_eq!(conditional_gain_cdf(0.0, 1.0, 0.3).unwrap(), 0.0);
        assert_eq!(conditional_gain_cdf(f64::INFINITY, 1.0, 0.3).unwrap(), 1.0);
        assert_eq!(conditional_gain_cdf(1.0, 1.0, 0.0), Err(Error::Degenerate));

        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 10_000 };
        let quad = integrate(|t: f64| conditional_gain_pdf(t, 1.0, 0.3).unwrap(), 0.0, 1.0, &opts)
            .unwrap()
            .value;
        let cdf = conditional_gain_cdf(1.0, 1.0, 0.3).unwrap();
        assert!((cdf - quad).abs() < 1e-8, "{cdf} vs {quad}");
    }

    #[test]
    fn conditional_pdf_normalized_and_cdf_monotone() {
        let opts = QuadOptions { abs_tol: 1e-11, rel_tol: 1e-11, max_intervals: 10_000 };
        for &(gh, s) in &[(0.2_f64, 0.1), (1.0, 0.5), (3.0, 0.9), (0.05, 1.0)] {
            let total = integrate(|t: f64| conditional_gain_pdf(t, gh, s).unwrap(), 0.0, 60.0, &opts)
                .unwrap()
                .value;
            assert!((total - 1.0).abs() < 1e-8, "({gh},{s}) -> {total}");
            let mut prev = 0.0;
            for i in 0..200 {
                let c = conditional_gain_cdf(i as f64 * 0.05, gh, s).unwrap();
                assert!(c >= prev - 1e-15);
                prev = c;
            }
        }
    }

    #[test]
    fn tail_degenerates_to_indicator_at_zero_sigma() {
        assert_eq!(conditional_gain_tail(1.0, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(conditional_gain_tail(1.0, 0.9, 0.0).unwrap(), 0.0);
        let t = conditional_gain_tail(0.7_f64, 0.7, 0.2).unwrap();
        let c = conditional_gain_cdf(0.7, 0.7, 0.2).unwrap();
        assert!((t + c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn model_parsing() {
        for m in CorrelationModel::ALL {
            assert_eq!(m.as_str().parse::<CorrelationModel>().unwrap(), m);
        }
        assert!("uniform".parse::<CorrelationModel>().is_err());
    }
}
