//! Average rate in closed form and by quadrature.
//!
//! The exact PA-HARQ average is
//!
//! ```text
//! η(R) = R e^{-θ/p} + ∫_{θ_min/p}^{θ/p} e^{-x} ln(1+px) Q1(√(2(1-σ²)x)/σ, √(2x)/σ) dx
//! ```
//!
//! and the closed form replaces the Marcum factor by its small-σ expansion
//! and `ln(1+px)` by its tangent at the midpoint of the regime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::conditional_gain_tail;
use crate::error::{domain, Error, Result};
use crate::protocol::RatePolicy;
use crate::quad::{integrate, QuadOptions};
use crate::scalar::Real;
use crate::specfun::{erf, exp_integral_e1_scaled, lambert_w0};

/// Tangent `kx + b` to `ln(1+px)` at `x0 = (θ+θ_min)/(2p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearLogApprox<T> {
    pub k: T,
    pub b: T,
    pub x0: T,
}

impl<T: Real> LinearLogApprox<T> {
    pub fn new(theta: T, theta_min: T, power: T) -> Self {
        let two = T::lit(2.0);
        let mid = (theta + theta_min) / two;
        let k = two * power / (theta + theta_min + two);
        let x0 = mid / power;
        Self {
            k,
            b: -x0 * k + mid.ln_1p(),
            x0,
        }
    }

    pub fn eval(&self, x: T) -> T {
        self.k * x + self.b
    }
}

/// `F1(x) = -½ e^{-x} (ln(px+1) + E1(x+1/p) e^{x+1/p})`, an antiderivative
/// of `½ e^{-x} ln(1+px)`.
pub fn f1<T: Real>(x: T, power: T) -> Result<T> {
    if !(x >= T::zero()) {
        return domain("f1", x.to_f64_lossy(), ">= 0");
    }
    if !(power > T::zero() && power.is_finite()) {
        return domain("f1", power.to_f64_lossy(), "power > 0");
    }
    if x.is_infinite() {
        return Ok(T::zero());
    }
    // e^{-x} E1(y) e^{y} with y = x + 1/p, written with the scaled E1.
    let e1s = exp_integral_e1_scaled(x + power.recip())?;
    Ok(-T::lit(0.5) * (-x).exp() * ((power * x).ln_1p() + e1s))
}

/// `F2(x) = ½√π erf(√x) - √x e^{-x}`, an antiderivative of `√x e^{-x}`.
pub fn f2<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return domain("f2", x.to_f64_lossy(), ">= 0");
    }
    if x.is_infinite() {
        return Ok(T::PI().sqrt() / T::lit(2.0));
    }
    let s = x.sqrt();
    Ok(T::PI().sqrt() / T::lit(2.0) * erf(s)? - s * (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    ExactIntegral,
    MonteCarlo,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed-form",
            Method::ExactIntegral => "exact-integral",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An average rate together with the inputs it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult<T> {
    pub eta: T,
    pub method: Method,
    /// Zero for deterministic methods.
    pub std_error: T,
    pub policy: RatePolicy<T>,
    pub sigma: T,
    pub power: T,
}

fn check_inputs<T: Real>(sigma: T, power: T) -> Result<()> {
    if !(sigma >= T::zero() && sigma <= T::one()) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    if !(power > T::zero() && power.is_finite()) {
        return Err(Error::InvalidParameter(format!("power must be > 0, got {power}")));
    }
    Ok(())
}

fn deterministic<T: Real>(eta: T, method: Method, policy: &RatePolicy<T>, sigma: T, power: T) -> EvalResult<T> {
    EvalResult {
        eta: eta.max(T::zero()),
        method,
        std_error: T::zero(),
        policy: *policy,
        sigma,
        power,
    }
}

/// `∫_{θ_min/p}^{θ/p} e^{-x} w(x) P(g >= x | ĝ = x) dx`.
fn regime_integral<T: Real>(policy: &RatePolicy<T>, sigma: T, power: T, weight: impl Fn(T) -> T) -> Result<T> {
    let lo = policy.budget_threshold(power);
    let hi = policy.first_round_threshold(power);
    if hi <= lo {
        return Ok(T::zero());
    }
    let mut failure = None;
    let res = integrate(
        |x: T| match conditional_gain_tail(x, x, sigma) {
            Ok(q) => (-x).exp() * weight(x) * q,
            Err(e) => {
                failure.get_or_insert(e);
                T::zero()
            }
        },
        lo,
        hi,
        &QuadOptions::default(),
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(res.value)
}

/// Approximation-free PA-HARQ average by adaptive quadrature (abs_tol 1e-9).
///
/// At `σ = 0` the retransmission always succeeds and the Marcum factor is one.
pub fn eta_exact<T: Real>(policy: &RatePolicy<T>, sigma: T, power: T) -> Result<EvalResult<T>> {
    check_inputs(sigma, power)?;
    let first = policy.rate * (-policy.first_round_threshold(power)).exp();
    let second = regime_integral(policy, sigma, power, |x| (power * x).ln_1p())?;
    Ok(deterministic(first + second, Method::ExactIntegral, policy, sigma, power))
}

/// Closed-form approximation
///
/// ```text
/// R e^{-θ/p} + (F1(θ/p) - F1(θ_min/p))
///   + σ/(4√π) (k (F2(θ/p) - F2(θ_min/p)) + b√π (erf√(θ/p) - erf√(θ_min/p)))
/// ```
///
/// At `σ = 0` this is the `σ → 0⁺` limit, where the Marcum factor on the
/// diagonal tends to ½; it does not reproduce the perfect-CSIT value.
pub fn eta_closed_form<T: Real>(policy: &RatePolicy<T>, sigma: T, power: T) -> Result<EvalResult<T>> {
    check_inputs(sigma, power)?;
    let hi = policy.first_round_threshold(power);
    let lo = policy.budget_threshold(power);
    let first = policy.rate * (-hi).exp();
    if hi <= lo {
        return Ok(deterministic(first, Method::ClosedForm, policy, sigma, power));
    }
    let lin = LinearLogApprox::new(policy.theta, policy.theta_min, power);
    let sqrt_pi = T::PI().sqrt();
    let log_part = f1(hi, power)? - f1(lo, power)?;
    let sigma_part = sigma / (T::lit(4.0) * sqrt_pi)
        * (lin.k * (f2(hi)? - f2(lo)?) + lin.b * sqrt_pi * (erf(hi.sqrt())? - erf(lo.sqrt())?));
    Ok(deterministic(
        first + log_part + sigma_part,
        Method::ClosedForm,
        policy,
        sigma,
        power,
    ))
}

/// `R e^{-θ/p}`.
pub fn eta_open_loop<T: Real>(rate: T, power: T) -> T {
    rate * (-rate.exp_m1() / power).exp()
}

/// Unconstrained maximizer of [`eta_open_loop`], `W(p)`.
pub fn open_loop_optimal_rate<T: Real>(power: T) -> Result<T> {
    if !(power > T::zero()) {
        return domain("open_loop_optimal_rate", power.to_f64_lossy(), "power > 0");
    }
    lambert_w0(power)
}

/// Basic ARQ average by quadrature:
/// `R e^{-θ/p} + ½R ∫_{θ_min/p}^{θ/p} e^{-x} Q1(…) dx`.
pub fn eta_basic_arq_exact<T: Real>(policy: &RatePolicy<T>, sigma: T, power: T) -> Result<EvalResult<T>> {
    check_inputs(sigma, power)?;
    let first = policy.rate * (-policy.first_round_threshold(power)).exp();
    let half = policy.rate / T::lit(2.0);
    let second = regime_integral(policy, sigma, power, |_| half)?;
    Ok(deterministic(first + second, Method::ExactIntegral, policy, sigma, power))
}

/// Benchmark average with an analytic treatment. Only basic ARQ has one;
/// diversity is Monte Carlo only.
pub use self::eta_basic_arq_exact as eta_benchmarks_analytic;
