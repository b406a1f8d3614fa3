//! Transmission rules of the PA-HARQ scheme and the three benchmarks.
//!
//! Round 1 goes to the PA at the fixed rate `R = K/L`. On NACK the base
//! station knows `ĝ` and, if the delay budget allows
//! (`θ_min/p <= ĝ <= θ/p`), sends `L(ĝ) = K/ln(1+ĝp) - L` incremental
//! redundancy symbols to the RA, which decodes iff `g >= ĝ`.
//!
//! Rates are in nats per channel use. The delivered rate is the reward per
//! realization; averages are plain expectations of it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelDraw;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default payload per codeword, used only for block-length reporting.
pub const DEFAULT_PAYLOAD_NATS: f64 = 100.0;

/// Initial rate with the thresholds derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePolicy<T> {
    /// Initial rate `R`.
    pub rate: T,
    /// Delay-imposed floor `R_min = K/L_max`.
    pub rate_min: T,
    /// Payload `K` in nats.
    pub payload: T,
    /// First-round length `L = K/R`.
    pub first_len: T,
    /// `θ = e^R - 1`.
    pub theta: T,
    /// `θ_min = e^{R_min} - 1`.
    pub theta_min: T,
}

impl<T: Real> RatePolicy<T> {
    pub fn new(rate: T, rate_min: T) -> Result<Self> {
        Self::with_payload(rate, rate_min, T::lit(DEFAULT_PAYLOAD_NATS))
    }

    pub fn with_payload(rate: T, rate_min: T, payload: T) -> Result<Self> {
        if !(rate_min > T::zero() && rate_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("R_min must be > 0, got {rate_min}")));
        }
        if !(rate >= rate_min && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "R must satisfy R >= R_min = {rate_min}, got {rate}"
            )));
        }
        if !(payload > T::zero() && payload.is_finite()) {
            return Err(Error::InvalidParameter(format!("K must be > 0, got {payload}")));
        }
        Ok(Self {
            rate,
            rate_min,
            payload,
            first_len: payload / rate,
            theta: rate.exp_m1(),
            theta_min: rate_min.exp_m1(),
        })
    }

    /// Same floor and payload, different initial rate.
    pub fn at_rate(&self, rate: T) -> Result<Self> {
        Self::with_payload(rate, self.rate_min, self.payload)
    }

    /// Delay budget `L_max = K/R_min`.
    pub fn max_len(&self) -> T {
        self.payload / self.rate_min
    }

    /// Gain above which round 1 decodes: `θ/p`.
    pub fn first_round_threshold(&self, power: T) -> T {
        self.theta / power
    }

    /// Gain below which the delay budget cannot be met: `θ_min/p`.
    pub fn budget_threshold(&self, power: T) -> T {
        self.theta_min / power
    }

    /// `θ_min/p <= ĝ <= θ/p`.
    pub fn in_retransmission_regime(&self, g_hat: T, power: T) -> bool {
        self.budget_threshold(power) <= g_hat && g_hat <= self.first_round_threshold(power)
    }
}

/// How a transmission ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    /// Decoded after the first round.
    FirstRound,
    /// Decoded after the retransmission.
    SecondRound,
    /// No retransmission because the delay budget cannot be met.
    Skipped,
    /// Not decoded.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome<T> {
    pub termination: Termination,
    /// 1 or 2 rounds on air; 0 when the retransmission is skipped.
    pub rounds_used: u8,
    pub delivered_rate: T,
    /// Second-round length in channel uses; zero if no second round.
    pub second_len: T,
}

impl<T: Real> RoundOutcome<T> {
    fn first(rate: T) -> Self {
        Self {
            termination: Termination::FirstRound,
            rounds_used: 1,
            delivered_rate: rate,
            second_len: T::zero(),
        }
    }

    fn skipped() -> Self {
        Self {
            termination: Termination::Skipped,
            rounds_used: 0,
            delivered_rate: T::zero(),
            second_len: T::zero(),
        }
    }

    fn failed(rounds_used: u8) -> Self {
        Self {
            termination: Termination::Failed,
            rounds_used,
            delivered_rate: T::zero(),
            second_len: T::zero(),
        }
    }
}

/// Redundancy length `L(ĝ) = K/ln(1+ĝp) - L` in the retransmission regime.
pub fn second_round_length<T: Real>(g_hat: T, policy: &RatePolicy<T>, power: T) -> Result<T> {
    if !policy.in_retransmission_regime(g_hat, power) {
        return Err(Error::Contract(format!(
            "second_round_length needs theta_min/p <= g_hat <= theta/p, got g_hat = {g_hat} outside [{}, {}]",
            policy.budget_threshold(power),
            policy.first_round_threshold(power)
        )));
    }
    let adapted = (g_hat * power).ln_1p();
    Ok((policy.payload / adapted - policy.first_len).max(T::zero()))
}

/// Full PA-HARQ outcome for one realization.
pub fn pa_harq_outcome<T: Real>(draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> RoundOutcome<T> {
    let g_hat = draw.g_hat;
    if g_hat > policy.first_round_threshold(power) {
        return RoundOutcome::first(policy.rate);
    }
    if g_hat < policy.budget_threshold(power) {
        return RoundOutcome::skipped();
    }
    let adapted = (g_hat * power).ln_1p();
    let second_len = (policy.payload / adapted - policy.first_len).max(T::zero());
    if draw.g >= g_hat {
        RoundOutcome {
            termination: Termination::SecondRound,
            rounds_used: 2,
            delivered_rate: adapted,
            second_len,
        }
    } else {
        RoundOutcome {
            termination: Termination::Failed,
            rounds_used: 2,
            delivered_rate: T::zero(),
            second_len,
        }
    }
}

/// `R·1{ĝ > θ/p} + ln(1+ĝp)·1{θ_min/p <= ĝ <= θ/p, g >= ĝ}`.
pub fn pa_harq_rate<T: Real>(draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> T {
    pa_harq_outcome(draw, policy, power).delivered_rate
}

/// Basic ARQ: the same codeword is resent without combining, so a successful
/// second round delivers `R/2`.
pub fn basic_arq_outcome<T: Real>(draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> RoundOutcome<T> {
    let g_hat = draw.g_hat;
    if g_hat > policy.first_round_threshold(power) {
        return RoundOutcome::first(policy.rate);
    }
    if g_hat < policy.budget_threshold(power) {
        return RoundOutcome::skipped();
    }
    if draw.g >= g_hat {
        RoundOutcome {
            termination: Termination::SecondRound,
            rounds_used: 2,
            delivered_rate: policy.rate / T::lit(2.0),
            second_len: policy.first_len,
        }
    } else {
        RoundOutcome {
            termination: Termination::Failed,
            rounds_used: 2,
            delivered_rate: T::zero(),
            second_len: policy.first_len,
        }
    }
}

/// `R·1{ĝ > θ/p} + 0.5R·1{θ_min/p <= ĝ <= θ/p, g >= ĝ}`.
pub fn basic_arq_rate<T: Real>(draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> T {
    basic_arq_outcome(draw, policy, power).delivered_rate
}

/// MRC of two simultaneous copies: `0.5R·1{ln(1+(g+ĝ)p) > R}`.
pub fn diversity_rate<T: Real>(draw: &ChannelDraw<T>, rate: T, power: T) -> T {
    if ((draw.g + draw.g_hat) * power).ln_1p() > rate {
        rate / T::lit(2.0)
    } else {
        T::zero()
    }
}

/// Single shot, no feedback: `R·1{ĝ > θ/p}`.
pub fn open_loop_rate<T: Real>(draw: &ChannelDraw<T>, rate: T, power: T) -> T {
    if draw.g_hat > rate.exp_m1() / power {
        rate
    } else {
        T::zero()
    }
}

/// Transmission scheme whose per-realization reward is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    PaHarq,
    BasicArq,
    OpenLoop,
    Diversity,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::PaHarq, Scheme::BasicArq, Scheme::OpenLoop, Scheme::Diversity];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::PaHarq => "pa-harq",
            Scheme::BasicArq => "basic-arq",
            Scheme::OpenLoop => "open-loop",
            Scheme::Diversity => "diversity",
        }
    }

    /// Per-realization outcome. Open-loop and diversity are single-shot, so
    /// they end in `FirstRound` or `Failed`.
    pub fn outcome<T: Real>(self, draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> RoundOutcome<T> {
        match self {
            Scheme::PaHarq => pa_harq_outcome(draw, policy, power),
            Scheme::BasicArq => basic_arq_outcome(draw, policy, power),
            Scheme::OpenLoop => {
                let r = open_loop_rate(draw, policy.rate, power);
                if r > T::zero() {
                    RoundOutcome::first(r)
                } else {
                    RoundOutcome::failed(1)
                }
            }
            Scheme::Diversity => {
                let r = diversity_rate(draw, policy.rate, power);
                if r > T::zero() {
                    RoundOutcome::first(r)
                } else {
                    RoundOutcome::failed(1)
                }
            }
        }
    }

    pub fn rate<T: Real>(self, draw: &ChannelDraw<T>, policy: &RatePolicy<T>, power: T) -> T {
        match self {
            Scheme::PaHarq => pa_harq_rate(draw, policy, power),
            Scheme::BasicArq => basic_arq_rate(draw, policy, power),
            Scheme::OpenLoop => open_loop_rate(draw, policy.rate, power),
            Scheme::Diversity => diversity_rate(draw, policy.rate, power),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown scheme '{s}' (expected pa-harq, basic-arq, open-loop or diversity)"
                ))
            })
    }
}
