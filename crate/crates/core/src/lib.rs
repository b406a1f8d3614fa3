//! Average rate of predictor-antenna links with delay-limited HARQ.
//!
//! The numerical core (`specfun`, `quad`, `channel`, `protocol`, `analytic`,
//! `optimize`) is generic over [`Real`]; the aliases below fix it to `f64`
//! or `f32`. Monte Carlo and the CLI run in `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod channel;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod optimize;
pub mod protocol;
pub mod quad;
pub mod scalar;
pub mod specfun;

pub use channel::CorrelationModel;
pub use error::{Error, Result};
pub use montecarlo::{McConfig, McEstimate};
pub use protocol::Scheme;
pub use scalar::Real;

pub type ScenarioParams = channel::ScenarioParams<f64>;
pub type SpatialCorrelation = channel::SpatialCorrelation<f64>;
pub type ChannelDraw = channel::ChannelDraw<f64>;
pub type RatePolicy = protocol::RatePolicy<f64>;
pub type RoundOutcome = protocol::RoundOutcome<f64>;
pub type LinearLogApprox = analytic::LinearLogApprox<f64>;
pub type EvalResult = analytic::EvalResult<f64>;
pub type OptResult = optimize::OptResult<f64>;

pub type ScenarioParamsF32 = channel::ScenarioParams<f32>;
pub type RatePolicyF32 = protocol::RatePolicy<f32>;
pub type EvalResultF32 = analytic::EvalResult<f32>;
pub type OptResultF32 = optimize::OptResult<f32>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aliases_instantiate_both_widths() {
        let p: RatePolicy = RatePolicy::new(2.5, 2.0).unwrap();
        let q: RatePolicyF32 = RatePolicyF32::new(2.5, 2.0).unwrap();
        let a: EvalResult = analytic::eta_closed_form(&p, 0.1, 100.0).unwrap();
        let b: EvalResultF32 = analytic::eta_closed_form(&q, 0.1, 100.0).unwrap();
        assert!((a.eta - b.eta as f64).abs() < 1e-4);
        let s: ScenarioParams = ScenarioParams::reference(100.0 / 3.6, 100.0);
        let t: ScenarioParamsF32 = ScenarioParamsF32::reference(100.0 / 3.6, 100.0);
        let (x, y) = (s.resolve_sigma().unwrap().sigma, t.resolve_sigma().unwrap().sigma);
        assert!((x - y as f64).abs() < 1e-4);
    }
}
