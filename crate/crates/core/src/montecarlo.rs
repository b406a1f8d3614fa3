//! Seeded, parallel Monte Carlo estimates of the average rate.
//!
//! Trials are split into chunks of `chunk_size`. Chunk `i` draws from a
//! ChaCha8 stream keyed by the point seed with stream id `i`, so the result
//! does not depend on how rayon schedules chunks. Per-chunk sums are
//! Neumaier-compensated and combined in chunk order.
//!
//! The point seed mixes `master_seed` with a hash of the channel point
//! (scenario parameters and resolved `σ`). Different rates and schemes at
//! the same channel point therefore see the same draws, which keeps
//! Monte Carlo objectives smooth in `R`, and reordering a sweep grid does
//! not change any value.

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{standard_complex_normal, ChannelDraw, ScenarioParams};
use crate::error::{Error, Result};
use crate::protocol::{RatePolicy, Scheme, Termination};

pub const DEFAULT_CHUNK_SIZE: u64 = 1 << 16;

/// Largest trial count whose sums stay exact in the accumulator's integer range.
pub const MAX_TRIALS: u64 = 1 << 53;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub trials: u64,
    pub master_seed: u64,
    pub chunk_size: u64,
    pub scheme: Scheme,
}

impl McConfig {
    pub fn new(trials: u64, master_seed: u64, scheme: Scheme) -> Self {
        Self {
            trials,
            master_seed,
            chunk_size: DEFAULT_CHUNK_SIZE,
            scheme,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn with_trials(self, trials: u64) -> Self {
        Self { trials, ..self }
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be > 0".into()));
        }
        if self.trials > MAX_TRIALS {
            return Err(Error::Numeric(format!(
                "{} trials exceed the accumulator limit of 2^53",
                self.trials
            )));
        }
        if self.chunk_size == 0 {
            return Err(Error::InvalidParameter("chunk_size must be > 0".into()));
        }
        Ok(())
    }
}

/// Fractions of trials by how they ended.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RoundShares {
    pub first_round: f64,
    pub second_round: f64,
    pub skipped: f64,
    pub failed: f64,
}

impl RoundShares {
    pub fn total(&self) -> f64 {
        self.first_round + self.second_round + self.skipped + self.failed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub shares: RoundShares,
    /// Mismatch factor the draws were generated with.
    pub sigma: f64,
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct ChunkTally {
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
    counts: [u64; 4],
}

fn termination_slot(t: Termination) -> usize {
    match t {
        Termination::FirstRound => 0,
        Termination::SecondRound => 1,
        Termination::Skipped => 2,
        Termination::Failed => 3,
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn canonical_bits(x: f64) -> u64 {
    // +0 and -0 describe the same point.
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

/// Seed of the channel point: `master_seed` folded with the bit patterns of
/// every field that affects the draws or the reward.
pub fn point_seed(master_seed: u64, params: &ScenarioParams<f64>, sigma: f64) -> u64 {
    let words = [
        canonical_bits(params.delta),
        canonical_bits(params.fc),
        canonical_bits(params.da),
        canonical_bits(params.v),
        canonical_bits(params.power),
        params.model as u64,
        canonical_bits(sigma),
    ];
    words
        .iter()
        .fold(splitmix64(master_seed), |h, &w| splitmix64(h ^ splitmix64(w)))
}

fn run_chunk(seed: u64, index: u64, len: u64, sigma: f64, power: f64, policy: &RatePolicy<f64>, scheme: Scheme) -> ChunkTally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mix = (1.0 - sigma * sigma).sqrt();
    let mut tally = ChunkTally::default();
    for _ in 0..len {
        let h_hat = standard_complex_normal(&mut rng);
        let q = standard_complex_normal(&mut rng);
        let h = h_hat * mix + q * sigma;
        let draw = ChannelDraw {
            h_hat,
            h,
            g_hat: h_hat.norm_sqr(),
            g: h.norm_sqr(),
        };
        let out = scheme.outcome(&draw, policy, power);
        tally.sum.add(out.delivered_rate);
        tally.sum_sq.add(out.delivered_rate * out.delivered_rate);
        tally.counts[termination_slot(out.termination)] += 1;
    }
    tally
}

/// Estimate with `σ` given directly; the stream seed is `seed` itself.
pub fn estimate_with_seed(seed: u64, sigma: f64, power: f64, policy: &RatePolicy<f64>, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&sigma) {
        return Err(Error::InvalidParameter(format!("sigma must lie in [0, 1], got {sigma}")));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::InvalidParameter(format!("power must be > 0, got {power}")));
    }
    let n_chunks = cfg.trials.div_ceil(cfg.chunk_size);
    let tallies: Vec<ChunkTally> = (0..n_chunks)
        .into_par_iter()
        .map(|i| {
            let start = i * cfg.chunk_size;
            let len = cfg.chunk_size.min(cfg.trials - start);
            run_chunk(seed, i, len, sigma, power, policy, cfg.scheme)
        })
        .collect();

    let mut total = ChunkTally::default();
    for t in &tallies {
        total.sum.merge(&t.sum);
        total.sum_sq.merge(&t.sum_sq);
        for (acc, c) in total.counts.iter_mut().zip(t.counts) {
            *acc += c;
        }
    }
    let n = cfg.trials as f64;
    let mean = total.sum.value() / n;
    let var = if cfg.trials > 1 {
        ((total.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    if !mean.is_finite() || !var.is_finite() {
        return Err(Error::Numeric(format!("non-finite Monte Carlo moments (mean {mean}, variance {var})")));
    }
    let share = |c: u64| c as f64 / n;
    Ok(McEstimate {
        mean: mean.max(0.0),
        std_error: (var / n).sqrt(),
        trials: cfg.trials,
        shares: RoundShares {
            first_round: share(total.counts[0]),
            second_round: share(total.counts[1]),
            skipped: share(total.counts[2]),
            failed: share(total.counts[3]),
        },
        sigma,
    })
}

/// Sample mean of the scheme's rate law over `cfg.trials` joint draws.
pub fn estimate(params: &ScenarioParams<f64>, policy: &RatePolicy<f64>, cfg: &McConfig) -> Result<McEstimate> {
    let sigma = params.resolve_sigma()?.sigma;
    let seed = point_seed(cfg.master_seed, params, sigma);
    estimate_with_seed(seed, sigma, params.power, policy, cfg)
}

/// One grid point of a sweep with its outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub params: ScenarioParams<f64>,
    pub policy: RatePolicy<f64>,
    pub result: Result<McEstimate>,
}

/// Estimates over the cartesian product of the grids, params-major. Errors
/// are kept per point.
pub fn sweep(params_grid: &[ScenarioParams<f64>], policy_grid: &[RatePolicy<f64>], cfg: &McConfig) -> Result<Vec<SweepPoint>> {
    if params_grid.is_empty() || policy_grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grids must be non-empty".into()));
    }
    let mut out = Vec::with_capacity(params_grid.len() * policy_grid.len());
    for params in params_grid {
        for policy in policy_grid {
            out.push(SweepPoint {
                params: *params,
                policy: *policy,
                result: estimate(params, policy, cfg),
            });
        }
    }
    Ok(out)
}
