use paharq::channel::{conditional_gain_cdf, sample_joint};
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

const IN_BIN_SAMPLES: usize = 60_000;

fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn conditional_law_of_g_matches_sampler() {
    let g0 = 1.0_f64;
    for (k, sigma) in [0.1_f64, 0.5, 0.9].into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        let mut kept = Vec::with_capacity(IN_BIN_SAMPLES);
        while kept.len() < IN_BIN_SAMPLES {
            let d = sample_joint(sigma, &mut rng).unwrap();
            if (d.g_hat - g0).abs() <= 0.01 {
                kept.push(d.g);
            }
        }
        let ks = ks_statistic(kept, |x| conditional_gain_cdf(x, g0, sigma).unwrap());
        assert!(ks < 0.01, "sigma={sigma}: KS = {ks}");
    }
}

#[test]
fn probability_integral_transform_is_uniform() {
    // F(g | ĝ) at each draw's own ĝ is uniform on [0, 1].
    let sigma = 0.3;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let u: Vec<f64> = (0..100_000)
        .map(|_| {
            let d = sample_joint(sigma, &mut rng).unwrap();
            conditional_gain_cdf(d.g, d.g_hat, sigma).unwrap()
        })
        .collect();
    let ks = ks_statistic(u, |x| x.clamp(0.0, 1.0));
    assert!(ks < 0.01, "KS = {ks}");
}

#[test]
fn marginal_gains_are_unit_exponential() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200_000;
    let (mut gh, mut g) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let d = sample_joint(0.6, &mut rng).unwrap();
        gh.push(d.g_hat);
        g.push(d.g);
    }
    let exp_cdf = |x: f64| 1.0 - (-x).exp();
    assert!(ks_statistic(gh, exp_cdf) < 0.005);
    assert!(ks_statistic(g, exp_cdf) < 0.005);
}
