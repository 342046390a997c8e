use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use photocount::estimator::{bootstrap_std_error, g_from_histogram, EstimatorMode};
use photocount::histogram::CountHistogram;
use photocount::{Histogram, Source};

/// Draws `n` photon numbers straight from the source (no detector) and
/// tallies them as a histogram.
pub fn sample_source_histogram(spec: &Source, n: u64, seed: u64) -> Histogram {
    let sampler = spec.sampler().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tallies: BTreeMap<u32, u64> = BTreeMap::new();
    for _ in 0..n {
        *tallies.entry(sampler.sample(&mut rng) as u32).or_insert(0) += 1;
    }
    CountHistogram::raw(tallies, n).unwrap()
}

/// Asserts that the histogram's `g^(l)` (uncorrected, as for direct photon
/// counts) sits within `nsig` bootstrap standard errors of `expected`.
pub fn assert_g_within_sigma(hist: &Histogram, l: u32, expected: f64, nsig: f64, label: &str) {
    let est = g_from_histogram(hist, l, 1, EstimatorMode::LargeM).unwrap();
    let sigma = bootstrap_std_error(hist, l, 1, EstimatorMode::LargeM, 400, 7).unwrap();
    let z = (est.g - expected) / sigma;
    assert!(
        z.abs() < nsig,
        "{label}: g^{l} = {:.6} vs {expected:.6} ({z:+.2} sigma, sigma = {sigma:.2e})",
        est.g
    );
}

/// Binomial standard error of a rate estimated from `n` trials.
pub fn rate_sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
