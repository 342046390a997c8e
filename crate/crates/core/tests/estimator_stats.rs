//! End-to-end statistical checks of the correlation estimators: the
//! finite-pixel correction, bootstrap error calibration, and dark
//! subtraction on simulated data.

mod common;

use photocount::detector::{simulate_dark_histogram, simulate_histogram, CrosstalkMode};
use photocount::estimator::{
    bootstrap_std_error, bootstrap_subtracted_std_error, g_from_histogram, subtract_dark,
    EstimatorMode,
};
use photocount::histogram::CountHistogram;
use photocount::{Detector, Source};

#[test]
fn corrected_estimator_is_unbiased_for_coherent_light() {
    // Thinning, pixel merging, and Poissonian dark counts leave coherent
    // light Binomial(m, q) per pulse, for which the finite-pixel corrected
    // moment ratio is exactly 1 at every order.
    let config = Detector {
        crosstalk_mode: CrosstalkMode::Off,
        ..Detector::default()
    };
    let hist =
        simulate_histogram(&Source::Coherent { mu: 1.0 }, &config, 1_000_000, 401).unwrap();
    for l in [2u32, 3] {
        let est = g_from_histogram(&hist, l, config.pixels, EstimatorMode::ExactM).unwrap();
        let sigma =
            bootstrap_std_error(&hist, l, config.pixels, EstimatorMode::ExactM, 400, 402)
                .unwrap();
        let z = (est.g - 1.0) / sigma;
        assert!(z.abs() < 4.0, "order {l}: g = {} ({z:+.2} sigma)", est.g);
    }
}

#[test]
fn uncorrected_estimator_shows_the_finite_pixel_deficit() {
    // Same pipeline, no correction: the ratio concentrates at (m-1)/m. The
    // estimator's error scales as 1/mu, so a bright beam is needed to
    // resolve the 0.25% deficit at this sample size.
    let config = Detector {
        crosstalk_mode: CrosstalkMode::Off,
        ..Detector::default()
    };
    let hist =
        simulate_histogram(&Source::Coherent { mu: 10.0 }, &config, 1_000_000, 403).unwrap();
    let est = g_from_histogram(&hist, 2, config.pixels, EstimatorMode::LargeM).unwrap();
    let sigma =
        bootstrap_std_error(&hist, 2, config.pixels, EstimatorMode::LargeM, 400, 404).unwrap();
    let deficit = 399.0 / 400.0;
    assert!((est.g - deficit).abs() < 4.0 * sigma, "g = {}, sigma = {sigma}", est.g);
    assert!(
        est.g + 3.0 * sigma < 1.0,
        "g = {} (sigma {sigma:.1e}) should sit clearly below 1",
        est.g
    );
}

#[test]
fn bootstrap_error_matches_the_delta_method() {
    // For a multinomial histogram the variance of g = F2 / mu^2 follows
    // from the gradient d g / d p_k = (k(k-1) mu - 2 F2 k) / mu^3 and the
    // multinomial covariance; the bootstrap must land within 15%.
    let counts: Vec<(u32, f64)> = vec![(0, 900.0), (1, 80.0), (2, 15.0), (3, 5.0)];
    let trials = 1000u64;
    let hist = CountHistogram::raw(
        counts.iter().map(|&(k, n)| (k, n as u64)).collect(),
        trials,
    )
    .unwrap();
    let mu: f64 = counts.iter().map(|&(k, n)| k as f64 * n).sum::<f64>() / trials as f64;
    let f2: f64 = counts
        .iter()
        .map(|&(k, n)| (k * k.saturating_sub(1)) as f64 * n)
        .sum::<f64>()
        / trials as f64;
    let grad = |k: f64| (k * (k - 1.0) * mu - 2.0 * f2 * k) / mu.powi(3);
    let mean_grad: f64 = counts
        .iter()
        .map(|&(k, n)| n / trials as f64 * grad(k as f64))
        .sum();
    let var: f64 = counts
        .iter()
        .map(|&(k, n)| n / trials as f64 * grad(k as f64).powi(2))
        .sum::<f64>()
        - mean_grad.powi(2);
    let delta_sigma = (var / trials as f64).sqrt();
    let bootstrap: f64 =
        bootstrap_std_error(&hist, 2, 400, EstimatorMode::LargeM, 4000, 405).unwrap();
    let rel = (bootstrap - delta_sigma).abs() / delta_sigma;
    assert!(
        rel < 0.15,
        "bootstrap {bootstrap:.5} vs delta method {delta_sigma:.5} ({:.1}% apart)",
        rel * 100.0
    );
}

#[test]
fn bootstrap_error_shrinks_as_root_sample_size() {
    let config = Detector::default();
    let source = Source::Coherent { mu: 1.0 };
    let small = simulate_histogram(&source, &config, 50_000, 406).unwrap();
    let large = simulate_histogram(&source, &config, 200_000, 406).unwrap();
    let sigma_small =
        bootstrap_std_error(&small, 2, 400, EstimatorMode::ExactM, 400, 407).unwrap();
    let sigma_large =
        bootstrap_std_error(&large, 2, 400, EstimatorMode::ExactM, 400, 407).unwrap();
    let ratio = sigma_large / sigma_small;
    // Quadrupling the sample should halve the error, up to bootstrap noise.
    assert!(
        (0.4..0.6).contains(&ratio),
        "sigma ratio {ratio} (sigmas {sigma_small:.2e}, {sigma_large:.2e})"
    );
}

#[test]
fn dark_subtraction_recovers_the_dark_free_estimate() {
    // A pair source bright enough to dominate its dark counts: subtracting
    // a dark run from a lit run must agree with a dark-free simulation of
    // the same seed within combined errors.
    let lit = Detector {
        crosstalk_mode: CrosstalkMode::Off,
        ..Detector::default()
    };
    let dark_free = Detector {
        dark_mean: 0.0,
        ..lit
    };
    let source = Source::DegenerateSqueezedSupermode { mu_pairs: 0.25 };
    let trials = 400_000u64;
    let signal = simulate_histogram(&source, &lit, trials, 408).unwrap();
    let dark = simulate_dark_histogram(&lit, 4 * trials, 409).unwrap();
    let subtracted = subtract_dark(&signal, &dark).unwrap();
    let est_sub = g_from_histogram(&subtracted, 2, 400, EstimatorMode::ExactM).unwrap();
    let sigma_sub = bootstrap_subtracted_std_error(
        &signal,
        &dark,
        2,
        400,
        EstimatorMode::ExactM,
        400,
        410,
    )
    .unwrap();

    let clean = simulate_histogram(&source, &dark_free, trials, 408).unwrap();
    let est_clean = g_from_histogram(&clean, 2, 400, EstimatorMode::ExactM).unwrap();
    let sigma_clean =
        bootstrap_std_error(&clean, 2, 400, EstimatorMode::ExactM, 400, 411).unwrap();

    // The two runs share source and detection randomness (only the dark
    // stage differs), so their difference is much tighter than independent
    // errors suggest; the combined-sigma bound is conservative.
    let combined = (sigma_sub.powi(2) + sigma_clean.powi(2)).sqrt();
    assert!(
        (est_sub.g - est_clean.g).abs() < 3.0 * combined,
        "subtracted {} vs dark-free {} (combined sigma {combined:.2e})",
        est_sub.g,
        est_clean.g
    );
}
