//! Normalized correlation estimators for pulse-count histograms.
//!
//! The central quantity is `g^(l) = F_l / mu^l` with `F_l` the `l`-th
//! factorial moment of the fired-pixel count and `mu` its mean. On a
//! detector with finitely many pixels the fired count of Poissonian light
//! undershoots that ratio by exactly `(m-1)(m-2)...(m-l+1) / m^{l-1}`, so
//! the `exact_m` mode multiplies the raw ratio by `m/(m-1) * ... *
//! m/(m-l+1)` and recovers an unbiased 1 for coherent light at any gain.
//! `large_m` leaves the ratio alone, which is the right reading when the
//! histogram comes from a device with effectively unlimited pixels.
//!
//! Also here: dark-count subtraction (bin-wise, producing a signed
//! histogram), the event-linear crosstalk law `g_meas = (1+2P)/(1+P)^2 g0 +
//! 2P/((1+P) mu)` with its exact inverse, bootstrap standard errors by
//! multinomial resampling, and the binary-click estimator for the
//! two-detector interferometer.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::HbtCounts;
use crate::error::{Error, Result};
use crate::histogram::CountHistogram;
use crate::scalar::Real;

/// Fewest bootstrap resamples worth reporting a standard error from.
pub const MIN_BOOTSTRAP_RESAMPLES: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorMode {
    /// Apply the finite-pixel-count correction for an `m`-pixel device.
    ExactM,
    /// Report the raw moment ratio, valid in the many-pixel limit.
    LargeM,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEstimate<R: Real> {
    pub order: u32,
    pub g: R,
    /// Bootstrap or propagated standard error; zero when not computed.
    pub std_error: R,
    /// Mean fired-pixel count of the underlying histogram.
    pub mean_counts: R,
    pub mode: EstimatorMode,
}

/// Estimates `g^(l)` from a histogram of fired-pixel counts.
///
/// Signed (dark-subtracted) histograms are fine here; their factorial
/// moments are the background-corrected moment estimates.
pub fn g_from_histogram<R: Real>(
    hist: &CountHistogram<R>,
    l: u32,
    pixels: u32,
    mode: EstimatorMode,
) -> Result<CorrelationEstimate<R>> {
    if l < 2 {
        return Err(Error::InvalidInput(format!("correlation order must be >= 2, got {l}")));
    }
    if hist.trials() == 0 {
        return Err(Error::UndefinedCorrelation {
            order: l,
            reason: "histogram contains no trials".into(),
        });
    }
    let mu = hist.mean_counts();
    if !(mu > R::zero()) {
        return Err(Error::UndefinedCorrelation {
            order: l,
            reason: format!("mean fired-pixel count is {mu}"),
        });
    }
    let mut g = hist.factorial_moment(l) / mu.powi(l as i32);
    if mode == EstimatorMode::ExactM {
        if pixels < l {
            return Err(Error::InvalidInput(format!(
                "the finite-pixel correction at order {l} needs at least {l} pixels, got {pixels}"
            )));
        }
        let m = R::from_count(pixels as u64);
        for i in 1..l {
            g = g * m / (m - R::from_count(i as u64));
        }
    }
    Ok(CorrelationEstimate {
        order: l,
        g,
        std_error: R::zero(),
        mean_counts: mu,
        mode,
    })
}

/// Bin-wise dark-count subtraction. The dark histogram is scaled by the
/// trial ratio, so the two runs need not be the same length; the result
/// keeps the signal's trial count and is marked signed because individual
/// bins can go negative.
pub fn subtract_dark<R: Real>(
    signal: &CountHistogram<R>,
    dark: &CountHistogram<R>,
) -> Result<CountHistogram<R>> {
    if signal.is_signed() || dark.is_signed() {
        return Err(Error::SignedHistogram(
            "dark subtraction takes two raw histograms".into(),
        ));
    }
    if dark.trials() == 0 {
        return Err(Error::InvalidInput("dark histogram contains no trials".into()));
    }
    let scale = R::from_count(signal.trials()) / R::from_count(dark.trials());
    let mut bins: BTreeMap<u32, R> = signal.iter().collect();
    for (k, n) in dark.iter() {
        let entry = bins.entry(k).or_insert_with(R::zero);
        *entry -= scale * n;
    }
    bins.retain(|_, v| *v != R::zero());
    Ok(CountHistogram::from_parts(
        bins,
        signal.trials(),
        true,
        signal.clamped_crosstalk_trials() + dark.clamped_crosstalk_trials(),
    ))
}

/// Second-order correlation the detector reports when event-linear
/// crosstalk with probability parameter `p` acts on light whose true
/// correlation is `g0` and whose measured mean fired count is `mu`.
pub fn predict_g2_crosstalk<R: Real>(g0: R, mu: R, p: R) -> R {
    let one = R::one();
    (one + R::of(2.0) * p) / ((one + p) * (one + p)) * g0 + R::of(2.0) * p / ((one + p) * mu)
}

/// Exact inverse of [`predict_g2_crosstalk`]: the crosstalk-free `g0` that
/// would produce the measured `g` at measured mean `mu`. The flag is true
/// when the result is negative, i.e. the measurement is inconsistent with
/// any physical state under this crosstalk strength.
pub fn correct_g2_crosstalk<R: Real>(g_measured: R, mu: R, p: R) -> (R, bool) {
    let one = R::one();
    let g0 = (one + p) * (one + p) / (one + R::of(2.0) * p)
        * (g_measured - R::of(2.0) * p / ((one + p) * mu));
    (g0, g0 < R::zero())
}

/// Bootstrap standard error of `g^(l)`: resample the histogram as a
/// multinomial over its bins, re-estimate, and take the standard deviation
/// across resamples.
pub fn bootstrap_std_error<R: Real>(
    hist: &CountHistogram<R>,
    l: u32,
    pixels: u32,
    mode: EstimatorMode,
    resamples: u32,
    seed: u64,
) -> Result<R> {
    if hist.is_signed() {
        return Err(Error::SignedHistogram(
            "a signed histogram is not a multinomial sample; resample the raw signal \
             and dark histograms instead"
                .into(),
        ));
    }
    let plan = ResamplePlan::new(hist)?;
    bootstrap_over(resamples, seed, |rng| {
        let resampled = plan.draw(rng);
        g_from_histogram(&resampled, l, pixels, mode)
    })
}

/// Bootstrap standard error for a dark-subtracted estimate. Each resample
/// redraws the signal and dark histograms independently, subtracts, and
/// re-estimates, so the reported spread includes the dark run's noise.
pub fn bootstrap_subtracted_std_error<R: Real>(
    signal: &CountHistogram<R>,
    dark: &CountHistogram<R>,
    l: u32,
    pixels: u32,
    mode: EstimatorMode,
    resamples: u32,
    seed: u64,
) -> Result<R> {
    if signal.is_signed() || dark.is_signed() {
        return Err(Error::SignedHistogram(
            "resampling needs the two raw histograms, not their difference".into(),
        ));
    }
    let signal_plan = ResamplePlan::new(signal)?;
    let dark_plan = ResamplePlan::new(dark)?;
    bootstrap_over(resamples, seed, |rng| {
        let s = signal_plan.draw(rng);
        let d = dark_plan.draw(rng);
        let diff = subtract_dark(&s, &d)?;
        g_from_histogram(&diff, l, pixels, mode)
    })
}

fn bootstrap_over<R: Real>(
    resamples: u32,
    seed: u64,
    estimate: impl Fn(&mut ChaCha8Rng) -> Result<CorrelationEstimate<R>> + Sync,
) -> Result<R> {
    if resamples < MIN_BOOTSTRAP_RESAMPLES {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_BOOTSTRAP_RESAMPLES} bootstrap resamples are required, got {resamples}"
        )));
    }
    let gs: Vec<R> = (0..resamples)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            estimate(&mut rng).ok().map(|e| e.g)
        })
        .collect();
    if gs.len() <= resamples as usize / 2 {
        return Err(Error::UndefinedCorrelation {
            order: 0,
            reason: format!(
                "{} of {resamples} bootstrap resamples had no usable estimate",
                resamples as usize - gs.len()
            ),
        });
    }
    let n = R::from_count(gs.len() as u64);
    let mean = gs.iter().copied().sum::<R>() / n;
    let var = gs.iter().map(|&g| (g - mean) * (g - mean)).sum::<R>() / (n - R::one());
    Ok(var.sqrt())
}

/// Multinomial resampling scheme over a histogram's bins, drawn by the
/// sequential conditional-binomial construction (the last bin takes
/// whatever remains, so every resample has exactly the original trial
/// count).
struct ResamplePlan {
    levels: Vec<u32>,
    probabilities: Vec<f64>,
    trials: u64,
}

impl ResamplePlan {
    fn new<R: Real>(hist: &CountHistogram<R>) -> Result<Self> {
        if hist.trials() == 0 {
            return Err(Error::InvalidInput("histogram contains no trials".into()));
        }
        let total = hist.trials() as f64;
        let (levels, probabilities) = hist
            .iter()
            .map(|(k, n)| (k, n.to_f64_lossy() / total))
            .unzip();
        Ok(Self {
            levels,
            probabilities,
            trials: hist.trials(),
        })
    }

    fn draw<R: Real>(&self, rng: &mut ChaCha8Rng) -> CountHistogram<R> {
        let mut remaining = self.trials;
        let mut mass_left = 1.0f64;
        let mut counts: BTreeMap<u32, R> = BTreeMap::new();
        for (i, (&k, &p)) in self.levels.iter().zip(&self.probabilities).enumerate() {
            let n = if i + 1 == self.levels.len() {
                remaining
            } else if remaining == 0 {
                0
            } else {
                let cond = (p / mass_left).clamp(0.0, 1.0);
                Binomial::new(remaining, cond)
                    .expect("clamped probability")
                    .sample(rng)
            };
            if n > 0 {
                counts.insert(k, R::from_count(n));
            }
            remaining -= n;
            mass_left -= p;
        }
        CountHistogram::from_parts(counts, self.trials, false, 0)
    }
}

/// `g^(2)` from binary-click interferometer totals:
/// `g = coincidences * trials / (singles_1 * singles_2)`, with the standard
/// error from binomial uncertainty on each of the three rates. Valid when
/// click probabilities are small; saturated detectors bias it upward.
pub fn hbt_g2<R: Real>(counts: &HbtCounts) -> Result<CorrelationEstimate<R>> {
    if counts.trials == 0 {
        return Err(Error::InvalidInput("no interferometer trials recorded".into()));
    }
    if counts.singles_1 == 0 || counts.singles_2 == 0 {
        return Err(Error::UndefinedCorrelation {
            order: 2,
            reason: "an interferometer arm registered no clicks".into(),
        });
    }
    let s = counts.trials as f64;
    let s1 = counts.singles_1 as f64;
    let s2 = counts.singles_2 as f64;
    let c = counts.coincidences as f64;
    let (g, sigma) = if counts.coincidences == 0 {
        // No coincidences observed: report 0 with the scale of a one-count
        // change as the uncertainty.
        (0.0, s / (s1 * s2))
    } else {
        let g = c * s / (s1 * s2);
        let rel_var = (1.0 - c / s) / c + (1.0 - s1 / s) / s1 + (1.0 - s2 / s) / s2;
        (g, g * rel_var.sqrt())
    };
    Ok(CorrelationEstimate {
        order: 2,
        g: R::of(g),
        std_error: R::of(sigma),
        mean_counts: R::of((s1 + s2) / s),
        mode: EstimatorMode::LargeM,
    })
}
