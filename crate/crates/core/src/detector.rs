//! Monte-Carlo model of a multi-pixel photon counter.
//!
//! A pulse goes through four stages, each fed by its own random stream so
//! that runs differing in one stage's parameters stay pathwise coupled in
//! the others (see [`crate::streams`]):
//!
//! 1. the source emits `n` photons;
//! 2. each photon survives with probability `efficiency` and lands on a
//!    uniformly random pixel; a pixel fires at most once, so simultaneous
//!    hits merge;
//! 3. dark counts fire a Poisson(`dark_mean`) number of additional
//!    uniformly placed pixels;
//! 4. optical crosstalk promotes extra pixels according to the configured
//!    model.
//!
//! The thinning draw and the pixel draw are both consumed for every photon,
//! whether or not it survives, so lowering the efficiency with the same seed
//! removes photons from a pulse without relandng the survivors.
//!
//! Crosstalk models: `per_avalanche` gives every fired pixel one chance
//! (probability `crosstalk_p`) to ignite one further pixel. `event_linear`
//! is the aggregate shortcut used throughout the analysis chain: a pulse
//! with `k` fired pixels gains exactly one extra pixel with probability
//! `k * crosstalk_p`. That expression is only a probability while
//! `k * crosstalk_p <= 1`; beyond that the pulse is simulated at
//! probability 1 and counted, so saturated data is flagged rather than
//! silently bent.

use std::collections::BTreeMap;
use std::ops::Range;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::CountHistogram;
use crate::scalar::Real;
use crate::sources::{PhotonSourceSpec, SourceSampler};
use crate::streams::TrialStreams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrosstalkMode {
    Off,
    PerAvalanche,
    EventLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct DetectorConfig<R: Real> {
    #[serde(default = "default_pixels")]
    pub pixels: u32,
    #[serde(default = "default_efficiency")]
    pub efficiency: R,
    #[serde(default = "default_dark_mean")]
    pub dark_mean: R,
    #[serde(default = "default_crosstalk_p")]
    pub crosstalk_p: R,
    #[serde(default = "default_crosstalk_mode")]
    pub crosstalk_mode: CrosstalkMode,
}

fn default_pixels() -> u32 {
    400
}
fn default_efficiency<R: Real>() -> R {
    R::of(0.41)
}
fn default_dark_mean<R: Real>() -> R {
    R::of(1.25e-3)
}
fn default_crosstalk_p<R: Real>() -> R {
    R::of(0.177)
}
fn default_crosstalk_mode() -> CrosstalkMode {
    CrosstalkMode::EventLinear
}

impl<R: Real> Default for DetectorConfig<R> {
    fn default() -> Self {
        Self {
            pixels: default_pixels(),
            efficiency: default_efficiency(),
            dark_mean: default_dark_mean(),
            crosstalk_p: default_crosstalk_p(),
            crosstalk_mode: default_crosstalk_mode(),
        }
    }
}

impl<R: Real> DetectorConfig<R> {
    pub fn validate(&self) -> Result<()> {
        if self.pixels < 1 {
            return Err(Error::InvalidDetector("pixels must be >= 1".into()));
        }
        let unit = |x: R, what: &str| {
            if x >= R::zero() && x <= R::one() {
                Ok(())
            } else {
                Err(Error::InvalidDetector(format!("{what} must lie in [0, 1], got {x}")))
            }
        };
        unit(self.efficiency, "efficiency")?;
        unit(self.crosstalk_p, "crosstalk_p")?;
        if !(self.dark_mean >= R::zero() && self.dark_mean.is_finite()) {
            return Err(Error::InvalidDetector(format!(
                "dark_mean must be finite and >= 0, got {}",
                self.dark_mean
            )));
        }
        Ok(())
    }
}

/// Result of pushing one pulse through the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseOutcome {
    /// Number of pixels that fired.
    pub fired: u32,
    /// Whether the event-linear crosstalk probability `k * crosstalk_p`
    /// exceeded 1 and was treated as certain.
    pub clamped_crosstalk: bool,
}

/// Click totals from a two-detector intensity interferometer: the source
/// feeds a balanced splitter into two binary (click / no click) detectors of
/// efficiency `eta_apd` with no dark counts or crosstalk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HbtCounts {
    pub singles_1: u64,
    pub singles_2: u64,
    pub coincidences: u64,
    pub trials: u64,
}

/// The event-linear crosstalk add probability for a pulse that currently
/// has `k` fired pixels: `k * p`, capped at 1. The second value reports
/// whether the cap was hit.
pub fn event_linear_add_probability<R: Real>(k: u32, p: R) -> (R, bool) {
    let raw = R::from_count(k as u64) * p;
    if raw > R::one() {
        (R::one(), true)
    } else {
        (raw, false)
    }
}

/// Per-run constants hoisted out of the pulse loop. All stochastic decisions
/// run in f64 so the pulse record for a given seed does not depend on the
/// scalar type carried by the statistics.
struct PulseContext {
    pixels: u32,
    efficiency: f64,
    crosstalk_p: f64,
    crosstalk_mode: CrosstalkMode,
    dark: Option<Poisson<f64>>,
}

impl PulseContext {
    fn new<R: Real>(config: &DetectorConfig<R>) -> Result<Self> {
        config.validate()?;
        let dark_mean = config.dark_mean.to_f64_lossy();
        Ok(Self {
            pixels: config.pixels,
            efficiency: config.efficiency.to_f64_lossy(),
            crosstalk_p: config.crosstalk_p.to_f64_lossy(),
            crosstalk_mode: config.crosstalk_mode,
            dark: if dark_mean > 0.0 {
                Some(Poisson::new(dark_mean).map_err(|e| Error::InvalidDetector(e.to_string()))?)
            } else {
                None
            },
        })
    }

    fn detect(&self, n_photons: u64, streams: &mut TrialStreams) -> PulseOutcome {
        let mut fired: Vec<u32> = Vec::new();
        for _ in 0..n_photons {
            let survives: f64 = streams.detection.random();
            let pixel = streams.detection.random_range(0..self.pixels);
            if survives < self.efficiency && !fired.contains(&pixel) {
                fired.push(pixel);
            }
        }
        if let Some(dark) = &self.dark {
            let events = dark.sample(&mut streams.dark) as u64;
            for _ in 0..events {
                let pixel = streams.dark.random_range(0..self.pixels);
                if !fired.contains(&pixel) {
                    fired.push(pixel);
                }
            }
        }
        let mut clamped = false;
        match self.crosstalk_mode {
            CrosstalkMode::Off => {}
            CrosstalkMode::EventLinear => {
                let k = fired.len() as u32;
                if k > 0 {
                    let (prob, hit_cap) = event_linear_add_probability(k, self.crosstalk_p);
                    clamped = hit_cap;
                    let u: f64 = streams.crosstalk.random();
                    if u < prob {
                        fire_fresh_pixel(&mut fired, self.pixels, &mut streams.crosstalk);
                    }
                }
            }
            CrosstalkMode::PerAvalanche => {
                let primaries = fired.len();
                for _ in 0..primaries {
                    let u: f64 = streams.crosstalk.random();
                    if u < self.crosstalk_p {
                        fire_fresh_pixel(&mut fired, self.pixels, &mut streams.crosstalk);
                    }
                }
            }
        }
        PulseOutcome {
            fired: fired.len() as u32,
            clamped_crosstalk: clamped,
        }
    }
}

/// Ignites one not-yet-fired pixel, unless every pixel is already lit.
fn fire_fresh_pixel(fired: &mut Vec<u32>, pixels: u32, rng: &mut ChaCha8Rng) {
    if fired.len() as u32 == pixels {
        return;
    }
    loop {
        let pixel = rng.random_range(0..pixels);
        if !fired.contains(&pixel) {
            fired.push(pixel);
            return;
        }
    }
}

/// Runs one pulse with `n_photons` incident photons through the detector.
pub fn detect_one_pulse<R: Real>(
    n_photons: u64,
    config: &DetectorConfig<R>,
    streams: &mut TrialStreams,
) -> Result<PulseOutcome> {
    Ok(PulseContext::new(config)?.detect(n_photons, streams))
}

/// Simulates `trials` pulses and histograms the fired-pixel counts.
pub fn simulate_histogram<R: Real>(
    source: &PhotonSourceSpec<R>,
    config: &DetectorConfig<R>,
    trials: u64,
    seed: u64,
) -> Result<CountHistogram<R>> {
    simulate_histogram_range(source, config, 0..trials, seed)
}

/// Like [`simulate_histogram`] but over an explicit trial-index range, so a
/// run can be split into chunks: merging the chunk histograms reproduces the
/// single-run histogram exactly, because trial `i` sees the same streams
/// either way.
pub fn simulate_histogram_range<R: Real>(
    source: &PhotonSourceSpec<R>,
    config: &DetectorConfig<R>,
    trials: Range<u64>,
    seed: u64,
) -> Result<CountHistogram<R>> {
    let sampler = source.sampler()?;
    run_pulses(Some(&sampler), config, trials, seed)
}

/// Histogram of detector output with the light blocked: dark counts and
/// crosstalk only. Uses the same per-trial streams as a lit run, so a lit
/// run and a dark run with one seed share their dark-stage randomness
/// trial for trial.
pub fn simulate_dark_histogram<R: Real>(
    config: &DetectorConfig<R>,
    trials: u64,
    seed: u64,
) -> Result<CountHistogram<R>> {
    run_pulses(None, config, 0..trials, seed)
}

fn run_pulses<R: Real>(
    sampler: Option<&SourceSampler>,
    config: &DetectorConfig<R>,
    trials: Range<u64>,
    seed: u64,
) -> Result<CountHistogram<R>> {
    let ctx = PulseContext::new(config)?;
    let total = trials.end.saturating_sub(trials.start);
    let (tallies, clamped) = trials
        .into_par_iter()
        .fold(
            || (Vec::<u64>::new(), 0u64),
            |(mut tallies, mut clamped), trial| {
                let mut streams = TrialStreams::for_trial(seed, trial);
                let n = match sampler {
                    Some(s) => s.sample(&mut streams.source),
                    None => 0,
                };
                let outcome = ctx.detect(n, &mut streams);
                let k = outcome.fired as usize;
                if k >= tallies.len() {
                    tallies.resize(k + 1, 0);
                }
                tallies[k] += 1;
                clamped += outcome.clamped_crosstalk as u64;
                (tallies, clamped)
            },
        )
        .reduce(
            || (Vec::new(), 0),
            |(mut a, ca), (b, cb)| {
                if b.len() > a.len() {
                    a.resize(b.len(), 0);
                }
                for (k, n) in b.into_iter().enumerate() {
                    a[k] += n;
                }
                (a, ca + cb)
            },
        );
    let counts: BTreeMap<u32, u64> = tallies
        .into_iter()
        .enumerate()
        .filter(|&(_, n)| n > 0)
        .map(|(k, n)| (k as u32, n))
        .collect();
    let mut hist = CountHistogram::raw(counts, total)?;
    hist.add_clamped_crosstalk_trials(clamped);
    Ok(hist)
}

/// Simulates the source feeding a balanced beam splitter with a binary
/// detector of efficiency `eta_apd` on each output port. Every photon
/// independently picks a port and then registers with probability
/// `eta_apd`; a port that registers at least one photon yields one click.
pub fn simulate_hbt<R: Real>(
    source: &PhotonSourceSpec<R>,
    eta_apd: R,
    trials: u64,
    seed: u64,
) -> Result<HbtCounts> {
    if !(eta_apd >= R::zero() && eta_apd <= R::one()) {
        return Err(Error::InvalidDetector(format!(
            "eta_apd must lie in [0, 1], got {eta_apd}"
        )));
    }
    let sampler = source.sampler()?;
    let eta = eta_apd.to_f64_lossy();
    let (singles_1, singles_2, coincidences) = (0..trials)
        .into_par_iter()
        .fold(
            || (0u64, 0u64, 0u64),
            |(mut s1, mut s2, mut c), trial| {
                let mut streams = TrialStreams::for_trial(seed, trial);
                let n = sampler.sample(&mut streams.source);
                let mut click_1 = false;
                let mut click_2 = false;
                for _ in 0..n {
                    let port: f64 = streams.detection.random();
                    let registers: f64 = streams.detection.random();
                    if registers < eta {
                        if port < 0.5 {
                            click_1 = true;
                        } else {
                            click_2 = true;
                        }
                    }
                }
                s1 += click_1 as u64;
                s2 += click_2 as u64;
                c += (click_1 && click_2) as u64;
                (s1, s2, c)
            },
        )
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    Ok(HbtCounts {
        singles_1,
        singles_2,
        coincidences,
        trials,
    })
}
