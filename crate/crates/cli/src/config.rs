//! Run configuration: TOML files plus command-line overrides.
//!
//! Every field a config file can set has a corresponding flag, and a flag
//! always wins over the file. Simulation commands refuse to run without an
//! explicit seed from one or the other; there is no wall-clock fallback, so
//! rerunning a command always reproduces its outputs.

use std::path::Path;

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use photocount::detector::CrosstalkMode;
use photocount::estimator::EstimatorMode;
use photocount::{Detector, Error, Result, Source};

/// Estimator choices shared by every command that computes a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSettings {
    #[serde(default = "default_order")]
    pub order: u32,
    #[serde(default = "default_mode")]
    pub mode: EstimatorMode,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: u32,
}

fn default_order() -> u32 {
    2
}
fn default_mode() -> EstimatorMode {
    EstimatorMode::ExactM
}
fn default_resamples() -> u32 {
    200
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self {
            order: default_order(),
            mode: default_mode(),
            bootstrap_resamples: default_resamples(),
        }
    }
}

/// Configuration for `simulate` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    /// Length of the paired dark run; defaults to `trials`.
    #[serde(default)]
    pub dark_trials: Option<u64>,
    /// Intensity scale factors for sweeps, strictly increasing and positive.
    #[serde(default)]
    pub mu_grid: Vec<f64>,
    #[serde(default)]
    pub source: Option<Source>,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub estimate: EstimateSettings,
}

fn default_trials() -> u64 {
    1_000_000
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: None,
            trials: default_trials(),
            dark_trials: None,
            mu_grid: Vec::new(),
            source: None,
            detector: Detector::default(),
            estimate: EstimateSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn dark_trials(&self) -> u64 {
        self.dark_trials.unwrap_or(self.trials)
    }
}

/// One sweep of the two-sweep calibration pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub dark_trials: Option<u64>,
    pub mu_grid: Vec<f64>,
    pub source: Source,
}

impl SweepSection {
    pub fn dark_trials(&self) -> u64 {
        self.dark_trials.unwrap_or(self.trials)
    }
}

/// Configuration for `pipeline`: a coherent reference sweep that fixes the
/// crosstalk strength, then a subject sweep corrected with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub detector: Detector,
    #[serde(default)]
    pub estimate: EstimateSettings,
    pub reference: SweepSection,
    pub subject: SweepSection,
}

pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// A seed must come from somewhere explicit.
pub fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| {
        Error::InvalidInput(
            "a random seed is required: set `seed` in the config file or pass --seed".into(),
        )
    })
}

pub fn validate_mu_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput(
            "mu_grid must contain at least one intensity point".into(),
        ));
    }
    for (i, &x) in grid.iter().enumerate() {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mu_grid entry {i} is {x}; every point must be positive"
            )));
        }
        if i > 0 && x <= grid[i - 1] {
            return Err(Error::InvalidInput(format!(
                "mu_grid must be strictly increasing, but entry {i} ({x}) does not exceed {}",
                grid[i - 1]
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CrosstalkModeArg {
    #[value(name = "off")]
    Off,
    #[value(name = "per_avalanche")]
    PerAvalanche,
    #[value(name = "event_linear")]
    EventLinear,
}

impl From<CrosstalkModeArg> for CrosstalkMode {
    fn from(a: CrosstalkModeArg) -> Self {
        match a {
            CrosstalkModeArg::Off => CrosstalkMode::Off,
            CrosstalkModeArg::PerAvalanche => CrosstalkMode::PerAvalanche,
            CrosstalkModeArg::EventLinear => CrosstalkMode::EventLinear,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorModeArg {
    #[value(name = "exact_m")]
    ExactM,
    #[value(name = "large_m")]
    LargeM,
}

impl From<EstimatorModeArg> for EstimatorMode {
    fn from(a: EstimatorModeArg) -> Self {
        match a {
            EstimatorModeArg::ExactM => EstimatorMode::ExactM,
            EstimatorModeArg::LargeM => EstimatorMode::LargeM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKindArg {
    #[value(name = "coherent")]
    Coherent,
    #[value(name = "twin_beam_signal")]
    TwinBeamSignal,
    #[value(name = "degenerate_squeezed_supermode")]
    DegenerateSqueezedSupermode,
    #[value(name = "single_mode_squeezed_exact")]
    SingleModeSqueezedExact,
    #[value(name = "thermal")]
    Thermal,
}

impl SourceKindArg {
    fn build(self, mu: f64, modes: Option<u32>) -> Result<Source> {
        if modes.is_some() && self != SourceKindArg::Thermal {
            return Err(Error::InvalidInput(
                "--source-modes applies only to thermal sources".into(),
            ));
        }
        let source = match self {
            SourceKindArg::Coherent => Source::Coherent { mu },
            SourceKindArg::TwinBeamSignal => Source::TwinBeamSignal { mu_pairs: mu },
            SourceKindArg::DegenerateSqueezedSupermode => {
                Source::DegenerateSqueezedSupermode { mu_pairs: mu }
            }
            SourceKindArg::SingleModeSqueezedExact => {
                Source::SingleModeSqueezedExact { r: mu }
            }
            SourceKindArg::Thermal => Source::Thermal {
                mu,
                modes: modes.unwrap_or(1),
            },
        };
        source.validate()?;
        Ok(source)
    }
}

/// Flag overrides accepted by the simulation commands. Every config-file
/// field has its counterpart here.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Master random seed (required if the config file sets none).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Pulses to simulate per run or grid point.
    #[arg(long)]
    pub trials: Option<u64>,
    /// Pulses in each paired dark run (default: same as trials).
    #[arg(long)]
    pub dark_trials: Option<u64>,
    /// Number of detector pixels.
    #[arg(long)]
    pub pixels: Option<u32>,
    /// Photon detection efficiency in [0, 1].
    #[arg(long)]
    pub efficiency: Option<f64>,
    /// Mean dark counts per pulse.
    #[arg(long)]
    pub dark_mean: Option<f64>,
    /// Crosstalk probability parameter in [0, 1].
    #[arg(long)]
    pub crosstalk_p: Option<f64>,
    /// Crosstalk model.
    #[arg(long, value_enum)]
    pub crosstalk_mode: Option<CrosstalkModeArg>,
    /// Correlation order l >= 2.
    #[arg(long)]
    pub order: Option<u32>,
    /// Finite-pixel correction on or off.
    #[arg(long, value_enum)]
    pub estimator_mode: Option<EstimatorModeArg>,
    /// Bootstrap resamples per standard error (>= 100).
    #[arg(long)]
    pub bootstrap_resamples: Option<u32>,
    /// Comma-separated intensity scale factors replacing the config grid.
    #[arg(long, value_delimiter = ',')]
    pub mu_grid: Option<Vec<f64>>,
    /// Source family; needs --source-mu.
    #[arg(long, value_enum)]
    pub source_kind: Option<SourceKindArg>,
    /// Source intensity parameter (mu, mu_pairs, or r by family).
    #[arg(long)]
    pub source_mu: Option<f64>,
    /// Mode count for thermal sources.
    #[arg(long)]
    pub source_modes: Option<u32>,
}

impl Overrides {
    pub fn apply_run(&self, config: &mut RunConfig) -> Result<()> {
        if let Some(s) = self.seed {
            config.seed = Some(s);
        }
        if let Some(t) = self.trials {
            config.trials = t;
        }
        if let Some(t) = self.dark_trials {
            config.dark_trials = Some(t);
        }
        if let Some(grid) = &self.mu_grid {
            config.mu_grid = grid.clone();
        }
        self.apply_detector(&mut config.detector);
        self.apply_estimate(&mut config.estimate);
        self.apply_source(&mut config.source)
    }

    /// Pipeline runs put trial counts and sources in their per-sweep
    /// sections, so only the shared knobs can be overridden from flags.
    pub fn apply_pipeline(&self, config: &mut PipelineConfig) -> Result<()> {
        if self.trials.is_some()
            || self.dark_trials.is_some()
            || self.mu_grid.is_some()
            || self.source_kind.is_some()
            || self.source_mu.is_some()
            || self.source_modes.is_some()
        {
            return Err(Error::InvalidInput(
                "pipeline sweeps are configured per section; override them in the config file"
                    .into(),
            ));
        }
        if let Some(s) = self.seed {
            config.seed = Some(s);
        }
        self.apply_detector(&mut config.detector);
        self.apply_estimate(&mut config.estimate);
        Ok(())
    }

    fn apply_detector(&self, detector: &mut Detector) {
        if let Some(m) = self.pixels {
            detector.pixels = m;
        }
        if let Some(e) = self.efficiency {
            detector.efficiency = e;
        }
        if let Some(d) = self.dark_mean {
            detector.dark_mean = d;
        }
        if let Some(p) = self.crosstalk_p {
            detector.crosstalk_p = p;
        }
        if let Some(m) = self.crosstalk_mode {
            detector.crosstalk_mode = m.into();
        }
    }

    fn apply_estimate(&self, estimate: &mut EstimateSettings) {
        if let Some(l) = self.order {
            estimate.order = l;
        }
        if let Some(m) = self.estimator_mode {
            estimate.mode = m.into();
        }
        if let Some(r) = self.bootstrap_resamples {
            estimate.bootstrap_resamples = r;
        }
    }

    fn apply_source(&self, slot: &mut Option<Source>) -> Result<()> {
        if let Some(kind) = self.source_kind {
            let mu = self.source_mu.ok_or_else(|| {
                Error::InvalidInput("--source-kind needs --source-mu".into())
            })?;
            *slot = Some(kind.build(mu, self.source_modes)?);
            return Ok(());
        }
        if self.source_mu.is_none() && self.source_modes.is_none() {
            return Ok(());
        }
        let Some(source) = slot.as_mut() else {
            return Err(Error::InvalidInput(
                "--source-mu/--source-modes need a source from the config file or --source-kind"
                    .into(),
            ));
        };
        if let Some(mu) = self.source_mu {
            match source {
                Source::Coherent { mu: m } => *m = mu,
                Source::TwinBeamSignal { mu_pairs } => *mu_pairs = mu,
                Source::DegenerateSqueezedSupermode { mu_pairs } => *mu_pairs = mu,
                Source::SingleModeSqueezedExact { r } => *r = mu,
                Source::Thermal { mu: m, .. } => *m = mu,
            }
        }
        if let Some(modes) = self.source_modes {
            match source {
                Source::Thermal { modes: m, .. } => *m = modes,
                _ => {
                    return Err(Error::InvalidInput(
                        "--source-modes applies only to thermal sources".into(),
                    ))
                }
            }
        }
        source.validate()
    }
}
