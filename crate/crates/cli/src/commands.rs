//! Subcommand implementations.
//!
//! Each command resolves its configuration (file plus flag overrides), runs
//! through the library, and writes its outputs. The heavy lifting lives in
//! report-building functions that return plain data, so the same machinery
//! is callable in process; the command wrappers add file output and terse
//! stdout summaries. Anything suspicious (clamped crosstalk, unphysical
//! corrections, fits that ran out of iterations) goes to stderr as a
//! warning without failing the run.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use photocount::detector::{simulate_dark_histogram, simulate_histogram};
use photocount::estimator::{
    bootstrap_std_error, bootstrap_subtracted_std_error, correct_g2_crosstalk, g_from_histogram,
    subtract_dark,
};
use photocount::fitting::{fit_curve, CurveModel, CurvePoint, FitResult};
use photocount::io::{
    discretize_amplitudes, load_histogram, read_amplitudes, read_curve_csv, save_histogram,
    write_curve_csv, write_json, CurveRecord, EstimateRecord, HistogramMeta,
};
use photocount::streams::derive_seed;
use photocount::{Detector, Error, Result, Source};

use crate::config::{
    load_config, require_seed, validate_mu_grid, EstimateSettings, EstimatorModeArg, Overrides,
    PipelineConfig, RunConfig,
};

pub const SWEEP_REPORT_SCHEMA: &str = "photocount.sweep.v1";
pub const PIPELINE_REPORT_SCHEMA: &str = "photocount.pipeline.v1";

/// Sweep arms of a pipeline run get disjoint seed-tag ranges. Grid points
/// use three tags each (signal, dark, bootstrap), so the offset leaves room
/// for any realistic grid.
const SUBJECT_TAG_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveModelArg {
    #[value(name = "hyperbola")]
    Hyperbola,
    #[value(name = "crosstalk_ref")]
    CrosstalkRef,
}

impl From<CurveModelArg> for CurveModel {
    fn from(a: CurveModelArg) -> Self {
        match a {
            CurveModelArg::Hyperbola => CurveModel::Hyperbola,
            CurveModelArg::CrosstalkRef => CurveModel::CrosstalkRef,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WhichRows {
    #[value(name = "raw")]
    Raw,
    #[value(name = "corrected")]
    Corrected,
    #[value(name = "all")]
    All,
}

impl WhichRows {
    fn keeps(self, corrected: bool) -> bool {
        match self {
            WhichRows::Raw => !corrected,
            WhichRows::Corrected => corrected,
            WhichRows::All => true,
        }
    }
}

/// One grid point of a sweep as it appears in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPointReport {
    /// Intensity scale factor applied to the configured source.
    pub mu_scale: f64,
    pub signal_trials: u64,
    pub dark_trials: u64,
    /// Pulses in which the crosstalk add probability hit its cap.
    pub clamped_crosstalk_trials: u64,
    pub estimate: EstimateRecord<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema: String,
    pub seed: u64,
    pub config: RunConfig,
    pub points: Vec<SweepPointReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceArm {
    pub points: Vec<SweepPointReport>,
    pub fit: FitResult<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectArm {
    pub points: Vec<SweepPointReport>,
    /// Second-order estimates after the crosstalk correction, with the
    /// intensity rescaled to photoelectron equivalents.
    pub corrected: Vec<EstimateRecord<f64>>,
    pub fit_raw: FitResult<f64>,
    pub fit_corrected: FitResult<f64>,
    /// Corrected points whose value came out negative, which the crosstalk
    /// model cannot produce from any physical input.
    pub unphysical_corrections: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema: String,
    pub seed: u64,
    pub config: PipelineConfig,
    /// Crosstalk strength fitted from the reference sweep.
    pub crosstalk_strength: f64,
    pub crosstalk_strength_std_error: f64,
    pub reference: ReferenceArm,
    pub subject: SubjectArm,
    pub warnings: Vec<String>,
}

/// Everything one sweep produces: curve rows for fitting plus the per-point
/// report entries.
pub struct SweepOutcome {
    pub rows: Vec<CurveRecord<f64>>,
    pub points: Vec<SweepPointReport>,
    pub warnings: Vec<String>,
}

/// Runs one intensity sweep: per grid point, a lit run and a paired dark
/// run, dark subtraction, the correlation estimate, and a bootstrap
/// standard error. Grid point `i` derives its seeds from tags
/// `tag_base + 3i` (signal), `+1` (dark), and `+2` (bootstrap), so sweeps
/// with different tag bases never share randomness.
pub fn run_sweep(
    source: &Source,
    detector: &Detector,
    estimate: &EstimateSettings,
    trials: u64,
    dark_trials: u64,
    mu_grid: &[f64],
    seed: u64,
    tag_base: u64,
) -> Result<SweepOutcome> {
    validate_mu_grid(mu_grid)?;
    require_trials(trials, dark_trials)?;
    let mut outcome = SweepOutcome {
        rows: Vec::new(),
        points: Vec::new(),
        warnings: Vec::new(),
    };
    for (i, &scale) in mu_grid.iter().enumerate() {
        let scaled = source.with_mean_scaled(scale)?;
        let tag = tag_base + 3 * i as u64;
        let signal = simulate_histogram(&scaled, detector, trials, derive_seed(seed, tag))?;
        let dark = simulate_dark_histogram(detector, dark_trials, derive_seed(seed, tag + 1))?;
        let difference = subtract_dark(&signal, &dark)?;
        let mut point = g_from_histogram(
            &difference,
            estimate.order,
            detector.pixels,
            estimate.mode,
        )?;
        point.std_error = bootstrap_subtracted_std_error(
            &signal,
            &dark,
            estimate.order,
            detector.pixels,
            estimate.mode,
            estimate.bootstrap_resamples,
            derive_seed(seed, tag + 2),
        )?;
        let clamped = signal.clamped_crosstalk_trials() + dark.clamped_crosstalk_trials();
        if clamped > 0 {
            outcome.warnings.push(format!(
                "grid point {scale}: the crosstalk add probability was clamped in {clamped} of {} pulses",
                trials + dark_trials
            ));
        }
        outcome.rows.push(CurveRecord {
            mu: point.mean_counts,
            g: point.g,
            sigma: point.std_error,
            corrected: false,
        });
        outcome.points.push(SweepPointReport {
            mu_scale: scale,
            signal_trials: trials,
            dark_trials,
            clamped_crosstalk_trials: clamped,
            estimate: EstimateRecord::new(&point),
        });
    }
    Ok(outcome)
}

/// Builds the full sweep report for a resolved configuration.
pub fn sweep_report(config: &RunConfig, seed: u64) -> Result<(SweepReport, Vec<CurveRecord<f64>>)> {
    let source = config.source.as_ref().ok_or_else(|| {
        Error::InvalidInput(
            "a sweep needs a source: configure [source] or pass --source-kind".into(),
        )
    })?;
    let outcome = run_sweep(
        source,
        &config.detector,
        &config.estimate,
        config.trials,
        config.dark_trials(),
        &config.mu_grid,
        seed,
        0,
    )?;
    let report = SweepReport {
        schema: SWEEP_REPORT_SCHEMA.into(),
        seed,
        config: config.clone(),
        points: outcome.points,
        warnings: outcome.warnings,
    };
    Ok((report, outcome.rows))
}

/// Runs the two-sweep calibration: fit the crosstalk strength on the
/// reference arm, then correct the subject arm with it and fit the
/// corrected curve.
pub fn pipeline_report(config: &PipelineConfig, seed: u64) -> Result<PipelineReport> {
    if config.estimate.order != 2 {
        return Err(Error::InvalidInput(format!(
            "the pipeline corrects second-order correlations; estimate.order is {}",
            config.estimate.order
        )));
    }
    let mut warnings = Vec::new();

    let reference = run_sweep(
        &config.reference.source,
        &config.detector,
        &config.estimate,
        config.reference.trials,
        config.reference.dark_trials(),
        &config.reference.mu_grid,
        seed,
        0,
    )?;
    warnings.extend(reference.warnings.iter().map(|w| format!("reference: {w}")));
    let ref_fit = fit_curve(&points_of(&reference.rows), CurveModel::CrosstalkRef)?;
    if !ref_fit.converged {
        warnings.push(format!(
            "reference: crosstalk fit stopped after {} iterations without converging",
            ref_fit.iterations
        ));
    }
    let p_hat = ref_fit.params[0];
    if !(0.0..=1.0).contains(&p_hat) {
        warnings.push(format!(
            "reference: fitted crosstalk strength {p_hat} lies outside [0, 1]"
        ));
    }

    let subject = run_sweep(
        &config.subject.source,
        &config.detector,
        &config.estimate,
        config.subject.trials,
        config.subject.dark_trials(),
        &config.subject.mu_grid,
        seed,
        SUBJECT_TAG_BASE,
    )?;
    warnings.extend(subject.warnings.iter().map(|w| format!("subject: {w}")));

    let mut corrected = Vec::new();
    let mut unphysical_corrections = 0;
    for point in &subject.points {
        let raw = &point.estimate;
        let record = correct_record(raw, p_hat);
        if record.g < 0.0 {
            unphysical_corrections += 1;
            warnings.push(format!(
                "subject: corrected value {} at mu {} is negative; the crosstalk model cannot \
                 explain this point",
                record.g, raw.mu
            ));
        }
        corrected.push(record);
    }

    let fit_raw = fit_curve(&points_of(&subject.rows), CurveModel::Hyperbola)?;
    let corrected_points: Vec<CurvePoint<f64>> = corrected
        .iter()
        .map(|r| CurvePoint {
            mu: r.mu,
            g: r.g,
            sigma: r.std_error,
        })
        .collect();
    let fit_corrected = fit_curve(&corrected_points, CurveModel::Hyperbola)?;
    for (fit, label) in [(&fit_raw, "raw"), (&fit_corrected, "corrected")] {
        if !fit.converged {
            warnings.push(format!(
                "subject: {label} hyperbola fit stopped after {} iterations without converging",
                fit.iterations
            ));
        }
    }

    Ok(PipelineReport {
        schema: PIPELINE_REPORT_SCHEMA.into(),
        seed,
        config: config.clone(),
        crosstalk_strength: p_hat,
        crosstalk_strength_std_error: ref_fit.std_errors[0],
        reference: ReferenceArm {
            points: reference.points,
            fit: ref_fit,
        },
        subject: SubjectArm {
            points: subject.points,
            corrected,
            fit_raw,
            fit_corrected,
            unphysical_corrections,
        },
        warnings,
    })
}

/// Applies the second-order crosstalk correction to an estimate record:
/// the value is inverted through the crosstalk response, its standard
/// error is scaled by the inverse slope, and the intensity is deflated to
/// photoelectron equivalents.
pub fn correct_record(raw: &EstimateRecord<f64>, p: f64) -> EstimateRecord<f64> {
    let (g0, _) = correct_g2_crosstalk(raw.g, raw.mu, p);
    let slope = (1.0 + p) * (1.0 + p) / (1.0 + 2.0 * p);
    EstimateRecord {
        l: raw.l,
        g: g0,
        std_error: raw.std_error * slope,
        mu: raw.mu / (1.0 + p),
        mode: raw.mode,
        corrected: true,
        p_used: Some(p),
    }
}

fn points_of(rows: &[CurveRecord<f64>]) -> Vec<CurvePoint<f64>> {
    rows.iter().map(|r| r.point()).collect()
}

fn require_trials(trials: u64, dark_trials: u64) -> Result<()> {
    if trials == 0 || dark_trials == 0 {
        return Err(Error::InvalidInput(
            "trials and dark_trials must both be at least 1".into(),
        ));
    }
    Ok(())
}

fn load_run_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let mut config = match path {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    overrides.apply_run(&mut config)?;
    Ok(config)
}

pub fn simulate(
    config: Option<&Path>,
    dark_only: bool,
    out: &Path,
    overrides: &Overrides,
) -> Result<()> {
    let config = load_run_config(config, overrides)?;
    let seed = require_seed(config.seed)?;
    config.detector.validate()?;
    let hist = if dark_only {
        require_trials(config.dark_trials(), 1)?;
        simulate_dark_histogram(&config.detector, config.dark_trials(), seed)?
    } else {
        require_trials(config.trials, 1)?;
        let source = config.source.as_ref().ok_or_else(|| {
            Error::InvalidInput(
                "simulate needs a source: configure [source], pass --source-kind, or use \
                 --dark-only"
                    .into(),
            )
        })?;
        simulate_histogram(source, &config.detector, config.trials, seed)?
    };
    if hist.clamped_crosstalk_trials() > 0 {
        eprintln!(
            "warning: the crosstalk add probability was clamped in {} of {} pulses",
            hist.clamped_crosstalk_trials(),
            hist.trials()
        );
    }
    let meta = HistogramMeta {
        seed: Some(seed),
        source: if dark_only { None } else { config.source.clone() },
        detector: Some(config.detector.clone()),
        ..HistogramMeta::new(&hist)
    };
    save_histogram(out, &hist, &meta)?;
    println!(
        "wrote {} ({} trials, mean fired pixels {})",
        out.display(),
        hist.trials(),
        hist.mean_counts()
    );
    Ok(())
}

pub fn sweep(
    config: Option<&Path>,
    out: &Path,
    report_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<()> {
    let config = load_run_config(config, overrides)?;
    let seed = require_seed(config.seed)?;
    config.detector.validate()?;
    let (report, rows) = sweep_report(&config, seed)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    for (point, row) in report.points.iter().zip(&rows) {
        println!(
            "mu_scale {}: mu {}, g{} = {} +- {}",
            point.mu_scale, row.mu, point.estimate.l, row.g, row.sigma
        );
    }
    write_curve_csv(out, &rows)?;
    println!("wrote {} ({} points)", out.display(), rows.len());
    if let Some(path) = report_path {
        write_json(path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn estimate(
    histogram: &Path,
    dark: Option<&Path>,
    order: u32,
    mode: EstimatorModeArg,
    pixels: Option<u32>,
    resamples: u32,
    seed: u64,
    correct_p: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let (signal, meta) = load_histogram::<f64>(histogram)?;
    let pixels = pixels
        .or_else(|| meta.detector.as_ref().map(|d| d.pixels))
        .unwrap_or(400);
    let mode = mode.into();
    let point = match dark {
        Some(dark_path) => {
            let (dark, _) = load_histogram::<f64>(dark_path)?;
            let difference = subtract_dark(&signal, &dark)?;
            let mut point = g_from_histogram(&difference, order, pixels, mode)?;
            point.std_error = bootstrap_subtracted_std_error(
                &signal, &dark, order, pixels, mode, resamples, seed,
            )?;
            point
        }
        None => {
            let mut point = g_from_histogram(&signal, order, pixels, mode)?;
            point.std_error = bootstrap_std_error(&signal, order, pixels, mode, resamples, seed)?;
            point
        }
    };
    let mut record = EstimateRecord::new(&point);
    if let Some(p) = correct_p {
        if order != 2 {
            return Err(Error::InvalidInput(format!(
                "the crosstalk correction applies to order 2 only, not order {order}"
            )));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "the crosstalk strength must lie in [0, 1], got {p}"
            )));
        }
        record = correct_record(&record, p);
        if record.g < 0.0 {
            eprintln!(
                "warning: corrected value {} is negative; the crosstalk model cannot explain \
                 this histogram",
                record.g
            );
        }
    }
    match out {
        Some(path) => {
            write_json(path, &record)?;
            println!("wrote {}", path.display());
        }
        None => print_json(&record)?,
    }
    Ok(())
}

pub fn fit(curve: &Path, model: CurveModelArg, which: WhichRows, out: Option<&Path>) -> Result<()> {
    let rows = read_curve_csv::<f64>(curve)?;
    let points: Vec<CurvePoint<f64>> = rows
        .iter()
        .filter(|r| which.keeps(r.corrected))
        .map(|r| r.point())
        .collect();
    if points.is_empty() {
        return Err(Error::InvalidInput(format!(
            "{} has no rows matching the requested subset",
            curve.display()
        )));
    }
    let result = fit_curve(&points, model.into())?;
    if !result.converged {
        eprintln!(
            "warning: fit stopped after {} iterations without converging",
            result.iterations
        );
    }
    match out {
        Some(path) => {
            write_json(path, &result)?;
            print_fit_summary(&result);
            println!("wrote {}", path.display());
        }
        None => print_json(&result)?,
    }
    Ok(())
}

pub fn pipeline(
    config: &Path,
    out: &Path,
    curve_out: Option<&Path>,
    overrides: &Overrides,
) -> Result<()> {
    let mut config: PipelineConfig = load_config(config)?;
    overrides.apply_pipeline(&mut config)?;
    let seed = require_seed(config.seed)?;
    config.detector.validate()?;
    let report = pipeline_report(&config, seed)?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    println!(
        "crosstalk strength {} +- {} (reference cod_r2 {})",
        report.crosstalk_strength,
        report.crosstalk_strength_std_error,
        report.reference.fit.cod_r2
    );
    for record in &report.subject.corrected {
        println!(
            "subject mu {}: corrected g{} = {} +- {}",
            record.mu, record.l, record.g, record.std_error
        );
    }
    print!("subject raw fit: ");
    print_fit_summary(&report.subject.fit_raw);
    print!("subject corrected fit: ");
    print_fit_summary(&report.subject.fit_corrected);
    write_json(out, &report)?;
    println!("wrote {}", out.display());
    if let Some(path) = curve_out {
        let mut rows: Vec<CurveRecord<f64>> = report
            .subject
            .points
            .iter()
            .map(|p| CurveRecord {
                mu: p.estimate.mu,
                g: p.estimate.g,
                sigma: p.estimate.std_error,
                corrected: false,
            })
            .collect();
        rows.extend(report.subject.corrected.iter().map(|r| CurveRecord {
            mu: r.mu,
            g: r.g,
            sigma: r.std_error,
            corrected: true,
        }));
        write_curve_csv(path, &rows)?;
        println!("wrote {} ({} rows)", path.display(), rows.len());
    }
    Ok(())
}

pub fn discretize(amplitudes: &Path, unit_amplitude: f64, out: &Path) -> Result<()> {
    let pulses = read_amplitudes::<f64>(amplitudes)?;
    let hist = discretize_amplitudes(&pulses, unit_amplitude)?;
    let meta = HistogramMeta {
        unit_amplitude: Some(unit_amplitude),
        ..HistogramMeta::new(&hist)
    };
    save_histogram(out, &hist, &meta)?;
    println!(
        "wrote {} ({} pulses, {} occupied levels)",
        out.display(),
        hist.trials(),
        hist.iter().count()
    );
    Ok(())
}

fn print_fit_summary(fit: &FitResult<f64>) {
    let pairs: Vec<String> = fit
        .model
        .parameter_names()
        .iter()
        .zip(fit.params.iter().zip(&fit.std_errors))
        .map(|(name, (value, err))| format!("{name} = {value} +- {err}"))
        .collect();
    println!(
        "{} (cod_r2 {}, {} iterations{})",
        pairs.join(", "),
        fit.cod_r2,
        fit.iterations,
        if fit.converged { "" } else { ", not converged" }
    );
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing output: {e}")))?;
    println!("{text}");
    Ok(())
}

/// The command-line surface. Kept as data so both `main` and tests can
/// drive it.
#[derive(Debug, clap::Subcommand)]
pub enum Command {
    /// Simulate detector pulses and write the fired-pixel histogram.
    Simulate {
        /// TOML run configuration.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Block the source and record dark counts only.
        #[arg(long)]
        dark_only: bool,
        /// Histogram CSV to write (sidecar goes next to it).
        #[arg(long, default_value = "histogram.csv")]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep the source intensity and estimate the correlation at each
    /// point, dark-subtracting every histogram.
    Sweep {
        /// TOML run configuration; must provide a source and mu_grid.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Curve CSV to write.
        #[arg(long, default_value = "curve.csv")]
        out: PathBuf,
        /// Optional JSON report with per-point detail and the full
        /// configuration.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Estimate a normalized correlation from a saved histogram.
    Estimate {
        /// Histogram CSV (with sidecar) to analyze.
        #[arg(long)]
        histogram: PathBuf,
        /// Paired dark-run histogram to subtract first.
        #[arg(long)]
        dark: Option<PathBuf>,
        /// Correlation order l >= 2.
        #[arg(long, default_value_t = 2)]
        order: u32,
        /// Finite-pixel correction on or off.
        #[arg(long, value_enum, default_value_t = EstimatorModeArg::ExactM)]
        estimator_mode: EstimatorModeArg,
        /// Pixel count for the finite-pixel correction (default: the
        /// sidecar's detector, else 400).
        #[arg(long)]
        pixels: Option<u32>,
        /// Bootstrap resamples for the standard error (>= 100).
        #[arg(long, default_value_t = 200)]
        resamples: u32,
        /// Seed for the bootstrap resampler.
        #[arg(long)]
        seed: u64,
        /// Apply the second-order crosstalk correction with this strength.
        #[arg(long)]
        correct_p: Option<f64>,
        /// Write the estimate record here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a model to a saved curve.
    Fit {
        /// Curve CSV produced by sweep or pipeline.
        #[arg(long)]
        curve: PathBuf,
        /// Model to fit.
        #[arg(long, value_enum)]
        model: CurveModelArg,
        /// Row subset to fit.
        #[arg(long, value_enum, default_value_t = WhichRows::All)]
        which: WhichRows,
        /// Write the fit result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full calibration: a reference sweep fixes the crosstalk
    /// strength, then the subject sweep is corrected with it.
    Pipeline {
        /// TOML pipeline configuration with [reference] and [subject].
        #[arg(short, long)]
        config: PathBuf,
        /// Report JSON to write.
        #[arg(long, default_value = "report.json")]
        out: PathBuf,
        /// Optional curve CSV with the subject's raw and corrected rows.
        #[arg(long)]
        curve_out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Convert raw pulse amplitudes to a fired-pixel histogram.
    Discretize {
        /// Single-column amplitude CSV.
        #[arg(long)]
        amplitudes: PathBuf,
        /// Amplitude of a single fired pixel.
        #[arg(long)]
        unit_amplitude: f64,
        /// Histogram CSV to write.
        #[arg(long, default_value = "histogram.csv")]
        out: PathBuf,
    },
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            dark_only,
            out,
            overrides,
        } => simulate(config.as_deref(), dark_only, &out, &overrides),
        Command::Sweep {
            config,
            out,
            report,
            overrides,
        } => sweep(config.as_deref(), &out, report.as_deref(), &overrides),
        Command::Estimate {
            histogram,
            dark,
            order,
            estimator_mode,
            pixels,
            resamples,
            seed,
            correct_p,
            out,
        } => estimate(
            &histogram,
            dark.as_deref(),
            order,
            estimator_mode,
            pixels,
            resamples,
            seed,
            correct_p,
            out.as_deref(),
        ),
        Command::Fit {
            curve,
            model,
            which,
            out,
        } => fit(&curve, model, which, out.as_deref()),
        Command::Pipeline {
            config,
            out,
            curve_out,
            overrides,
        } => pipeline(&config, &out, curve_out.as_deref(), &overrides),
        Command::Discretize {
            amplitudes,
            unit_amplitude,
            out,
        } => discretize(&amplitudes, unit_amplitude, &out),
    }
}
