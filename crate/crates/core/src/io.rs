//! File formats: histogram CSV with a JSON sidecar, amplitude lists, curve
//! CSV, and JSON records for estimates and fits.
//!
//! Floating-point values are written with Rust's shortest round-trip
//! representation and parsed back as `f64`, so a save/load cycle reproduces
//! every bit. The histogram CSV holds only `k,count` rows; everything else
//! about a run (trial count, signedness, provenance) lives in a sidecar
//! named by swapping the extension for `.meta.json`.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::detector::DetectorConfig;
use crate::error::{Error, Result};
use crate::estimator::{CorrelationEstimate, EstimatorMode};
use crate::fitting::CurvePoint;
use crate::histogram::CountHistogram;
use crate::scalar::Real;
use crate::sources::PhotonSourceSpec;

pub const HISTOGRAM_META_SCHEMA: &str = "photocount.histogram.v1";

/// Sidecar describing a histogram CSV: the invariants needed to rebuild the
/// in-memory histogram plus whatever provenance the producer had.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct HistogramMeta<R: Real> {
    pub schema: String,
    pub trials: u64,
    pub signed: bool,
    pub clamped_crosstalk_trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PhotonSourceSpec<R>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detector: Option<DetectorConfig<R>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_amplitude: Option<R>,
}

impl<R: Real> HistogramMeta<R> {
    pub fn new(hist: &CountHistogram<R>) -> Self {
        Self {
            schema: HISTOGRAM_META_SCHEMA.into(),
            trials: hist.trials(),
            signed: hist.is_signed(),
            clamped_crosstalk_trials: hist.clamped_crosstalk_trials(),
            seed: None,
            source: None,
            detector: None,
            unit_amplitude: None,
        }
    }
}

/// JSON shape of a single correlation estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub struct EstimateRecord<R: Real> {
    pub l: u32,
    pub g: R,
    pub std_error: R,
    pub mu: R,
    pub mode: EstimatorMode,
    pub corrected: bool,
    #[serde(rename = "P_used")]
    pub p_used: Option<R>,
}

impl<R: Real> EstimateRecord<R> {
    pub fn new(est: &CorrelationEstimate<R>) -> Self {
        Self {
            l: est.order,
            g: est.g,
            std_error: est.std_error,
            mu: est.mean_counts,
            mode: est.mode,
            corrected: false,
            p_used: None,
        }
    }
}

/// One row of a curve CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRecord<R: Real> {
    pub mu: R,
    pub g: R,
    pub sigma: R,
    pub corrected: bool,
}

impl<R: Real> CurveRecord<R> {
    pub fn point(&self) -> CurvePoint<R> {
        CurvePoint {
            mu: self.mu,
            g: self.g,
            sigma: self.sigma,
        }
    }
}

/// Sidecar path for a histogram CSV: the extension becomes `.meta.json`.
pub fn meta_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("meta.json")
}

/// Writes the histogram CSV and its sidecar. The sidecar's structural
/// fields are taken from the histogram itself; `meta` contributes the
/// provenance fields.
pub fn save_histogram<R: Real + Serialize>(
    csv_path: &Path,
    hist: &CountHistogram<R>,
    meta: &HistogramMeta<R>,
) -> Result<()> {
    let mut out = String::from("k,count\n");
    for (k, n) in hist.iter() {
        out.push_str(&format!("{k},{n}\n"));
    }
    write_file(csv_path, out.as_bytes())?;
    let meta = HistogramMeta {
        schema: HISTOGRAM_META_SCHEMA.into(),
        trials: hist.trials(),
        signed: hist.is_signed(),
        clamped_crosstalk_trials: hist.clamped_crosstalk_trials(),
        ..meta.clone()
    };
    write_json(&meta_path(csv_path), &meta)
}

/// Reads a histogram CSV together with its sidecar.
pub fn load_histogram<R: Real + DeserializeOwned>(
    csv_path: &Path,
) -> Result<(CountHistogram<R>, HistogramMeta<R>)> {
    let meta: HistogramMeta<R> = read_json(&meta_path(csv_path))?;
    let text = fs::read_to_string(csv_path)?;
    let mut counts = std::collections::BTreeMap::new();
    for (k, value) in parse_csv(csv_path, &text, &["k", "count"])? {
        let level = parse_field::<u32>(csv_path, k.0, "k", k.1)?;
        let n = parse_real::<R>(csv_path, k.0, "count", value)?;
        if counts.insert(level, n).is_some() {
            return Err(Error::Parse(format!(
                "{}: duplicate histogram level k={level}",
                csv_path.display()
            )));
        }
    }
    if !meta.signed {
        let total: R = counts.values().copied().sum();
        let expected = R::from_count(meta.trials);
        if (total - expected).abs() > expected.max(R::one()) * R::of(1e-6) {
            return Err(Error::Parse(format!(
                "{}: counts sum to {total} but the sidecar records {} trials",
                csv_path.display(),
                meta.trials
            )));
        }
    }
    let hist = CountHistogram::from_parts(
        counts,
        meta.trials,
        meta.signed,
        meta.clamped_crosstalk_trials,
    );
    Ok((hist, meta))
}

/// Reads a single-column amplitude CSV (header `amplitude`).
pub fn read_amplitudes<R: Real>(path: &Path) -> Result<Vec<R>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end() == "amplitude" => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: expected header 'amplitude', found {:?}",
                path.display(),
                other.map(|(_, h)| h).unwrap_or("")
            )))
        }
    }
    let mut amps = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        amps.push(parse_real::<R>(path, idx + 1, "amplitude", line)?);
    }
    Ok(amps)
}

pub fn write_amplitudes<R: Real>(path: &Path, amplitudes: &[R]) -> Result<()> {
    let mut out = String::from("amplitude\n");
    for a in amplitudes {
        out.push_str(&format!("{a}\n"));
    }
    write_file(path, out.as_bytes())
}

/// Bins analog pulse amplitudes into fired-pixel counts: `k` is `a /
/// unit_amplitude` rounded to the nearest integer, half-way cases rounding
/// up. Amplitudes must be nonnegative; the error names the offending record
/// (1-based, excluding the header).
pub fn discretize_amplitudes<R: Real>(
    amplitudes: &[R],
    unit_amplitude: R,
) -> Result<CountHistogram<R>> {
    if !(unit_amplitude > R::zero() && unit_amplitude.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "unit amplitude must be positive, got {unit_amplitude}"
        )));
    }
    let mut counts = std::collections::BTreeMap::new();
    for (i, &a) in amplitudes.iter().enumerate() {
        if !(a >= R::zero()) {
            return Err(Error::InvalidInput(format!(
                "record {}: amplitude {a} is negative",
                i + 1
            )));
        }
        let k = (a / unit_amplitude + R::of(0.5)).floor().to_f64_lossy();
        if k > u32::MAX as f64 {
            return Err(Error::InvalidInput(format!(
                "record {}: amplitude {a} is beyond any plausible pixel count",
                i + 1
            )));
        }
        *counts.entry(k as u32).or_insert(0u64) += 1;
    }
    CountHistogram::raw(counts, amplitudes.len() as u64)
}

/// Writes curve rows as `mu,g,sigma,corrected` with the flag as 0/1.
pub fn write_curve_csv<R: Real>(path: &Path, rows: &[CurveRecord<R>]) -> Result<()> {
    let mut out = String::from("mu,g,sigma,corrected\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.mu, r.g, r.sigma, r.corrected as u8));
    }
    write_file(path, out.as_bytes())
}

pub fn read_curve_csv<R: Real>(path: &Path) -> Result<Vec<CurveRecord<R>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (first, rest) in parse_csv(path, &text, &["mu", "g", "sigma", "corrected"])? {
        let fields: Vec<&str> = rest.split(',').collect();
        let line = first.0;
        if fields.len() != 3 {
            return Err(Error::Parse(format!(
                "{}:{line}: expected 4 comma-separated fields",
                path.display()
            )));
        }
        let corrected = match fields[2].trim_end() {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse(format!(
                    "{}:{line}: corrected flag must be 0 or 1, found {other:?}",
                    path.display()
                )))
            }
        };
        rows.push(CurveRecord {
            mu: parse_real(path, line, "mu", first.1)?,
            g: parse_real(path, line, "g", fields[0])?,
            sigma: parse_real(path, line, "sigma", fields[1])?,
            corrected,
        });
    }
    Ok(rows)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}

/// Splits CSV text into `((line_number, first_field), rest_of_line)` pairs
/// after checking the header. Blank lines are ignored.
fn parse_csv<'t>(
    path: &Path,
    text: &'t str,
    header: &[&str],
) -> Result<Vec<((usize, &'t str), &'t str)>> {
    let expected = header.join(",");
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == expected => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: expected header '{expected}', found {:?}",
                path.display(),
                other.map(|(_, h)| h).unwrap_or("")
            )))
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let Some((first, rest)) = line.split_once(',') else {
            return Err(Error::Parse(format!(
                "{}:{line_no}: expected comma-separated fields",
                path.display()
            )));
        };
        rows.push(((line_no, first), rest));
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T> {
    raw.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "{}:{line}: cannot parse {name} from {raw:?}",
            path.display()
        ))
    })
}

fn parse_real<R: Real>(path: &Path, line: usize, name: &str, raw: &str) -> Result<R> {
    let v: f64 = parse_field(path, line, name, raw)?;
    if !v.is_finite() {
        return Err(Error::Parse(format!(
            "{}:{line}: {name} must be finite, found {raw:?}",
            path.display()
        )));
    }
    Ok(R::of(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::subtract_dark;
    use tempfile::tempdir;

    fn hist(pairs: &[(u32, u64)], trials: u64) -> CountHistogram<f64> {
        CountHistogram::raw(pairs.iter().copied().collect(), trials).unwrap()
    }

    #[test]
    fn histogram_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let h = hist(&[(0, 990), (1, 8), (2, 2)], 1000);
        let mut meta = HistogramMeta::new(&h);
        meta.seed = Some(42);
        meta.source = Some(PhotonSourceSpec::Coherent { mu: 0.01 });
        meta.detector = Some(DetectorConfig::default());
        save_histogram(&path, &h, &meta).unwrap();
        let (back, back_meta) = load_histogram::<f64>(&path).unwrap();
        assert_eq!(back, h);
        assert_eq!(back_meta, meta);
        assert!(dir.path().join("run.meta.json").exists());
        let csv = fs::read_to_string(&path).unwrap();
        assert_eq!(csv, "k,count\n0,990\n1,8\n2,2\n");
    }

    #[test]
    fn signed_histograms_round_trip_their_fractional_bins() {
        let signal = hist(&[(0, 990), (1, 8), (2, 2)], 1000);
        let dark = hist(&[(0, 2985), (1, 15)], 3000);
        let diff = subtract_dark(&signal, &dark).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("diff.csv");
        save_histogram(&path, &diff, &HistogramMeta::new(&diff)).unwrap();
        let (back, meta) = load_histogram::<f64>(&path).unwrap();
        assert!(meta.signed);
        assert_eq!(back, diff);
    }

    #[test]
    fn unsigned_load_checks_the_trial_total() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let h = hist(&[(0, 9), (1, 1)], 10);
        save_histogram(&path, &h, &HistogramMeta::new(&h)).unwrap();
        fs::write(&path, "k,count\n0,9\n1,2\n").unwrap();
        assert!(matches!(load_histogram::<f64>(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn histogram_csv_rejects_malformed_rows() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let h = hist(&[(0, 10)], 10);
        save_histogram(&path, &h, &HistogramMeta::new(&h)).unwrap();
        fs::write(&path, "k,count\n0,ten\n").unwrap();
        let err = load_histogram::<f64>(&path).unwrap_err().to_string();
        assert!(err.contains(":2:"), "{err}");
        fs::write(&path, "count,k\n10,0\n").unwrap();
        assert!(load_histogram::<f64>(&path).is_err());
        fs::write(&path, "k,count\n0,5\n0,5\n").unwrap();
        let err = load_histogram::<f64>(&path).unwrap_err().to_string();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn missing_sidecar_is_an_io_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("orphan.csv");
        fs::write(&path, "k,count\n0,1\n").unwrap();
        assert!(matches!(load_histogram::<f64>(&path), Err(Error::Io(_))));
    }

    #[test]
    fn amplitude_files_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("pulses.csv");
        let amps = vec![0.03, 1.02, 2.5000000000000004, 0.97];
        write_amplitudes(&path, &amps).unwrap();
        assert_eq!(read_amplitudes::<f64>(&path).unwrap(), amps);
        fs::write(&path, "voltage\n1.0\n").unwrap();
        assert!(read_amplitudes::<f64>(&path).is_err());
    }

    #[test]
    fn discretization_rounds_half_up() {
        let h = discretize_amplitudes(&[0.49, 0.5, 1.49, 1.5, 0.0], 1.0).unwrap();
        assert_eq!(h.count(0), 2.0);
        assert_eq!(h.count(1), 2.0);
        assert_eq!(h.count(2), 1.0);
        assert_eq!(h.trials(), 5);
        // The unit amplitude rescales the bin edges.
        let h = discretize_amplitudes(&[2.3, 2.6], 2.0).unwrap();
        assert_eq!(h.count(1), 2.0);
    }

    #[test]
    fn discretization_names_the_bad_record() {
        let err = discretize_amplitudes(&[1.0, 0.5, -0.2], 1.0)
            .unwrap_err()
            .to_string();
        assert!(err.contains("record 3"), "{err}");
        assert!(discretize_amplitudes(&[1.0], 0.0).is_err());
    }

    #[test]
    fn curve_files_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        let rows = vec![
            CurveRecord { mu: 0.05, g: 9.1, sigma: 0.4, corrected: false },
            CurveRecord { mu: 0.05, g: 8.7, sigma: 0.37, corrected: true },
            CurveRecord { mu: 1.0, g: 1.41, sigma: 0.003, corrected: false },
        ];
        write_curve_csv(&path, &rows).unwrap();
        assert_eq!(read_curve_csv::<f64>(&path).unwrap(), rows);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("mu,g,sigma,corrected\n"));
        assert!(text.contains(",1\n"));
        fs::write(&path, "mu,g,sigma,corrected\n1.0,1.0,0.1,yes\n").unwrap();
        assert!(read_curve_csv::<f64>(&path).is_err());
    }

    #[test]
    fn estimate_records_serialize_with_capitalized_p_field() {
        let est = CorrelationEstimate {
            order: 2,
            g: 1.05,
            std_error: 0.01,
            mean_counts: 0.4,
            mode: EstimatorMode::ExactM,
        };
        let mut record = EstimateRecord::new(&est);
        let json = serde_json::to_string(&record).unwrap();
        assert!(json.contains(r#""P_used":null"#), "{json}");
        assert!(json.contains(r#""mode":"exact_m""#));
        record.corrected = true;
        record.p_used = Some(0.177);
        let json = serde_json::to_string_pretty(&record).unwrap();
        let back: EstimateRecord<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, record);
    }
}
