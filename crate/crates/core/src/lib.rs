//! Simulation and analysis of photon counting with a multi-pixel
//! avalanche detector.
//!
//! The crate models the full measurement chain: a light source with known
//! photon-number statistics ([`sources`]), a finite array of binary pixels
//! with limited efficiency, dark counts, and optical crosstalk
//! ([`detector`]), estimators that recover normalized correlation functions
//! `g^(l)` from the resulting pulse-count histograms ([`estimator`]), and
//! weighted fits of correlation-versus-intensity curves ([`fitting`]).
//! [`io`] pins down the on-disk formats and [`streams`] the random-stream
//! layout that makes every simulation reproducible from a single seed.
//!
//! All statistics are generic over the floating-point scalar through
//! [`scalar::Real`]; the aliases below fix `f64`, which is what the
//! command-line tools and most callers want.

pub mod detector;
pub mod error;
pub mod estimator;
pub mod fitting;
pub mod histogram;
pub mod io;
pub mod scalar;
pub mod sources;
pub mod streams;

/// Default floating-point scalar.
pub type Scalar = f64;
/// Photon source specification over [`Scalar`].
pub type Source = sources::PhotonSourceSpec<Scalar>;
/// Detector configuration over [`Scalar`].
pub type Detector = detector::DetectorConfig<Scalar>;
/// Pulse-count histogram over [`Scalar`].
pub type Histogram = histogram::CountHistogram<Scalar>;
/// Correlation estimate over [`Scalar`].
pub type Estimate = estimator::CorrelationEstimate<Scalar>;
/// A correlation curve over [`Scalar`].
pub type Curve = Vec<fitting::CurvePoint<Scalar>>;
/// Fit output over [`Scalar`].
pub type Fit = fitting::FitResult<Scalar>;

pub use error::{Error, Result};
