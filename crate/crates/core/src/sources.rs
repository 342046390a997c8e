//! Photon-number statistics of the light states we simulate.
//!
//! Each [`PhotonSourceSpec`] provides an exact probability mass function, a
//! sampler driven by an explicit random stream, and analytic factorial-moment
//! machinery for the normalized correlation functions
//! `g^(l) = <n(n-1)...(n-l+1)> / <n>^l`. The degenerate squeezed state comes
//! in two flavors: the multimode "supermode" model, where the detected pair
//! number is Poissonian and every pair contributes two photons, and the exact
//! single-mode squeezed-vacuum distribution over even photon numbers.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Iteration cap for truncated-sum evaluations; a distribution that has not
/// accumulated its mass by then is out of this crate's operating range.
const MAX_SUPPORT_SCAN: u64 = 20_000_000;

/// Tail rule for truncated sums: extend the support until the cumulative
/// mass exceeds `1 - TAIL_EPSILON`.
const TAIL_EPSILON: f64 = 1e-12;

/// A light state's photon-number distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[serde(bound(serialize = "R: Serialize", deserialize = "R: Deserialize<'de>"))]
pub enum PhotonSourceSpec<R: Real> {
    /// Poissonian light with mean `mu` photons per pulse.
    Coherent { mu: R },
    /// Signal arm of a pair source in the multimode (Poissonian pair-number)
    /// regime: one photon per pair, so the photon number is Poisson(mu_pairs).
    TwinBeamSignal { mu_pairs: R },
    /// Degenerate pair source in the multimode regime: two photons per pair,
    /// photon number is twice a Poisson(mu_pairs) variable (even only).
    DegenerateSqueezedSupermode { mu_pairs: R },
    /// Exact single-mode squeezed vacuum with squeezing parameter `r`:
    /// mass at `2j` is `(2j)! tanh(r)^{2j} / (4^j (j!)^2 cosh r)`.
    SingleModeSqueezedExact { r: R },
    /// `modes`-mode thermal light with total mean `mu` (negative binomial;
    /// one mode gives the Bose-Einstein distribution).
    Thermal { mu: R, modes: u32 },
}

impl<R: Real> PhotonSourceSpec<R> {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |x: R, what: &str| {
            if x >= R::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSource(format!("{what} must be finite and >= 0, got {x}")))
            }
        };
        match self {
            Self::Coherent { mu } => nonneg(*mu, "mu"),
            Self::TwinBeamSignal { mu_pairs } | Self::DegenerateSqueezedSupermode { mu_pairs } => {
                nonneg(*mu_pairs, "mu_pairs")
            }
            Self::SingleModeSqueezedExact { r } => nonneg(*r, "r"),
            Self::Thermal { mu, modes } => {
                if *modes < 1 {
                    return Err(Error::InvalidSource("modes must be >= 1".into()));
                }
                nonneg(*mu, "mu")
            }
        }
    }

    /// The same family of state with its mean photon number multiplied by
    /// `factor`, as when the pump or an attenuator is adjusted. For the
    /// exact squeezed state the squeezing parameter moves along
    /// `sinh^2 r' = factor sinh^2 r`; everything else scales its mean
    /// parameter directly.
    pub fn with_mean_scaled(&self, factor: R) -> Result<Self> {
        self.validate()?;
        if !(factor > R::zero() && factor.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "intensity scale must be positive, got {factor}"
            )));
        }
        Ok(match self {
            Self::Coherent { mu } => Self::Coherent { mu: *mu * factor },
            Self::TwinBeamSignal { mu_pairs } => Self::TwinBeamSignal {
                mu_pairs: *mu_pairs * factor,
            },
            Self::DegenerateSqueezedSupermode { mu_pairs } => {
                Self::DegenerateSqueezedSupermode {
                    mu_pairs: *mu_pairs * factor,
                }
            }
            Self::SingleModeSqueezedExact { r } => Self::SingleModeSqueezedExact {
                r: (factor.sqrt() * r.sinh()).asinh(),
            },
            Self::Thermal { mu, modes } => Self::Thermal {
                mu: *mu * factor,
                modes: *modes,
            },
        })
    }

    /// Exact mean photon number per pulse.
    pub fn mean_photons(&self) -> R {
        match self {
            Self::Coherent { mu } => *mu,
            Self::TwinBeamSignal { mu_pairs } => *mu_pairs,
            Self::DegenerateSqueezedSupermode { mu_pairs } => R::of(2.0) * *mu_pairs,
            Self::SingleModeSqueezedExact { r } => {
                let s = r.sinh();
                s * s
            }
            Self::Thermal { mu, .. } => *mu,
        }
    }

    /// Probability of exactly `n` photons in a pulse.
    pub fn pmf(&self, n: u64) -> Result<R> {
        self.validate()?;
        Ok(match self {
            Self::Coherent { mu } => poisson_mass(*mu, n),
            Self::TwinBeamSignal { mu_pairs } => poisson_mass(*mu_pairs, n),
            Self::DegenerateSqueezedSupermode { mu_pairs } => {
                if n % 2 == 0 {
                    poisson_mass(*mu_pairs, n / 2)
                } else {
                    R::zero()
                }
            }
            Self::SingleModeSqueezedExact { r } => {
                if n % 2 == 0 {
                    squeezed_mass(*r, n / 2)
                } else {
                    R::zero()
                }
            }
            Self::Thermal { mu, modes } => negative_binomial_mass(*mu, *modes, n),
        })
    }

    /// Smallest `n` such that the cumulative mass through `n` exceeds
    /// `1 - 1e-12`; truncated sums over `0..=n` are then deterministic and
    /// accurate to the same order.
    pub fn tail_bound(&self) -> Result<u64> {
        self.validate()?;
        let mut bound = None;
        let mut cum = R::zero();
        let target = R::one() - R::of(TAIL_EPSILON);
        self.for_each_mass(|n, p| {
            cum += p;
            if cum > target {
                bound = Some(n);
                false
            } else {
                true
            }
        });
        bound.ok_or_else(|| {
            Error::InvalidInput("support scan exceeded the iteration cap".into())
        })
    }

    /// Normalized correlation function `g^(l)` from exact factorial moments,
    /// by closed form where one exists and truncated summation otherwise.
    pub fn analytic_g(&self, l: u32) -> Result<R> {
        self.validate()?;
        if l < 2 {
            return Err(Error::InvalidInput(format!("correlation order must be >= 2, got {l}")));
        }
        let mean = self.mean_photons();
        if mean <= R::zero() {
            return Err(Error::UndefinedCorrelation {
                order: l,
                reason: "source mean photon number is zero".into(),
            });
        }
        Ok(match self {
            // Poisson factorial moments are mu^l, so the ratio is exactly 1.
            Self::Coherent { .. } | Self::TwinBeamSignal { .. } => R::one(),
            Self::DegenerateSqueezedSupermode { mu_pairs } => {
                doubled_poisson_factorial_moment(*mu_pairs, l) / mean.powi(l as i32)
            }
            Self::SingleModeSqueezedExact { .. } => {
                if l == 2 {
                    // <n(n-1)> = 3 s^2 + s with s = sinh^2 r, so g2 = 3 + 1/s.
                    R::of(3.0) + mean.recip()
                } else {
                    self.truncated_factorial_moment(l) / mean.powi(l as i32)
                }
            }
            Self::Thermal { modes, .. } => {
                let m = R::from_count(*modes as u64);
                let mut g = R::one();
                for i in 0..l {
                    g = g * (m + R::from_count(i as u64)) / m;
                }
                g
            }
        })
    }

    /// Draw a photon number. Distribution matches [`Self::pmf`]; the result
    /// is a pure function of the stream state.
    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> Result<u64> {
        Ok(self.sampler()?.sample(rng))
    }

    /// Prebuilt sampler for hot loops (avoids re-deriving distribution
    /// constants every pulse).
    pub fn sampler(&self) -> Result<SourceSampler> {
        self.validate()?;
        Ok(match self {
            Self::Coherent { mu } => SourceSampler::poisson(mu.to_f64_lossy(), 1),
            Self::TwinBeamSignal { mu_pairs } => SourceSampler::poisson(mu_pairs.to_f64_lossy(), 1),
            Self::DegenerateSqueezedSupermode { mu_pairs } => {
                SourceSampler::poisson(mu_pairs.to_f64_lossy(), 2)
            }
            Self::SingleModeSqueezedExact { r } => {
                let t = r.to_f64_lossy().tanh();
                SourceSampler::SqueezedWalk {
                    ratio: t * t,
                    vacuum: 1.0 / r.to_f64_lossy().cosh(),
                }
            }
            Self::Thermal { mu, modes } => {
                let mu = mu.to_f64_lossy();
                if mu == 0.0 {
                    SourceSampler::Constant(0)
                } else {
                    let shape = *modes as f64;
                    SourceSampler::MixedPoisson(
                        Gamma::new(shape, mu / shape)
                            .map_err(|e| Error::InvalidSource(e.to_string()))?,
                    )
                }
            }
        })
    }

    /// Walk the support in order, passing `(n, pmf(n))` to `visit` until it
    /// returns `false` or the mass is numerically exhausted.
    fn for_each_mass(&self, mut visit: impl FnMut(u64, R) -> bool) {
        match self {
            Self::Coherent { mu } => poisson_masses(*mu, 1, &mut visit),
            Self::TwinBeamSignal { mu_pairs } => poisson_masses(*mu_pairs, 1, &mut visit),
            Self::DegenerateSqueezedSupermode { mu_pairs } => {
                poisson_masses(*mu_pairs, 2, &mut visit)
            }
            Self::SingleModeSqueezedExact { r } => {
                let t = r.tanh();
                let ratio = t * t;
                let mut p = r.cosh().recip();
                let mut j = 0u64;
                loop {
                    if !visit(2 * j, p) || 2 * j >= MAX_SUPPORT_SCAN {
                        return;
                    }
                    if !visit(2 * j + 1, R::zero()) {
                        return;
                    }
                    p = p * ratio * R::of((2 * j + 1) as f64) / R::of((2 * j + 2) as f64);
                    j += 1;
                }
            }
            Self::Thermal { mu, modes } => {
                let m = R::from_count(*modes as u64);
                let denom = m + *mu;
                let mut p = (m / denom).powi(*modes as i32);
                let step = *mu / denom;
                let mut n = 0u64;
                loop {
                    if !visit(n, p) || n >= MAX_SUPPORT_SCAN {
                        return;
                    }
                    p = p * step * (R::from_count(n) + m) / R::from_count(n + 1);
                    n += 1;
                }
            }
        }
    }

    /// `<n(n-1)...(n-l+1)>` by truncated summation. Because the factorial
    /// weight amplifies the tail, the walk runs to twice the support where
    /// the mass target is met (plus slack) rather than stopping there; the
    /// masses decay at least geometrically, so the leftover contribution is
    /// far below f64 resolution.
    fn truncated_factorial_moment(&self, l: u32) -> R {
        let mut sum = R::zero();
        let mut cum = R::zero();
        let mut mass_met_at: Option<u64> = None;
        let target = R::one() - R::of(1e-13);
        self.for_each_mass(|n, p| {
            cum += p;
            if n >= l as u64 {
                sum += p * falling_factorial(n, l);
            }
            match mass_met_at {
                None => {
                    if cum > target {
                        mass_met_at = Some(n);
                    }
                    true
                }
                Some(b) => n < 2 * b + 64,
            }
        });
        sum
    }
}

/// Poisson mass at `n`, computed by the stable product recurrence.
fn poisson_mass<R: Real>(mu: R, n: u64) -> R {
    if mu == R::zero() {
        return if n == 0 { R::one() } else { R::zero() };
    }
    let mut p = (-mu).exp();
    for i in 1..=n {
        p = p * mu / R::from_count(i);
    }
    p
}

/// Masses of `stride * Poisson(mu)`: the Poisson mass at `j` sits at
/// `n = stride * j`, zeros in between.
fn poisson_masses<R: Real>(mu: R, stride: u64, visit: &mut impl FnMut(u64, R) -> bool) {
    if mu == R::zero() {
        visit(0, R::one());
        return;
    }
    let mut p = (-mu).exp();
    let mut j = 0u64;
    loop {
        if !visit(stride * j, p) || stride * j >= MAX_SUPPORT_SCAN {
            return;
        }
        for extra in 1..stride {
            if !visit(stride * j + extra, R::zero()) {
                return;
            }
        }
        p = p * mu / R::from_count(j + 1);
        j += 1;
    }
}

/// Squeezed-vacuum mass at photon number `2j`.
fn squeezed_mass<R: Real>(r: R, j: u64) -> R {
    if r == R::zero() {
        return if j == 0 { R::one() } else { R::zero() };
    }
    let t = r.tanh();
    let ratio = t * t;
    let mut p = r.cosh().recip();
    for i in 0..j {
        p = p * ratio * R::of((2 * i + 1) as f64) / R::of((2 * i + 2) as f64);
    }
    p
}

/// Negative-binomial mass with `modes` modes and total mean `mu`.
fn negative_binomial_mass<R: Real>(mu: R, modes: u32, n: u64) -> R {
    if mu == R::zero() {
        return if n == 0 { R::one() } else { R::zero() };
    }
    let m = R::from_count(modes as u64);
    let denom = m + mu;
    let mut p = (m / denom).powi(modes as i32);
    let step = mu / denom;
    for i in 0..n {
        p = p * step * (R::from_count(i) + m) / R::from_count(i + 1);
    }
    p
}

fn falling_factorial<R: Real>(n: u64, l: u32) -> R {
    let mut v = R::one();
    for i in 0..l as u64 {
        v = v * R::from_count(n - i);
    }
    v
}

/// `E[(2J)(2J-1)...(2J-l+1)]` for `J ~ Poisson(mu)`: expand the falling
/// factorial of `2J` as a polynomial in `J`, then apply the Poisson raw
/// moments `E[J^p] = sum_k S2(p,k) mu^k` (Stirling numbers of the second
/// kind). Purely algebraic, so it cross-checks the truncated pmf sums.
fn doubled_poisson_factorial_moment<R: Real>(mu: R, l: u32) -> R {
    let mut coeffs: Vec<R> = vec![R::one()];
    for i in 0..l {
        let mut next = vec![R::zero(); coeffs.len() + 1];
        for (p, &c) in coeffs.iter().enumerate() {
            next[p + 1] += c * R::of(2.0);
            next[p] -= c * R::of(i as f64);
        }
        coeffs = next;
    }
    let top = (coeffs.len() - 1) as u32;
    let s2 = stirling2_table(top);
    coeffs
        .iter()
        .enumerate()
        .map(|(p, &c)| {
            let mut raw = R::zero(); // E[J^p]
            let mut mu_k = R::one();
            for k in 0..=p {
                raw += R::of(s2[p][k]) * mu_k;
                mu_k = mu_k * mu;
            }
            c * raw
        })
        .sum()
}

/// Stirling numbers of the second kind, rows `0..=pmax`.
fn stirling2_table(pmax: u32) -> Vec<Vec<f64>> {
    let n = pmax as usize + 1;
    let mut table = vec![vec![0.0; n]; n];
    table[0][0] = 1.0;
    for p in 1..n {
        for k in 1..=p {
            table[p][k] = k as f64 * table[p - 1][k] + table[p - 1][k - 1];
        }
    }
    table
}

/// Sampler with all distribution constants precomputed. Draws happen in `f64`
/// regardless of the spec's scalar type, so the generated photon numbers for
/// a given stream do not depend on the precision the estimates run at.
pub enum SourceSampler {
    Constant(u64),
    PoissonDraw { dist: Poisson<f64>, per_event: u64 },
    SqueezedWalk { ratio: f64, vacuum: f64 },
    MixedPoisson(Gamma<f64>),
}

impl SourceSampler {
    fn poisson(mu: f64, per_event: u64) -> Self {
        if mu == 0.0 {
            SourceSampler::Constant(0)
        } else {
            SourceSampler::PoissonDraw {
                dist: Poisson::new(mu).expect("validated mean"),
                per_event,
            }
        }
    }

    pub fn sample<G: Rng + ?Sized>(&self, rng: &mut G) -> u64 {
        match self {
            SourceSampler::Constant(n) => *n,
            SourceSampler::PoissonDraw { dist, per_event } => {
                per_event * dist.sample(rng) as u64
            }
            SourceSampler::SqueezedWalk { ratio, vacuum } => {
                // Inverse-CDF walk over pair number with the mass recurrence
                // p_{j+1} = p_j * ratio * (2j+1)/(2j+2).
                let u: f64 = rng.random();
                let mut p = *vacuum;
                let mut cum = p;
                let mut j = 0u64;
                while u >= cum && j < MAX_SUPPORT_SCAN {
                    p *= ratio * (2 * j + 1) as f64 / (2 * j + 2) as f64;
                    j += 1;
                    cum += p;
                }
                2 * j
            }
            SourceSampler::MixedPoisson(gamma) => {
                let rate = gamma.sample(rng);
                if rate > 0.0 {
                    Poisson::new(rate).expect("positive rate").sample(rng) as u64
                } else {
                    0
                }
            }
        }
    }
}
