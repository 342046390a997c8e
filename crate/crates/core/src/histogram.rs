//! Pulse-count histograms.
//!
//! A histogram records how many of `trials` detector pulses produced each
//! fired-pixel count `k`. Raw simulation output has nonnegative integer
//! tallies summing exactly to `trials`; dark subtraction produces per-bin
//! differences that may be negative and need not sum to anything in
//! particular, which the `signed` flag tracks so downstream consumers can
//! refuse operations that only make sense on raw data.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CountHistogram<R: Real> {
    counts: BTreeMap<u32, R>,
    trials: u64,
    signed: bool,
    clamped_crosstalk_trials: u64,
}

impl<R: Real> CountHistogram<R> {
    /// Histogram of integer tallies. The tallies must sum to `trials` exactly;
    /// anything else means pulses were lost or double-counted upstream.
    pub fn raw(counts: BTreeMap<u32, u64>, trials: u64) -> Result<Self> {
        let total: u64 = counts.values().sum();
        if total != trials {
            return Err(Error::InvalidInput(format!(
                "tallies sum to {total} but {trials} trials were recorded"
            )));
        }
        Ok(Self {
            counts: counts
                .into_iter()
                .filter(|&(_, n)| n > 0)
                .map(|(k, n)| (k, R::from_count(n)))
                .collect(),
            trials,
            signed: false,
            clamped_crosstalk_trials: 0,
        })
    }

    /// Histogram of nonnegative real weights, e.g. an exact expected
    /// distribution scaled to `trials`. Weights must total `trials` to a
    /// relative 1e-6.
    pub fn weighted(counts: BTreeMap<u32, R>, trials: u64) -> Result<Self> {
        let mut total = R::zero();
        for (&k, &w) in &counts {
            if !(w >= R::zero()) || !w.is_finite() {
                return Err(Error::InvalidInput(format!("weight at k={k} is {w}")));
            }
            total += w;
        }
        let expected = R::from_count(trials);
        if (total - expected).abs() > expected.max(R::one()) * R::of(1e-6) {
            return Err(Error::InvalidInput(format!(
                "weights sum to {total} but {trials} trials were recorded"
            )));
        }
        Ok(Self {
            counts,
            trials,
            signed: false,
            clamped_crosstalk_trials: 0,
        })
    }

    /// Assembles a histogram whose invariants the caller has already
    /// established (simulation tallies, dark-subtraction differences).
    pub(crate) fn from_parts(
        counts: BTreeMap<u32, R>,
        trials: u64,
        signed: bool,
        clamped_crosstalk_trials: u64,
    ) -> Self {
        Self {
            counts,
            trials,
            signed,
            clamped_crosstalk_trials,
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    /// True for dark-subtracted data, whose bins may be negative.
    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Pulses whose crosstalk add probability had to be clamped to 1 during
    /// simulation; nonzero values mean the linear crosstalk model was pushed
    /// outside its domain.
    pub fn clamped_crosstalk_trials(&self) -> u64 {
        self.clamped_crosstalk_trials
    }

    pub(crate) fn add_clamped_crosstalk_trials(&mut self, n: u64) {
        self.clamped_crosstalk_trials += n;
    }

    /// Tally (or weight, or signed difference) at fired-pixel count `k`.
    pub fn count(&self, k: u32) -> R {
        self.counts.get(&k).copied().unwrap_or_else(R::zero)
    }

    /// Nonzero bins in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (u32, R)> + '_ {
        self.counts.iter().map(|(&k, &n)| (k, n))
    }

    /// Largest `k` with a nonzero bin.
    pub fn max_level(&self) -> u32 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Folds another run of the same experiment into this one. Only raw
    /// histograms merge; a signed difference is not a set of pulses.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.signed || other.signed {
            return Err(Error::SignedHistogram(
                "merge requires raw histograms".into(),
            ));
        }
        for (k, n) in other.iter() {
            *self.counts.entry(k).or_insert_with(R::zero) += n;
        }
        self.trials += other.trials;
        self.clamped_crosstalk_trials += other.clamped_crosstalk_trials;
        Ok(())
    }

    /// Sample mean of the fired-pixel count, `sum_k k N_k / trials`.
    pub fn mean_counts(&self) -> R {
        self.weighted_sum(|k| R::from_count(k as u64))
    }

    /// `l`-th factorial moment `sum_k k(k-1)...(k-l+1) N_k / trials`.
    pub fn factorial_moment(&self, l: u32) -> R {
        self.weighted_sum(|k| {
            if (k as u64) < l as u64 {
                return R::zero();
            }
            let mut v = R::one();
            for i in 0..l {
                v = v * R::from_count((k - i) as u64);
            }
            v
        })
    }

    fn weighted_sum(&self, f: impl Fn(u32) -> R) -> R {
        let total: R = self.counts.iter().map(|(&k, &n)| f(k) * n).sum();
        total / R::from_count(self.trials)
    }
}
