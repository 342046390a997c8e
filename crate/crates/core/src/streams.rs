//! Deterministic random-stream splitting.
//!
//! A single master seed fans out into one independent ChaCha stream per
//! (trial, stage) pair. Because every trial owns its streams outright, trial
//! loops parallelize freely and partial tallies over disjoint trial ranges
//! merge to exactly the single-run result. The per-stage split also lets two
//! runs that differ in one stage only (say, dark counts on vs. off) share all
//! other randomness draw for draw.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stages within one simulated pulse that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    /// Photon-number draw from the source distribution.
    Source = 0,
    /// Loss thinning and pixel assignment.
    Detection = 1,
    /// Dark-avalanche count and placement.
    Dark = 2,
    /// Secondary-avalanche decisions.
    Crosstalk = 3,
}

const STAGES: u64 = 4;

/// The four per-trial random streams, one per [`Stage`].
pub struct TrialStreams {
    pub source: ChaCha8Rng,
    pub detection: ChaCha8Rng,
    pub dark: ChaCha8Rng,
    pub crosstalk: ChaCha8Rng,
}

impl TrialStreams {
    /// Streams for trial number `trial` under master seed `seed`.
    ///
    /// The stream id is `trial * 4 + stage`, so any two distinct
    /// (trial, stage) pairs get distinct ChaCha streams of the same key.
    pub fn for_trial(seed: u64, trial: u64) -> Self {
        let stage = |s: Stage| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial.wrapping_mul(STAGES).wrapping_add(s as u64));
            rng
        };
        TrialStreams {
            source: stage(Stage::Source),
            detection: stage(Stage::Detection),
            dark: stage(Stage::Dark),
            crosstalk: stage(Stage::Crosstalk),
        }
    }
}

/// Derive a run-level seed from a master seed and a small tag, so that one
/// configured seed can govern several internally independent simulations
/// (signal run, dark run, bootstrap, ...) without manual bookkeeping.
///
/// Uses the SplitMix64 finalizer for bit diffusion; the mapping is fixed and
/// part of the reproducibility contract.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut z = master ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn trial_streams_are_reproducible() {
        let mut a = TrialStreams::for_trial(42, 7);
        let mut b = TrialStreams::for_trial(42, 7);
        for _ in 0..16 {
            assert_eq!(a.source.random::<u64>(), b.source.random::<u64>());
            assert_eq!(a.crosstalk.random::<u64>(), b.crosstalk.random::<u64>());
        }
    }

    #[test]
    fn stages_and_trials_decorrelate() {
        let mut s = TrialStreams::for_trial(42, 7);
        let mut t = TrialStreams::for_trial(42, 8);
        let from_source: Vec<u64> = (0..4).map(|_| s.source.random()).collect();
        let from_dark: Vec<u64> = (0..4).map(|_| s.dark.random()).collect();
        let other_trial: Vec<u64> = (0..4).map(|_| t.source.random()).collect();
        assert_ne!(from_source, from_dark);
        assert_ne!(from_source, other_trial);
    }

    #[test]
    fn derived_seeds_are_stable_and_spread() {
        // Pinned values: changing them silently would break every seeded
        // artifact produced so far.
        assert_eq!(derive_seed(0, 0), 0);
        assert_eq!(derive_seed(42, 0), derive_seed(42, 0));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 1), derive_seed(43, 1));
        let spread: std::collections::BTreeSet<u64> =
            (0..1000).map(|t| derive_seed(123, t)).collect();
        assert_eq!(spread.len(), 1000);
    }
}
