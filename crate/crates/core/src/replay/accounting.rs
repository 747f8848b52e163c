//! Byte accounting for replay storage.
//!
//! A deduplicated buffer of `n` transitions keeps `N_frames + n - 1` raw
//! frames, `N_frames - 1` soft links per transition and one metadata record
//! per transition. A dummy buffer inlines the full frame stack in every
//! transition.

use serde::{Deserialize, Serialize};

use crate::envs::ObservationSpec;

/// Bytes of one soft link (a slot index into the frame store).
pub const LINK_BYTES: u64 = 4;
/// Bytes of one metadata record: action (4), reward (4), done flag (1).
pub const METADATA_BYTES: u64 = 9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayLayout {
    pub state_bytes: u64,
    pub n_frames: u64,
    pub link_bytes: u64,
    pub metadata_bytes: u64,
}

impl ReplayLayout {
    pub fn new(spec: &ObservationSpec) -> Self {
        Self {
            state_bytes: spec.state_bytes() as u64,
            n_frames: spec.n_frames as u64,
            link_bytes: LINK_BYTES,
            metadata_bytes: METADATA_BYTES,
        }
    }

    /// Marginal bytes of one more deduplicated transition.
    pub fn dedup_entry_bytes(&self) -> u64 {
        self.state_bytes + (self.n_frames - 1) * self.link_bytes + self.metadata_bytes
    }

    /// Fixed bytes of the frames that precede the oldest transition.
    pub fn dedup_base_bytes(&self) -> u64 {
        (self.n_frames - 1) * self.state_bytes
    }

    pub fn dummy_entry_bytes(&self) -> u64 {
        self.n_frames * self.state_bytes + self.metadata_bytes
    }
}

/// Footprint of `n` deduplicated transitions.
pub fn dedup_bytes(n: u64, layout: &ReplayLayout) -> u64 {
    if n == 0 {
        return 0;
    }
    (layout.n_frames + n - 1) * layout.state_bytes
        + (layout.n_frames - 1) * n * layout.link_bytes
        + n * layout.metadata_bytes
}

/// Footprint of `n` transitions with inlined frame stacks.
pub fn dummy_bytes(n: u64, layout: &ReplayLayout) -> u64 {
    n * layout.dummy_entry_bytes()
}

/// Largest transition count whose deduplicated footprint fits in `budget`.
pub fn capacity_for(budget: u64, layout: &ReplayLayout) -> u64 {
    let base = layout.dedup_base_bytes();
    let per = layout.dedup_entry_bytes();
    if budget < base + per {
        return 0;
    }
    let mut n = (budget - base) / per;
    // The closed form is exact; the loops only guard the boundary.
    while n > 0 && dedup_bytes(n, layout) > budget {
        n -= 1;
    }
    while dedup_bytes(n + 1, layout) <= budget {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atari() -> ReplayLayout {
        ReplayLayout::new(&ObservationSpec::atari_shaped())
    }

    #[test]
    fn dedup_footprint_hand_values() {
        let l = atari();
        assert_eq!(dedup_bytes(0, &l), 0);
        assert_eq!(dedup_bytes(1, &l), 403_221);
        assert_eq!(dedup_bytes(2, &l), 504_042);
        assert_eq!(dedup_bytes(7, &l), 1_008_147);
        assert_eq!(dedup_bytes(8, &l), 1_108_968);
    }

    #[test]
    fn dummy_footprint_hand_values() {
        let l = atari();
        assert_eq!(dummy_bytes(0, &l), 0);
        assert_eq!(dummy_bytes(1, &l), 403_209);
        assert_eq!(dummy_bytes(1000, &l), 403_209_000);
    }

    #[test]
    fn capacity_hand_values() {
        let l = atari();
        assert_eq!(capacity_for(1_008_321, &l), 7);
        assert_eq!(capacity_for(0, &l), 0);
        assert_eq!(capacity_for(403_220, &l), 0);
        assert_eq!(capacity_for(403_221, &l), 1);
    }

    #[test]
    fn saving_approaches_limit_from_below() {
        let l = atari();
        let limit = 1.0 - l.dedup_entry_bytes() as f64 / l.dummy_entry_bytes() as f64;
        assert!((limit - 0.74995).abs() < 5e-6, "{limit}");
        let mut prev = f64::NEG_INFINITY;
        for n in [1u64, 10, 100, 1_000, 10_000, 1_000_000] {
            let s = 1.0 - dedup_bytes(n, &l) as f64 / dummy_bytes(n, &l) as f64;
            assert!(s > prev && s < limit);
            // The gap is exactly the amortized pre-history frames.
            let gap = l.dedup_base_bytes() as f64 / dummy_bytes(n, &l) as f64;
            assert!((limit - s - gap).abs() < 1e-12);
            prev = s;
        }
    }

    fn brute_capacity(budget: u64, l: &ReplayLayout) -> u64 {
        let mut n = 0;
        while dedup_bytes(n + 1, l) <= budget {
            n += 1;
        }
        n
    }

    proptest! {
        #[test]
        fn capacity_matches_brute_force(
            state in 1u64..64,
            frames in 1u64..6,
            budget in 0u64..20_000,
        ) {
            let l = ReplayLayout { state_bytes: state, n_frames: frames, link_bytes: 4, metadata_bytes: 9 };
            prop_assert_eq!(capacity_for(budget, &l), brute_capacity(budget, &l));
        }

        #[test]
        fn capacity_of_exact_footprint_is_exact(k in 0u64..100_000) {
            let l = atari();
            prop_assert_eq!(capacity_for(dedup_bytes(k, &l), &l), k);
        }
    }
}
