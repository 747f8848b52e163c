//! Experience replay storage.
//!
//! [`DedupReplayBuffer`] keeps every raw frame once in a contiguous
//! [`FrameStore`] and represents each transition's frame stack as its own
//! frame plus `N_frames - 1` soft links to earlier frames of the same
//! episode. [`DummyReplayBuffer`] inlines full stacks and serves as the
//! reference implementation: for identical inputs and generator state the
//! two return bit-identical minibatches.
//!
//! A transition is pushed as the newest frame of its state stack together
//! with the action taken, the reward received and whether the episode
//! ended. Its next state is the state stack of the following transition,
//! so the newest transition becomes sampleable once its successor arrives
//! or immediately if it is terminal. Terminal transitions materialize their
//! own state as next state; bootstrapped targets never read it.

mod accounting;
mod dedup;
mod dummy;
mod frame_store;
mod prefetch;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use accounting::{capacity_for, dedup_bytes, dummy_bytes, ReplayLayout, LINK_BYTES, METADATA_BYTES};
pub use dedup::DedupReplayBuffer;
pub use dummy::DummyReplayBuffer;
pub use frame_store::FrameStore;
pub use prefetch::PrefetchHandle;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("need {requested} sampleable entries, buffer has {available}")]
    InsufficientEntries { requested: usize, available: usize },
    #[error("capacity {requested} is below current occupancy {occupancy}")]
    CapacityBelowOccupancy { requested: usize, occupancy: usize },
    #[error("buffer capacity is zero")]
    ZeroCapacity,
    #[error("frame has {got} bytes, expected {expected}")]
    FrameSize { got: usize, expected: usize },
    #[error("prefetch worker stopped before delivering a minibatch")]
    PrefetchLost,
}

/// Per-transition metadata: 4-byte action, 4-byte reward, 1-byte done flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metadata {
    pub action: u32,
    pub reward: f32,
    pub done: bool,
}

impl Metadata {
    pub fn to_bytes(self) -> [u8; METADATA_BYTES as usize] {
        let mut out = [0u8; METADATA_BYTES as usize];
        out[..4].copy_from_slice(&self.action.to_le_bytes());
        out[4..8].copy_from_slice(&self.reward.to_le_bytes());
        out[8] = self.done as u8;
        out
    }

    pub fn from_bytes(b: &[u8; METADATA_BYTES as usize]) -> Self {
        Self {
            action: u32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            reward: f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
            done: b[8] != 0,
        }
    }
}

/// Fully materialized transitions. `states` and `next_states` hold `len`
/// frame stacks back to back.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Minibatch {
    pub len: usize,
    pub ids: Vec<u64>,
    pub states: Vec<u8>,
    pub next_states: Vec<u8>,
    pub actions: Vec<u32>,
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
}

/// Snapshot exported to the harness once per episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BufferStats {
    pub n_entries: usize,
    pub capacity: usize,
    pub bytes_used: u64,
}

/// Operations shared by both buffer layouts.
pub trait ReplayBuffer {
    fn layout(&self) -> &ReplayLayout;
    fn push(&mut self, frame: &[u8], action: u32, reward: f32, done: bool) -> Result<(), ReplayError>;
    fn sample<R: Rng + ?Sized>(&self, minibatch_size: usize, rng: &mut R) -> Result<Minibatch, ReplayError>;
    fn shrink(&mut self, new_capacity: usize) -> usize;
    fn expand(&mut self, new_capacity: usize) -> Result<(), ReplayError>;
    fn len(&self) -> usize;
    fn capacity(&self) -> usize;
    fn bytes_used(&self) -> u64;
    /// Entries that can currently appear in a minibatch.
    fn sampleable(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stats(&self) -> BufferStats {
        BufferStats { n_entries: self.len(), capacity: self.capacity(), bytes_used: self.bytes_used() }
    }
}

/// Number of sampleable entries given occupancy and the newest done flag.
pub(crate) fn sampleable_count(len: usize, newest_done: Option<bool>) -> usize {
    match newest_done {
        Some(false) => len - 1,
        _ => len,
    }
}

/// Uniform draw without replacement of `m` positions out of `k`, shared by
/// both layouts so that equal generator states give equal draws.
pub(crate) fn draw_positions<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize) -> Result<Vec<usize>, ReplayError> {
    if m == 0 || m > k {
        return Err(ReplayError::InsufficientEntries { requested: m, available: k });
    }
    Ok(rand::seq::index::sample(rng, k, m).into_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_is_nine_bytes_and_roundtrips() {
        let m = Metadata { action: 3, reward: -0.5, done: true };
        let b = m.to_bytes();
        assert_eq!(b.len(), 9);
        assert_eq!(Metadata::from_bytes(&b), m);
    }
}
