use std::collections::VecDeque;

use rand::Rng;

use super::accounting::ReplayLayout;
use super::{draw_positions, sampleable_count, Metadata, Minibatch, ReplayBuffer, ReplayError};

/// Replay buffer that stores every transition's full frame stack inline.
#[derive(Debug, Clone)]
pub struct DummyReplayBuffer {
    layout: ReplayLayout,
    ids: VecDeque<u64>,
    stacks: VecDeque<Vec<u8>>,
    metas: VecDeque<Metadata>,
    /// Frames of the running episode, newest last.
    episode: VecDeque<Vec<u8>>,
    capacity: usize,
    next_id: u64,
}

impl DummyReplayBuffer {
    pub fn new(layout: ReplayLayout, capacity: usize) -> Self {
        Self {
            layout,
            ids: VecDeque::new(),
            stacks: VecDeque::new(),
            metas: VecDeque::new(),
            episode: VecDeque::new(),
            capacity,
            next_id: 0,
        }
    }

    fn evict_oldest(&mut self) {
        self.ids.pop_front();
        self.stacks.pop_front();
        self.metas.pop_front();
        if self.ids.is_empty() {
            self.episode.clear();
        }
    }
}

impl ReplayBuffer for DummyReplayBuffer {
    fn layout(&self) -> &ReplayLayout {
        &self.layout
    }

    fn push(&mut self, frame: &[u8], action: u32, reward: f32, done: bool) -> Result<(), ReplayError> {
        if self.capacity == 0 {
            return Err(ReplayError::ZeroCapacity);
        }
        let expected = self.layout.state_bytes as usize;
        if frame.len() != expected {
            return Err(ReplayError::FrameSize { got: frame.len(), expected });
        }
        let n = self.layout.n_frames as usize;
        if self.episode.is_empty() {
            for _ in 0..n - 1 {
                self.episode.push_back(frame.to_vec());
            }
        }
        self.episode.push_back(frame.to_vec());
        while self.episode.len() > n {
            self.episode.pop_front();
        }
        let stack: Vec<u8> = self.episode.iter().flatten().copied().collect();
        self.ids.push_back(self.next_id);
        self.next_id += 1;
        self.stacks.push_back(stack);
        self.metas.push_back(Metadata { action, reward, done });
        if done {
            self.episode.clear();
        }
        while self.ids.len() > self.capacity {
            self.evict_oldest();
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, minibatch_size: usize, rng: &mut R) -> Result<Minibatch, ReplayError> {
        let positions = draw_positions(rng, self.sampleable(), minibatch_size)?;
        let mut mb = Minibatch { len: positions.len(), ..Default::default() };
        for p in positions {
            let m = self.metas[p];
            mb.ids.push(self.ids[p]);
            mb.actions.push(m.action);
            mb.rewards.push(m.reward);
            mb.dones.push(m.done);
            mb.states.extend_from_slice(&self.stacks[p]);
            let next = if m.done { p } else { p + 1 };
            mb.next_states.extend_from_slice(&self.stacks[next]);
        }
        Ok(mb)
    }

    fn shrink(&mut self, new_capacity: usize) -> usize {
        let mut evicted = 0;
        while self.ids.len() > new_capacity {
            self.evict_oldest();
            evicted += 1;
        }
        self.capacity = new_capacity;
        evicted
    }

    fn expand(&mut self, new_capacity: usize) -> Result<(), ReplayError> {
        if new_capacity < self.ids.len() {
            return Err(ReplayError::CapacityBelowOccupancy { requested: new_capacity, occupancy: self.ids.len() });
        }
        self.capacity = new_capacity;
        Ok(())
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn bytes_used(&self) -> u64 {
        self.stacks.iter().map(|s| s.len() as u64).sum::<u64>() + self.metas.len() as u64 * self.layout.metadata_bytes
    }

    fn sampleable(&self) -> usize {
        sampleable_count(self.ids.len(), self.metas.back().map(|m| m.done))
    }
}

#[cfg(test)]
mod tests {
    use super::super::accounting::dummy_bytes;
    use super::*;
    use crate::envs::{ElementKind, ObservationSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inline_stacks_and_footprint() {
        let l = ReplayLayout::new(&ObservationSpec::new(vec![1], ElementKind::U8, 3));
        let mut buf = DummyReplayBuffer::new(l, 10);
        for f in [7u8, 8, 9] {
            buf.push(&[f], 0, 0.0, f == 9).unwrap();
        }
        assert_eq!(buf.bytes_used(), dummy_bytes(3, &l));
        let mb = buf.sample(3, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        for row in 0..3 {
            let want: &[u8] = match mb.ids[row] {
                0 => &[7, 7, 7],
                1 => &[7, 7, 8],
                _ => &[7, 8, 9],
            };
            assert_eq!(&mb.states[row * 3..row * 3 + 3], want);
        }
    }
}
