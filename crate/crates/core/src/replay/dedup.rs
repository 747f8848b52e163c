use std::collections::VecDeque;
use std::sync::Arc;

use parking_lot::RwLock;
use rand::Rng;

use super::accounting::{capacity_for, ReplayLayout};
use super::frame_store::FrameStore;
use super::prefetch::{PrefetchHandle, Prefetcher, SamplePlan};
use super::{draw_positions, sampleable_count, Metadata, Minibatch, ReplayBuffer, ReplayError};

#[derive(Debug, Clone, Copy)]
struct Entry {
    id: u64,
    frame: u32,
    meta: Metadata,
}

/// Replay buffer storing each frame once and linking stacks to it.
pub struct DedupReplayBuffer {
    layout: ReplayLayout,
    store: Arc<RwLock<FrameStore>>,
    entries: VecDeque<Entry>,
    /// `n_frames - 1` links per entry, oldest entry first, oldest frame first.
    links: VecDeque<u32>,
    /// Most recent frame slots of the running episode, at most `n_frames - 1`.
    chain: VecDeque<u32>,
    capacity: usize,
    next_id: u64,
    bytes_used: u64,
    prefetcher: Prefetcher,
}

impl DedupReplayBuffer {
    pub fn new(layout: ReplayLayout, capacity: usize) -> Self {
        let store = Arc::new(RwLock::new(FrameStore::new(layout.state_bytes as usize)));
        Self {
            layout,
            prefetcher: Prefetcher::new(Arc::clone(&store)),
            store,
            entries: VecDeque::new(),
            links: VecDeque::new(),
            chain: VecDeque::new(),
            capacity,
            next_id: 0,
            bytes_used: 0,
        }
    }

    /// Capacity sized to fit `budget` bytes.
    pub fn with_budget(layout: ReplayLayout, budget: u64) -> Self {
        let cap = capacity_for(budget, &layout) as usize;
        Self::new(layout, cap)
    }

    fn link_width(&self) -> usize {
        self.layout.n_frames as usize - 1
    }

    /// Frame slots currently allocated in the contiguous store, live or dead.
    pub fn store_slots(&self) -> usize {
        self.store.read().slot_count()
    }

    pub fn live_frames(&self) -> usize {
        self.store.read().live_count()
    }

    /// Bytes held by the frame store, including dead slots awaiting compaction.
    pub fn store_bytes(&self) -> u64 {
        self.store_slots() as u64 * self.layout.state_bytes
    }

    /// Slot indices of entry `pos`'s frame stack, oldest frame first.
    fn stack_slots(&self, pos: usize, out: &mut Vec<u32>) {
        let w = self.link_width();
        out.extend(self.links.range(pos * w..(pos + 1) * w).copied());
        out.push(self.entries[pos].frame);
    }

    /// Checks that every entry's links resolve to live slots.
    pub fn links_are_live(&self) -> bool {
        let store = self.store.read();
        self.entries.iter().all(|e| store.is_live(e.frame))
            && self.links.iter().all(|&s| store.is_live(s))
            && self.chain.iter().all(|&s| store.is_live(s))
    }

    fn evict_oldest(&mut self, store: &mut FrameStore) {
        let Some(e) = self.entries.pop_front() else { return };
        store.release(e.frame);
        for _ in 0..self.link_width() {
            let s = self.links.pop_front().expect("links out of step with entries");
            store.release(s);
        }
        self.bytes_used -= self.layout.dedup_entry_bytes();
        if self.entries.is_empty() {
            self.bytes_used -= self.layout.dedup_base_bytes();
            self.chain.clear();
        }
    }

    fn plan(&self, positions: &[usize]) -> SamplePlan {
        let n = self.layout.n_frames as usize;
        let mut plan = SamplePlan::with_capacity(positions.len(), n, self.layout.state_bytes as usize);
        for &p in positions {
            let e = &self.entries[p];
            plan.ids.push(e.id);
            plan.actions.push(e.meta.action);
            plan.rewards.push(e.meta.reward);
            plan.dones.push(e.meta.done);
            self.stack_slots(p, &mut plan.slots);
            let next = if e.meta.done { p } else { p + 1 };
            self.stack_slots(next, &mut plan.slots);
        }
        plan
    }

    fn draw_plan<R: Rng + ?Sized>(&self, minibatch_size: usize, rng: &mut R) -> Result<SamplePlan, ReplayError> {
        let positions = draw_positions(rng, self.sampleable(), minibatch_size)?;
        Ok(self.plan(&positions))
    }

    /// Draws the minibatch indices now and materializes the frames on the
    /// prefetch worker. The handle yields exactly what [`ReplayBuffer::sample`]
    /// would have returned at this point with the same generator state.
    pub fn prefetch_next<R: Rng + ?Sized>(&mut self, minibatch_size: usize, rng: &mut R) -> Result<PrefetchHandle, ReplayError> {
        let plan = self.draw_plan(minibatch_size, rng)?;
        {
            // Pin every referenced slot so eviction cannot recycle it
            // before the worker has copied it out.
            let mut store = self.store.write();
            for &s in &plan.slots {
                store.retain(s);
            }
        }
        Ok(self.prefetcher.submit(plan))
    }

    /// Blocks until no prefetch materialization is in flight. Afterwards
    /// slot indices may be rewritten.
    pub fn synchronize(&self) {
        self.prefetcher.wait_idle();
    }

    pub fn in_flight(&self) -> usize {
        self.prefetcher.in_flight()
    }

    /// Compacts the frame store and rewrites all links. Returns bytes reclaimed.
    pub fn garbage_collect(&mut self) -> u64 {
        self.synchronize();
        let mut store = self.store.write();
        let (map, reclaimed) = store.compact();
        let remap = |s: &mut u32| {
            *s = map[*s as usize];
            debug_assert_ne!(*s, u32::MAX);
        };
        self.entries.iter_mut().for_each(|e| remap(&mut e.frame));
        self.links.iter_mut().for_each(remap);
        self.chain.iter_mut().for_each(remap);
        reclaimed
    }
}

impl ReplayBuffer for DedupReplayBuffer {
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
        let w = self.link_width();
        let store_arc = Arc::clone(&self.store);
        let mut store = store_arc.write();
        let slot = store.insert(frame);
        store.retain(slot);
        // Links: the last `w` frames of this episode, padded at the front
        // with the episode's first frame (this one, at an episode start).
        let first = self.chain.front().copied().unwrap_or(slot);
        for i in 0..w {
            let missing = w - self.chain.len();
            let s = if i < missing { first } else { self.chain[i - missing] };
            store.retain(s);
            self.links.push_back(s);
        }
        if self.entries.is_empty() {
            self.bytes_used += self.layout.dedup_base_bytes();
        }
        self.bytes_used += self.layout.dedup_entry_bytes();
        self.entries.push_back(Entry { id: self.next_id, frame: slot, meta: Metadata { action, reward, done } });
        self.next_id += 1;

        if done {
            self.chain.clear();
        } else if w > 0 {
            if self.chain.len() == w {
                self.chain.pop_front();
            }
            self.chain.push_back(slot);
        }
        while self.entries.len() > self.capacity {
            self.evict_oldest(&mut store);
        }
        Ok(())
    }

    fn sample<R: Rng + ?Sized>(&self, minibatch_size: usize, rng: &mut R) -> Result<Minibatch, ReplayError> {
        let plan = self.draw_plan(minibatch_size, rng)?;
        let store = self.store.read();
        Ok(plan.materialize(&store))
    }

    fn shrink(&mut self, new_capacity: usize) -> usize {
        self.synchronize();
        let store_arc = Arc::clone(&self.store);
        let mut store = store_arc.write();
        let mut evicted = 0;
        while self.entries.len() > new_capacity {
            self.evict_oldest(&mut store);
            evicted += 1;
        }
        self.capacity = new_capacity;
        evicted
    }

    fn expand(&mut self, new_capacity: usize) -> Result<(), ReplayError> {
        if new_capacity < self.entries.len() {
            return Err(ReplayError::CapacityBelowOccupancy { requested: new_capacity, occupancy: self.entries.len() });
        }
        self.capacity = new_capacity;
        Ok(())
    }

    fn len(&self) -> usize {
        self.entries.len()
    }

    fn capacity(&self) -> usize {
        self.capacity
    }

    fn bytes_used(&self) -> u64 {
        self.bytes_used
    }

    fn sampleable(&self) -> usize {
        sampleable_count(self.entries.len(), self.entries.back().map(|e| e.meta.done))
    }
}
