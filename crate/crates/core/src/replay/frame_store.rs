/// Contiguous, reference-counted storage for raw frames.
///
/// Slot `i` occupies bytes `[i * frame_bytes, (i + 1) * frame_bytes)`.
/// A slot is live while its reference count is positive; dead slots are
/// reused by later allocations and returned to the allocator by
/// [`FrameStore::compact`].
#[derive(Debug, Clone)]
pub struct FrameStore {
    frame_bytes: usize,
    data: Vec<u8>,
    refs: Vec<u32>,
    free: Vec<u32>,
}

impl FrameStore {
    pub fn new(frame_bytes: usize) -> Self {
        assert!(frame_bytes > 0);
        Self { frame_bytes, data: Vec::new(), refs: Vec::new(), free: Vec::new() }
    }

    pub fn frame_bytes(&self) -> usize {
        self.frame_bytes
    }

    /// Slots allocated, live or dead (the write cursor).
    pub fn slot_count(&self) -> usize {
        self.refs.len()
    }

    pub fn live_count(&self) -> usize {
        self.refs.len() - self.free.len()
    }

    pub fn is_live(&self, slot: u32) -> bool {
        self.refs.get(slot as usize).is_some_and(|&r| r > 0)
    }

    pub fn ref_count(&self, slot: u32) -> u32 {
        self.refs[slot as usize]
    }

    /// Stores `frame` in a free slot with a zero reference count. The
    /// caller must take a reference before releasing the lock.
    pub fn insert(&mut self, frame: &[u8]) -> u32 {
        debug_assert_eq!(frame.len(), self.frame_bytes);
        if let Some(slot) = self.free.pop() {
            let off = slot as usize * self.frame_bytes;
            self.data[off..off + self.frame_bytes].copy_from_slice(frame);
            slot
        } else {
            let slot = u32::try_from(self.refs.len()).expect("frame store exceeds u32 slots");
            self.data.extend_from_slice(frame);
            self.refs.push(0);
            slot
        }
    }

    pub fn retain(&mut self, slot: u32) {
        self.refs[slot as usize] += 1;
    }

    /// Drops one reference; a slot reaching zero becomes reusable.
    pub fn release(&mut self, slot: u32) {
        let r = &mut self.refs[slot as usize];
        debug_assert!(*r > 0, "release of dead slot {slot}");
        *r -= 1;
        if *r == 0 {
            self.free.push(slot);
        }
    }

    pub fn frame(&self, slot: u32) -> &[u8] {
        let off = slot as usize * self.frame_bytes;
        &self.data[off..off + self.frame_bytes]
    }

    /// Moves live slots to the front, preserving their order, and frees the
    /// tail. Returns the old-to-new slot map (`u32::MAX` for dead slots) and
    /// the number of bytes reclaimed.
    pub fn compact(&mut self) -> (Vec<u32>, u64) {
        let mut map = vec![u32::MAX; self.refs.len()];
        let mut next = 0usize;
        for old in 0..self.refs.len() {
            if self.refs[old] == 0 {
                continue;
            }
            if old != next {
                let (src, dst) = (old * self.frame_bytes, next * self.frame_bytes);
                self.data.copy_within(src..src + self.frame_bytes, dst);
                self.refs[next] = self.refs[old];
            }
            map[old] = next as u32;
            next += 1;
        }
        let reclaimed = ((self.refs.len() - next) * self.frame_bytes) as u64;
        self.refs.truncate(next);
        self.data.truncate(next * self.frame_bytes);
        self.data.shrink_to_fit();
        self.refs.shrink_to_fit();
        self.free.clear();
        (map, reclaimed)
    }

    /// Clears all content.
    pub fn clear(&mut self) {
        self.data.clear();
        self.refs.clear();
        self.free.clear();
    }
}
