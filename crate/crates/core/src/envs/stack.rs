use std::collections::VecDeque;

/// Fixed-depth history of frames with repeat-first padding.
#[derive(Debug, Clone)]
pub struct FrameStack {
    depth: usize,
    frames: VecDeque<Vec<u8>>,
}

impl FrameStack {
    pub fn new(depth: usize) -> Self {
        assert!(depth >= 1);
        Self { depth, frames: VecDeque::with_capacity(depth) }
    }

    /// Clears the history and fills every slot with `first`.
    pub fn reset(&mut self, first: &[u8]) {
        self.frames.clear();
        for _ in 0..self.depth {
            self.frames.push_back(first.to_vec());
        }
    }

    pub fn push(&mut self, frame: &[u8]) {
        if self.frames.is_empty() {
            self.reset(frame);
            return;
        }
        let mut slot = self.frames.pop_front().unwrap_or_default();
        slot.clear();
        slot.extend_from_slice(frame);
        self.frames.push_back(slot);
    }

    pub fn latest(&self) -> Option<&[u8]> {
        self.frames.back().map(|f| f.as_slice())
    }

    /// Concatenation of all frames, oldest first.
    pub fn stacked(&self) -> Vec<u8> {
        let len: usize = self.frames.iter().map(|f| f.len()).sum();
        let mut out = Vec::with_capacity(len);
        for f in &self.frames {
            out.extend_from_slice(f);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reset_repeats_first_frame() {
        let mut s = FrameStack::new(4);
        s.reset(&[7, 8]);
        assert_eq!(s.stacked(), vec![7, 8, 7, 8, 7, 8, 7, 8]);
    }

    #[test]
    fn keeps_newest_last() {
        let mut s = FrameStack::new(3);
        s.reset(&[0]);
        for i in 1..=5u8 {
            s.push(&[i]);
        }
        assert_eq!(s.stacked(), vec![3, 4, 5]);
        assert_eq!(s.latest(), Some(&[5u8][..]));
    }
}
