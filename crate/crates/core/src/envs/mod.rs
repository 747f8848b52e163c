//! Native environments.
//!
//! Every environment produces raw frames as byte strings laid out according
//! to its [`ObservationSpec`]. Agents see a stack of the `n_frames` most
//! recent frames, newest last; under-filled stacks at the start of an
//! episode repeat the first frame.

mod cartpole;
mod pixel;
mod stack;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cartpole::CartPole;
pub use pixel::PixelGrid;
pub use stack::FrameStack;

/// Hard cap on episode length, shared by all native environments.
pub const MAX_EPISODE_STEPS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("step called on a terminal environment; reset first")]
    StepAfterTerminal,
    #[error("action {action} out of range for {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },
    #[error("step called before reset")]
    NotReset,
}

/// Encoding of a single frame element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementKind {
    /// Little-endian IEEE-754 single precision.
    F32,
    /// Unsigned byte, normalized to [0, 1] when decoded.
    U8,
}

impl ElementKind {
    pub fn size(self) -> usize {
        match self {
            ElementKind::F32 => 4,
            ElementKind::U8 => 1,
        }
    }
}

/// Shape of one raw frame and how many frames form an observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObservationSpec {
    pub frame_shape: Vec<usize>,
    pub element: ElementKind,
    pub n_frames: usize,
}

impl ObservationSpec {
    pub fn new(frame_shape: Vec<usize>, element: ElementKind, n_frames: usize) -> Self {
        let spec = Self { frame_shape, element, n_frames };
        assert!(spec.state_bytes() >= 1, "frame must hold at least one byte");
        assert!(spec.n_frames >= 1, "n_frames must be at least 1");
        spec
    }

    pub fn cartpole() -> Self {
        Self::new(vec![4], ElementKind::F32, 1)
    }

    /// 210x160 RGB frames stacked four deep, the layout used by the usual
    /// Atari preprocessing before downscaling.
    pub fn atari_shaped() -> Self {
        Self::new(vec![210, 160, 3], ElementKind::U8, 4)
    }

    /// Elements in one frame.
    pub fn frame_len(&self) -> usize {
        self.frame_shape.iter().product()
    }

    /// Bytes of one frame (`S_state`).
    pub fn state_bytes(&self) -> usize {
        self.frame_len() * self.element.size()
    }

    pub fn stack_bytes(&self) -> usize {
        self.state_bytes() * self.n_frames
    }

    /// Length of the decoded network input for one stacked observation.
    pub fn input_dim(&self) -> usize {
        self.frame_len() * self.n_frames
    }

    /// Decodes a stacked observation (or several back to back) into `out`.
    pub fn decode_into(&self, bytes: &[u8], out: &mut Vec<f64>) {
        match self.element {
            ElementKind::F32 => out.extend(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64),
            ),
            ElementKind::U8 => out.extend(bytes.iter().map(|&b| b as f64 / 255.0)),
        }
    }
}

/// Snapshot returned by [`Environment::reset`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub frame: Vec<u8>,
    pub step_count: usize,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_frame: Vec<u8>,
    pub reward: f64,
    pub done: bool,
}

pub trait Environment: Send {
    fn spec(&self) -> &ObservationSpec;

    fn n_actions(&self) -> usize;

    /// Starts a new episode. The initial state is a pure function of `seed`.
    fn reset(&mut self, seed: u64) -> EnvState;

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;

    /// The `n_frames` most recent frames, oldest first.
    fn observe(&self) -> Vec<u8>;

    fn step_count(&self) -> usize;

    fn is_terminal(&self) -> bool;
}

/// Which native environment a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Cartpole,
    Pixel,
}

/// Builds an environment from its kind and, for the pixel grid, its shape.
pub fn make_env(kind: EnvKind, pixel_shape: (usize, usize), n_frames: usize) -> Box<dyn Environment> {
    match kind {
        EnvKind::Cartpole => Box::new(CartPole::new()),
        EnvKind::Pixel => Box::new(PixelGrid::new(pixel_shape.0, pixel_shape.1, n_frames)),
    }
}
