//! Frame-stacked grid world rendered as single-channel bytes.
//!
//! A dot moves on a `height x width` grid toward a fixed goal. Background
//! pixels are 0, the goal is 128 and the dot is 255. Actions are stay, up,
//! down, left and right. The reward is the decrease in Manhattan distance
//! to the goal, so a greedy policy earns the initial distance in total.
//! Reaching the goal or 200 steps ends the episode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ElementKind, EnvError, EnvState, Environment, FrameStack, ObservationSpec, StepResult, MAX_EPISODE_STEPS};

const N_ACTIONS: usize = 5;
const DOT: u8 = 255;
const GOAL: u8 = 128;

#[derive(Debug, Clone)]
pub struct PixelGrid {
    spec: ObservationSpec,
    height: usize,
    width: usize,
    dot: (usize, usize),
    goal: (usize, usize),
    steps: usize,
    terminal: bool,
    started: bool,
    stack: FrameStack,
}

impl PixelGrid {
    pub fn new(height: usize, width: usize, n_frames: usize) -> Self {
        assert!(height >= 2 && width >= 2, "grid must be at least 2x2");
        let spec = ObservationSpec::new(vec![height, width], ElementKind::U8, n_frames);
        Self {
            stack: FrameStack::new(n_frames),
            spec,
            height,
            width,
            dot: (0, 0),
            goal: (0, 0),
            steps: 0,
            terminal: false,
            started: false,
        }
    }

    pub fn dot(&self) -> (usize, usize) {
        self.dot
    }

    pub fn goal(&self) -> (usize, usize) {
        self.goal
    }

    fn distance(&self) -> usize {
        self.dot.0.abs_diff(self.goal.0) + self.dot.1.abs_diff(self.goal.1)
    }

    fn render(&self) -> Vec<u8> {
        let mut frame = vec![0u8; self.height * self.width];
        frame[self.goal.0 * self.width + self.goal.1] = GOAL;
        frame[self.dot.0 * self.width + self.dot.1] = DOT;
        frame
    }
}

impl Environment for PixelGrid {
    fn spec(&self) -> &ObservationSpec {
        &self.spec
    }

    fn n_actions(&self) -> usize {
        N_ACTIONS
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.goal = (rng.gen_range(0..self.height), rng.gen_range(0..self.width));
        loop {
            self.dot = (rng.gen_range(0..self.height), rng.gen_range(0..self.width));
            if self.dot != self.goal {
                break;
            }
        }
        self.steps = 0;
        self.terminal = false;
        self.started = true;
        let frame = self.render();
        self.stack.reset(&frame);
        EnvState { frame, step_count: 0, terminal: false }
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if !self.started {
            return Err(EnvError::NotReset);
        }
        if self.terminal {
            return Err(EnvError::StepAfterTerminal);
        }
        if action >= N_ACTIONS {
            return Err(EnvError::InvalidAction { action, n_actions: N_ACTIONS });
        }
        let before = self.distance() as f64;
        let (r, c) = self.dot;
        self.dot = match action {
            1 => (r.saturating_sub(1), c),
            2 => ((r + 1).min(self.height - 1), c),
            3 => (r, c.saturating_sub(1)),
            4 => (r, (c + 1).min(self.width - 1)),
            _ => (r, c),
        };
        self.steps += 1;
        let reward = before - self.distance() as f64;
        self.terminal = self.dot == self.goal || self.steps >= MAX_EPISODE_STEPS;
        let next_frame = self.render();
        self.stack.push(&next_frame);
        Ok(StepResult { next_frame, reward, done: self.terminal })
    }

    fn observe(&self) -> Vec<u8> {
        self.stack.stacked()
    }

    fn step_count(&self) -> usize {
        self.steps
    }

    fn is_terminal(&self) -> bool {
        self.terminal
    }
}
