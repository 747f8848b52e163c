//! Pole balanced on a cart, Euler-integrated with the widely published
//! classic-control constants.
//!
//! State is `[x, x_dot, theta, theta_dot]`; action 0 pushes left, 1 pushes
//! right. Every step yields reward 1. The episode ends when the pole leans
//! past 12 degrees, the cart leaves `[-2.4, 2.4]`, or 200 steps elapse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EnvError, EnvState, Environment, FrameStack, ObservationSpec, StepResult, MAX_EPISODE_STEPS};

const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_THRESHOLD: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_THRESHOLD: f64 = 2.4;

#[derive(Debug, Clone)]
pub struct CartPole {
    spec: ObservationSpec,
    state: [f64; 4],
    steps: usize,
    terminal: bool,
    started: bool,
    stack: FrameStack,
}

impl Default for CartPole {
    fn default() -> Self {
        Self::new()
    }
}

impl CartPole {
    pub fn new() -> Self {
        let spec = ObservationSpec::cartpole();
        Self {
            stack: FrameStack::new(spec.n_frames),
            spec,
            state: [0.0; 4],
            steps: 0,
            terminal: false,
            started: false,
        }
    }

    /// Places the system in an explicit state, as if freshly reset.
    pub fn set_state(&mut self, state: [f64; 4]) {
        self.state = state;
        self.steps = 0;
        self.terminal = false;
        self.started = true;
        let frame = self.frame();
        self.stack.reset(&frame);
    }

    pub fn state(&self) -> [f64; 4] {
        self.state
    }

    fn frame(&self) -> Vec<u8> {
        self.state.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
    }

    fn integrate(&mut self, action: usize) {
        let [x, x_dot, theta, theta_dot] = self.state;
        let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
        let (sin_t, cos_t) = theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * theta_dot * theta_dot * sin_t) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_t - cos_t * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos_t * cos_t / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_t / TOTAL_MASS;

        self.state = [
            x + TAU * x_dot,
            x_dot + TAU * x_acc,
            theta + TAU * theta_dot,
            theta_dot + TAU * theta_acc,
        ];
    }

    fn out_of_bounds(&self) -> bool {
        let [x, _, theta, _] = self.state;
        !(-X_THRESHOLD..=X_THRESHOLD).contains(&x) || !(-THETA_THRESHOLD..=THETA_THRESHOLD).contains(&theta)
    }
}

impl Environment for CartPole {
    fn spec(&self) -> &ObservationSpec {
        &self.spec
    }

    fn n_actions(&self) -> usize {
        2
    }

    fn reset(&mut self, seed: u64) -> EnvState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = [0.0; 4];
        for v in &mut s {
            *v = rng.gen_range(-0.05..=0.05);
        }
        self.set_state(s);
        EnvState { frame: self.frame(), step_count: 0, terminal: false }
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if !self.started {
            return Err(EnvError::NotReset);
        }
        if self.terminal {
            return Err(EnvError::StepAfterTerminal);
        }
        if action >= 2 {
            return Err(EnvError::InvalidAction { action, n_actions: 2 });
        }
        self.integrate(action);
        self.steps += 1;
        self.terminal = self.out_of_bounds() || self.steps >= MAX_EPISODE_STEPS;
        let next_frame = self.frame();
        self.stack.push(&next_frame);
        Ok(StepResult { next_frame, reward: 1.0, done: self.terminal })
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
