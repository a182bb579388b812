//! Deterministic CartPole physics.
//!
//! Classic cart-pole dynamics with Euler integration and the standard
//! constants (gravity 9.8, cart mass 1.0, pole mass 0.1, half-pole length
//! 0.5, force 10.0, time step 0.02). Episodes terminate when the cart leaves
//! ±2.4 m, the pole tips past ±12°, or 500 steps elapse. State is passed and
//! returned by value, so trajectories are replayable and any number of
//! episodes can run in parallel.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const STATE_DIM: usize = 4;
pub const ACTION_COUNT: usize = 2;
pub const EPISODE_CAP: u32 = 500;

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const HALF_POLE_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_POLE_LENGTH;
const FORCE_MAGNITUDE: f64 = 10.0;
const TIME_STEP: f64 = 0.02;
const X_LIMIT: f64 = 2.4;
const THETA_LIMIT: f64 = 12.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("cannot step a terminal state")]
    TerminalStep,
    #[error("action must be 0 (left) or 1 (right), got {0}")]
    InvalidAction(usize),
}

/// Cart position, cart velocity, pole angle (rad), pole angular velocity,
/// plus the episode step counter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub steps: u32,
}

impl EnvState {
    /// The observation vector handed to policies.
    pub fn observation(&self) -> [f64; STATE_DIM] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepResult {
    pub next_state: EnvState,
    pub reward: f64,
    pub terminal: bool,
}

/// Fresh episode start: each component uniform in [-0.05, 0.05], drawn from
/// the seeded generator. Same seed, same state.
pub fn reset(seed: u64) -> EnvState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || rng.random_range(-0.05..0.05);
    EnvState { x: draw(), x_dot: draw(), theta: draw(), theta_dot: draw(), steps: 0 }
}

pub fn is_terminal(state: &EnvState) -> bool {
    state.x.abs() > X_LIMIT || state.theta.abs() > THETA_LIMIT || state.steps >= EPISODE_CAP
}

/// One physics step. Pure function of (state, action); reward is 1.0 on
/// every accepted step.
pub fn step(state: &EnvState, action: usize) -> Result<StepResult, EnvError> {
    if action >= ACTION_COUNT {
        return Err(EnvError::InvalidAction(action));
    }
    if is_terminal(state) {
        return Err(EnvError::TerminalStep);
    }
    let force = if action == 1 { FORCE_MAGNITUDE } else { -FORCE_MAGNITUDE };
    let cos_theta = state.theta.cos();
    let sin_theta = state.theta.sin();
    let temp =
        (force + POLE_MASS_LENGTH * state.theta_dot * state.theta_dot * sin_theta) / TOTAL_MASS;
    let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
        / (HALF_POLE_LENGTH * (4.0 / 3.0 - POLE_MASS * cos_theta * cos_theta / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS;

    // Euler integration; positions advance with the pre-update velocities.
    let next = EnvState {
        x: state.x + TIME_STEP * state.x_dot,
        x_dot: state.x_dot + TIME_STEP * x_acc,
        theta: state.theta + TIME_STEP * state.theta_dot,
        theta_dot: state.theta_dot + TIME_STEP * theta_acc,
        steps: state.steps + 1,
    };
    Ok(StepResult { terminal: is_terminal(&next), next_state: next, reward: 1.0 })
}

/// Maximum achievable episode return: the 500-step cap at reward 1 per step.
pub fn max_return() -> f64 {
    EPISODE_CAP as f64
}
