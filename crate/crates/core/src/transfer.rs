//! Adversarial-example crafting against the imitated policy and transfer
//! measurement against the original victim.
//!
//! Crafting is iterative FGSM: starting from a visited state, step along the
//! sign of the input gradient of the (negated) value of the originally
//! greedy action, clipping to the perturbation box, until the imitated
//! greedy action flips. Transfer evaluation rolls victim-driven episodes and
//! measures crafting per visited state without altering the trajectory.

use serde::{Deserialize, Serialize};

use crate::approximator::{InputObjective, Network};
use crate::dqn::{greedy_action, run_episode_trace, Policy};
use crate::parallel;
use crate::seeding::mix;

/// FGSM crafting parameters: step size, per-component perturbation bounds,
/// and the iteration budget. `refresh_gradient` recomputes the gradient at
/// each iterate (projected-gradient style); disabling it freezes the
/// direction computed at the original state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgsmConfig {
    pub step_size: f64,
    pub low: f64,
    pub high: f64,
    pub max_iterations: usize,
    pub refresh_gradient: bool,
}

impl Default for FgsmConfig {
    fn default() -> Self {
        Self { step_size: 0.01, low: -5.0, high: 5.0, max_iterations: 1000, refresh_gradient: true }
    }
}

impl FgsmConfig {
    pub fn validate(&self) {
        assert!(self.step_size > 0.0, "step size must be positive");
        assert!(self.low < self.high, "bounds must be ordered");
    }
}

/// One crafting-plus-transfer measurement at a single state.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferTrial {
    pub original: Vec<f64>,
    pub perturbed: Option<Vec<f64>>,
    pub imitation_flipped: bool,
    pub victim_flipped: bool,
}

/// Crafts an adversarial state against the imitated Q-function, or returns
/// `None` when the greedy action cannot be flipped within the budget (zero
/// gradient, clip saturation, or iteration cap).
pub fn craft_adversarial_state(
    q_tilde: &Network,
    state: &[f64],
    cfg: &FgsmConfig,
) -> Option<Vec<f64>> {
    cfg.validate();
    let original_action = greedy_action(q_tilde, state);
    let mut x = state.to_vec();
    let mut frozen: Option<Vec<f64>> = None;
    for _ in 0..cfg.max_iterations {
        let gradient = if cfg.refresh_gradient {
            q_tilde.input_gradient(&x, InputObjective::NegActionValue(original_action))
        } else {
            frozen
                .get_or_insert_with(|| {
                    q_tilde.input_gradient(state, InputObjective::NegActionValue(original_action))
                })
                .clone()
        };
        let mut moved = false;
        for (xi, g) in x.iter_mut().zip(&gradient) {
            let step = cfg.step_size * sign(*g);
            let next = (*xi + step).clamp(cfg.low, cfg.high);
            if next != *xi {
                moved = true;
            }
            *xi = next;
        }
        if !moved {
            return None;
        }
        if greedy_action(q_tilde, &x) != original_action {
            return Some(x);
        }
    }
    None
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Crafts against the imitation and, on success, checks whether the same
/// perturbed state also flips the victim's (deterministic) decision at the
/// original state.
pub fn transfer_trial(
    victim: &Policy,
    q_tilde: &Network,
    state: &[f64],
    cfg: &FgsmConfig,
) -> TransferTrial {
    let perturbed = craft_adversarial_state(q_tilde, state, cfg);
    let (imitation_flipped, victim_flipped) = match &perturbed {
        None => (false, false),
        Some(p) => (true, victim.greedy(state) != victim.greedy(p)),
    };
    TransferTrial { original: state.to_vec(), perturbed, imitation_flipped, victim_flipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeTransfer {
    pub crafted: u32,
    pub transferred: u32,
}

/// Per-episode crafting and transfer counts (the transfer table shape).
#[derive(Debug, Clone, PartialEq)]
pub struct TransferReport {
    pub episodes: Vec<EpisodeTransfer>,
    pub mean_crafted: f64,
    pub mean_transferred: f64,
}

/// Rolls victim-driven episodes (the victim acts on unperturbed states) and
/// measures crafting at every visited state. The victim trajectory is
/// byte-identical to an unattacked evaluation run with the same seed.
pub fn run_transfer_eval(
    victim: &Policy,
    q_tilde: &Network,
    episodes: usize,
    cfg: &FgsmConfig,
    seed: u64,
) -> TransferReport {
    assert!(episodes >= 1);
    let per_episode = parallel::map_indexed(episodes, |i| {
        let (states, _) =
            run_episode_trace(victim, mix(seed, 2 * i as u64), mix(seed, 2 * i as u64 + 1));
        let mut crafted = 0u32;
        let mut transferred = 0u32;
        for s in &states {
            let trial = transfer_trial(victim, q_tilde, s, cfg);
            if trial.imitation_flipped {
                crafted += 1;
            }
            if trial.victim_flipped {
                transferred += 1;
            }
        }
        EpisodeTransfer { crafted, transferred }
    });
    let n = per_episode.len() as f64;
    let mean_crafted = per_episode.iter().map(|e| e.crafted as f64).sum::<f64>() / n;
    let mean_transferred = per_episode.iter().map(|e| e.transferred as f64).sum::<f64>() / n;
    TransferReport { episodes: per_episode, mean_crafted, mean_transferred }
}
