//! Constrained Randomization of Policy (CRoP) defense.
//!
//! Randomizes uniformly among actions whose value gap from the greedy action
//! stays within a tolerance `omega_max`, raising the cost of imitation while
//! bounding the per-step value loss. Note the bound is per step; it does not
//! by itself bound episode regret.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::Network;
use crate::dqfd::{collect_demonstrations, dqfd_train, network_agreement, DqfdConfig};
use crate::dqn::{argmax, evaluate_policy, rollout_states, Policy, TrainError};
use crate::seeding::derive_seed;
use crate::transfer::{run_transfer_eval, FgsmConfig};

/// Per-step tolerable value loss plus the policy's randomization seed.
///
/// `literal_inequality` switches to the gap >= omega membership rule (which
/// admits the *worst* actions) for fidelity experiments; the default keeps
/// gap <= omega.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CropConfig {
    pub omega_max: f64,
    pub seed: u64,
    pub literal_inequality: bool,
}

impl CropConfig {
    pub fn new(omega_max: f64, seed: u64) -> Self {
        assert!(omega_max >= 0.0, "omega_max must be nonnegative");
        Self { omega_max, seed, literal_inequality: false }
    }
}

fn feasible_from_row(q: &[f64], omega_max: f64, literal: bool) -> Vec<usize> {
    let star = argmax(q);
    (0..q.len())
        .filter(|&a| {
            if a == star {
                return true;
            }
            let gap = q[star] - q[a];
            if literal {
                gap >= omega_max
            } else {
                gap <= omega_max
            }
        })
        .collect()
}

/// Actions whose value gap from the greedy action is at most `omega_max`.
/// Always contains the greedy action, so it is never empty.
pub fn feasible_actions(q: &Network, state: &[f64], omega_max: f64) -> Vec<usize> {
    feasible_from_row(&q.forward(state), omega_max, false)
}

/// The membership rule exactly as printed (gap >= omega); kept for fidelity
/// experiments only.
pub fn feasible_actions_literal(q: &Network, state: &[f64], omega_max: f64) -> Vec<usize> {
    feasible_from_row(&q.forward(state), omega_max, true)
}

/// The randomized decision rule: uniform among the feasible set, except
/// singleton sets short-circuit without consuming randomness (so omega 0
/// behaves exactly like the greedy policy).
#[derive(Debug, Clone)]
pub struct CropPolicy {
    net: Network,
    omega_max: f64,
    seed: u64,
    literal: bool,
}

impl CropPolicy {
    pub fn new(net: Network, cfg: &CropConfig) -> Self {
        assert!(cfg.omega_max >= 0.0);
        Self { net, omega_max: cfg.omega_max, seed: cfg.seed, literal: cfg.literal_inequality }
    }

    pub fn select(&self, state: &[f64], rng: &mut ChaCha8Rng) -> usize {
        let q = self.net.forward(state);
        let feasible = feasible_from_row(&q, self.omega_max, self.literal);
        if feasible.len() == 1 {
            feasible[0]
        } else {
            feasible[rng.random_range(0..feasible.len())]
        }
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }
}

/// Wraps a Q-network in the CRoP decision rule.
pub fn crop_policy(q: Network, cfg: &CropConfig) -> Policy {
    Policy::Crop(CropPolicy::new(q, cfg))
}

/// One row of the defense trade-off table.
#[derive(Debug, Clone, PartialEq)]
pub struct CropRow {
    pub omega: f64,
    pub mean_return: f64,
    pub imitation_agreement: f64,
    pub mean_transfers: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropReport {
    pub rows: Vec<CropRow>,
}

/// How each sweep point measures imitation resistance: demonstrations are
/// collected from the CRoP-wrapped victim, a replica is trained on them, and
/// the replica is compared against the *deterministic* victim.
#[derive(Debug, Clone)]
pub struct CropEvalProtocol {
    pub demo_count: usize,
    pub dqfd: DqfdConfig,
    pub fgsm: FgsmConfig,
    pub return_episodes: usize,
    pub transfer_episodes: usize,
    pub agreement_states: usize,
}

/// Sweeps `omega` and reports return vs imitation resistance. All stage
/// seeds are shared across sweep points, so the omega = 0 row coincides with
/// an undefended baseline run.
pub fn evaluate_crop(
    victim: &Network,
    sweep: &[f64],
    protocol: &CropEvalProtocol,
    seed: u64,
) -> Result<CropReport, TrainError> {
    assert!(!sweep.is_empty(), "sweep needs at least one omega");
    let mut rows = Vec::with_capacity(sweep.len());
    for &omega in sweep {
        let policy = crop_policy(victim.clone(), &CropConfig::new(omega, derive_seed(seed, &["crop-policy"])));
        let mean_return =
            evaluate_policy(&policy, protocol.return_episodes, derive_seed(seed, &["crop-return"])).mean;
        let demos =
            collect_demonstrations(&policy, protocol.demo_count, derive_seed(seed, &["crop-demos"]));
        let mut dqfd_cfg = protocol.dqfd.clone();
        dqfd_cfg.seed = derive_seed(seed, &["crop-dqfd"]);
        let (replica, _) = dqfd_train(&demos, &dqfd_cfg)?;
        let states = rollout_states(
            &Policy::Greedy(victim.clone()),
            protocol.agreement_states,
            derive_seed(seed, &["crop-agree"]),
        );
        let imitation_agreement = network_agreement(&replica, victim, &states);
        let mean_transfers = run_transfer_eval(
            &Policy::Greedy(victim.clone()),
            &replica,
            protocol.transfer_episodes,
            &protocol.fgsm,
            derive_seed(seed, &["crop-transfer"]),
        )
        .mean_transferred;
        log::info!(
            "crop omega {omega}: return {mean_return:.1}, agreement {imitation_agreement:.3}, transfers {mean_transfers:.2}"
        );
        rows.push(CropRow { omega, mean_return, imitation_agreement, mean_transfers });
    }
    Ok(CropReport { rows })
}
