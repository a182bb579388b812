//! Deep Q-Learning from Demonstrations: learns an imitated Q-function from
//! passively observed victim transitions, then (optionally) keeps training
//! through environment interaction.
//!
//! The training objective is the hybrid loss
//! `J = J_DQ + lambda_n * J_n + lambda_e * J_E + lambda_l2 * J_L2`:
//! squared 1-step double-Q error, squared n-step error, a large-margin
//! classification term applied to demonstration entries only, and L2 weight
//! regularization. Pre-training touches only the demonstration region of the
//! replay buffer; the interaction phase appends self-generated transitions
//! to the ring region and never displaces a demonstration.

mod buffer;
mod demo;

pub use buffer::{n_step_cache, BufferEntry, NStepCache, ReplayBuffer};
pub use demo::{collect_demonstrations, DemoError, DemoFileError, DemonstrationSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{GradientSet, Network, NetworkSpec, OptimizerState};
use crate::dqn::{
    epsilon_greedy_action, greedy_action, CartPoleEnv, Environment, Policy, TrainError, Transition,
};
use crate::seeding::mix;

/// DQfD hyperparameters. `table_defaults` carries the published values:
/// 5000 pre-training steps, margin 0.8, imitation loss coefficient 1,
/// target update frequency 1000, n = 10, gamma = 0.99.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqfdConfig {
    pub spec: NetworkSpec,
    /// Pre-training gradient updates (k).
    pub pretrain_steps: usize,
    pub margin: f64,
    /// n-step loss weight (lambda_1).
    pub lambda_n: f64,
    /// Imitation (large-margin) loss coefficient (lambda_2).
    pub lambda_e: f64,
    /// L2 regularization weight (lambda_3).
    pub lambda_l2: f64,
    pub n_step: usize,
    pub gamma: f64,
    pub target_update_freq: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Prioritization exponent.
    pub alpha: f64,
    pub eps_demo: f64,
    pub eps_self: f64,
    /// Environment interaction steps after pre-training (phase 2).
    pub interaction_steps: usize,
    /// Epsilon of the phase-2 behavior policy.
    pub exploration_eps: f64,
    /// Capacity of the self-generated ring region.
    pub replay_capacity: usize,
    pub seed: u64,
}

impl DqfdConfig {
    pub fn table_defaults(layer_sizes: Vec<usize>, seed: u64) -> Self {
        Self {
            spec: NetworkSpec::new(layer_sizes, mix(seed, 0xD)),
            pretrain_steps: 5_000,
            margin: 0.8,
            lambda_n: 1.0,
            lambda_e: 1.0,
            lambda_l2: 1e-5,
            n_step: 10,
            gamma: 0.99,
            target_update_freq: 1_000,
            batch_size: 32,
            learning_rate: 1e-3,
            alpha: 0.4,
            eps_demo: 1.0,
            eps_self: 0.001,
            interaction_steps: 100_000,
            exploration_eps: 0.01,
            replay_capacity: 100_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        self.spec.validate().map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        if self.margin < 0.0 {
            return Err(TrainError::InvalidConfig("margin must be nonnegative".into()));
        }
        if self.n_step == 0 {
            return Err(TrainError::InvalidConfig("n must be >= 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(TrainError::InvalidConfig(format!("gamma {} not in (0, 1]", self.gamma)));
        }
        if self.eps_demo <= 0.0 || self.eps_self <= 0.0 {
            return Err(TrainError::InvalidConfig("priority offsets must be positive".into()));
        }
        if self.batch_size == 0 || self.target_update_freq == 0 {
            return Err(TrainError::InvalidConfig(
                "batch size and target update frequency must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Large-margin classification loss:
/// `max_a [Q(s,a) + l(a_E, a)] - Q(s, a_E)` with `l` equal to the margin for
/// a != a_E and 0 otherwise. Always nonnegative.
pub fn margin_loss(q_row: &[f64], expert_action: usize, margin: f64) -> f64 {
    assert!(expert_action < q_row.len(), "expert action out of range");
    assert!(margin >= 0.0);
    let best = augmented_argmax(q_row, expert_action, margin);
    let augmented = q_row[best] + if best == expert_action { 0.0 } else { margin };
    augmented - q_row[expert_action]
}

/// Lowest-index argmax of the margin-augmented row.
fn augmented_argmax(q_row: &[f64], expert_action: usize, margin: f64) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (a, &q) in q_row.iter().enumerate() {
        let v = q + if a == expert_action { 0.0 } else { margin };
        if v > best_value {
            best_value = v;
            best = a;
        }
    }
    best
}

/// n-step return of the first transition of `segment`:
/// `r_t + gamma r_{t+1} + ... + gamma^{n-1} r_{t+n-1} + gamma^n max_a Q(s_{t+n}, a)`.
/// If the episode terminates inside the window the sum truncates there and
/// the bootstrap term is dropped.
pub fn n_step_return(segment: &[Transition], n: usize, gamma: f64, target: &Network) -> f64 {
    n_step_cache(segment, 0, n, gamma).target_value(target)
}

#[derive(Debug)]
pub struct HybridLossOutput {
    pub loss: f64,
    pub gradient: GradientSet,
    /// |1-step TD error| per batch entry, for priority updates.
    pub td_errors: Vec<f64>,
}

/// The DQfD hybrid loss over a batch, with its gradient. The margin term
/// applies to demonstration entries only; both TD terms treat their targets
/// as constants.
pub fn hybrid_loss(
    behavior: &Network,
    target: &Network,
    batch: &[&BufferEntry],
    cfg: &DqfdConfig,
) -> HybridLossOutput {
    assert!(!batch.is_empty(), "hybrid loss needs a nonempty batch");
    let n = batch.len() as f64;
    let mut states = Vec::with_capacity(batch.len());
    let mut out_grads = Vec::with_capacity(batch.len());
    let mut td_errors = Vec::with_capacity(batch.len());
    let mut loss = 0.0;
    for entry in batch {
        let t = &entry.transition;
        let q = behavior.forward(&t.state);
        let mut grad = vec![0.0; q.len()];

        let y1 = crate::dqn::double_q_target(behavior, target, t, cfg.gamma);
        let d1 = q[t.action] - y1;
        loss += d1 * d1;
        grad[t.action] += 2.0 * d1;
        td_errors.push(d1.abs());

        if cfg.lambda_n != 0.0 {
            let yn = entry.n_step.target_value(target);
            let dn = q[t.action] - yn;
            loss += cfg.lambda_n * dn * dn;
            grad[t.action] += cfg.lambda_n * 2.0 * dn;
        }

        if cfg.lambda_e != 0.0 && entry.is_demo {
            let je = margin_loss(&q, t.action, cfg.margin);
            loss += cfg.lambda_e * je;
            if je > 0.0 {
                let best = augmented_argmax(&q, t.action, cfg.margin);
                grad[best] += cfg.lambda_e;
                grad[t.action] -= cfg.lambda_e;
            }
        }

        states.push(t.state.clone());
        out_grads.push(grad);
    }
    loss /= n;
    let mut gradient = behavior.backward(&states, &out_grads);
    if cfg.lambda_l2 != 0.0 {
        let mut l2 = 0.0;
        for (layer, grad_layer) in behavior.layers().iter().zip(&mut gradient.layers) {
            for (w, g) in layer.weights.iter().zip(&mut grad_layer.weights) {
                l2 += w * w;
                *g += 2.0 * cfg.lambda_l2 * w;
            }
        }
        loss += cfg.lambda_l2 * l2;
    }
    HybridLossOutput { loss, gradient, td_errors }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImitationRecord {
    pub step: usize,
    pub loss: f64,
    pub agreement: f64,
}

/// Loss and greedy-agreement-with-demonstrations, sampled every 100 updates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImitationLog {
    pub records: Vec<ImitationRecord>,
}

/// Fraction of transitions whose demonstrated action matches the network's
/// greedy action.
pub fn greedy_agreement(net: &Network, transitions: &[Transition]) -> f64 {
    assert!(!transitions.is_empty());
    let hits =
        transitions.iter().filter(|t| greedy_action(net, &t.state) == t.action).count();
    hits as f64 / transitions.len() as f64
}

/// Fraction of states on which two networks pick the same greedy action.
pub fn network_agreement(a: &Network, b: &Network, states: &[Vec<f64>]) -> f64 {
    assert!(!states.is_empty());
    let hits =
        states.iter().filter(|s| greedy_action(a, s) == greedy_action(b, s)).count();
    hits as f64 / states.len() as f64
}

/// Wraps an imitated Q-function as a greedy policy.
pub fn imitated_policy(q: Network) -> Policy {
    Policy::Greedy(q)
}

/// Runs DQfD: phase 1 pre-trains on the demonstration region only, phase 2
/// continues with epsilon-greedy self-play in a replica environment.
/// Deterministic given the config seed.
pub fn dqfd_train(
    demos: &DemonstrationSet,
    cfg: &DqfdConfig,
) -> Result<(Network, ImitationLog), TrainError> {
    cfg.validate()?;
    assert!(!demos.is_empty(), "dqfd needs demonstrations");
    let mut buffer = ReplayBuffer::from_demonstrations(
        demos,
        cfg.n_step,
        cfg.gamma,
        cfg.replay_capacity,
        cfg.alpha,
        cfg.eps_demo,
        cfg.eps_self,
    );
    let mut behavior = Network::init(cfg.spec.clone())?;
    let mut target = behavior.clone();
    let mut opt = OptimizerState::adam(cfg.learning_rate, &behavior);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.seed, 0xD0));
    let mut log = ImitationLog::default();

    // Fixed probe for the agreement log; evenly spaced, so it is independent
    // of the sampling stream.
    let stride = (demos.len() / 1000).max(1);
    let probe: Vec<Transition> =
        demos.transitions().iter().step_by(stride).cloned().collect();

    let mut global_step = 0usize;
    let train_step = |behavior: &mut Network,
                          target: &mut Network,
                          opt: &mut OptimizerState,
                          buffer: &mut ReplayBuffer,
                          rng: &mut ChaCha8Rng,
                          step: usize|
     -> Result<f64, TrainError> {
        let indices = buffer.sample(cfg.batch_size, rng);
        let output = {
            let entries: Vec<&BufferEntry> = indices.iter().map(|&i| buffer.entry(i)).collect();
            hybrid_loss(behavior, target, &entries, cfg)
        };
        if !output.loss.is_finite() {
            return Err(TrainError::Diverged { step, what: "non-finite hybrid loss" });
        }
        opt.step(behavior, &output.gradient)
            .map_err(|_| TrainError::Diverged { step, what: "non-finite gradient" })?;
        buffer.update_priorities(&indices, &output.td_errors);
        if step % cfg.target_update_freq == 0 {
            *target = behavior.clone();
        }
        Ok(output.loss)
    };

    // Phase 1: demonstrations only; the environment is never touched.
    for _ in 0..cfg.pretrain_steps {
        global_step += 1;
        let loss = train_step(&mut behavior, &mut target, &mut opt, &mut buffer, &mut rng, global_step)?;
        if global_step % 100 == 0 {
            log.records.push(ImitationRecord {
                step: global_step,
                loss,
                agreement: greedy_agreement(&behavior, &probe),
            });
        }
    }

    // Phase 2: epsilon-greedy self-play in the replica environment. A
    // sliding window of the last n transitions finalizes each entry's n-step
    // cache before it enters the ring.
    let mut env = CartPoleEnv::new();
    let episode_stream = mix(cfg.seed, 0xEC);
    let mut episode = 0u64;
    let mut obs = env.reset(mix(episode_stream, episode));
    let mut window: Vec<Transition> = Vec::with_capacity(cfg.n_step);
    for _ in 0..cfg.interaction_steps {
        global_step += 1;
        let action = epsilon_greedy_action(&behavior, &obs, cfg.exploration_eps, &mut rng);
        let step = env.step(action);
        window.push(Transition {
            state: obs,
            action,
            reward: step.reward,
            next_state: step.obs.clone(),
            terminal: step.terminal,
        });
        if window.len() == cfg.n_step {
            let cache = n_step_cache(&window, 0, cfg.n_step, cfg.gamma);
            buffer.push_self(window.remove(0), cache);
        }
        if step.terminal {
            for offset in 0..window.len() {
                let cache = n_step_cache(&window, offset, cfg.n_step, cfg.gamma);
                buffer.push_self(window[offset].clone(), cache);
            }
            window.clear();
            episode += 1;
            obs = env.reset(mix(episode_stream, episode));
        } else {
            obs = step.obs;
        }
        let loss = train_step(&mut behavior, &mut target, &mut opt, &mut buffer, &mut rng, global_step)?;
        if global_step % 100 == 0 {
            log.records.push(ImitationRecord {
                step: global_step,
                loss,
                agreement: greedy_agreement(&behavior, &probe),
            });
        }
    }
    Ok((behavior, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dqn::argmax;

    fn entry(t: Transition, cache: NStepCache, is_demo: bool) -> BufferEntry {
        BufferEntry { transition: t, n_step: cache, is_demo }
    }

    fn simple_transition() -> Transition {
        Transition {
            state: vec![0.1, -0.2, 0.05, 0.0],
            action: 1,
            reward: 1.0,
            next_state: vec![0.12, -0.18, 0.06, 0.01],
            terminal: false,
        }
    }

    #[test]
    fn margin_loss_hand_cases() {
        // Expert already dominates by more than the margin.
        assert_eq!(margin_loss(&[2.0, 1.0], 0, 0.8), 0.0);
        // max(1.0, 2.0 + 0.8) - 1.0 = 1.8.
        assert!((margin_loss(&[1.0, 2.0], 0, 0.8) - 1.8).abs() < 1e-15);
        // Zero margin and expert is the argmax.
        assert_eq!(margin_loss(&[3.0, 1.0], 0, 0.0), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn margin_loss_is_nonnegative(
            q in proptest::collection::vec(-10.0f64..10.0, 2..6),
            margin in 0.0f64..3.0,
            pick in 0usize..100,
        ) {
            let a_e = pick % q.len();
            let loss = margin_loss(&q, a_e, margin);
            proptest::prop_assert!(loss >= 0.0);
            // Zero iff the expert action dominates every other by the margin.
            let dominated = q.iter().enumerate().all(|(a, &v)| {
                a == a_e || q[a_e] >= v + margin
            });
            proptest::prop_assert_eq!(loss == 0.0, dominated);
        }
    }

    #[test]
    fn n_step_return_geometric_sum() {
        // Ten rewards of 1, zero bootstrap network.
        let segment: Vec<Transition> = (0..10)
            .map(|i| Transition {
                state: vec![i as f64; 4],
                action: 0,
                reward: 1.0,
                next_state: vec![i as f64 + 1.0; 4],
                terminal: false,
            })
            .collect();
        let zero = Network::zeros(NetworkSpec::new(vec![4, 2], 0)).unwrap();
        let got = n_step_return(&segment, 10, 0.99, &zero);
        let expected: f64 = (0..10).map(|i| 0.99f64.powi(i)).sum();
        assert!((got - expected).abs() < 1e-9);
        assert!((expected - 9.561_792_499_119_551).abs() < 1e-9);
    }

    #[test]
    fn n_step_return_single_step_zero() {
        let segment = vec![Transition {
            state: vec![0.0; 4],
            action: 0,
            reward: 0.0,
            next_state: vec![0.0; 4],
            terminal: false,
        }];
        let zero = Network::zeros(NetworkSpec::new(vec![4, 2], 0)).unwrap();
        assert_eq!(n_step_return(&segment, 1, 0.99, &zero), 0.0);
    }

    #[test]
    fn n_one_matches_one_step_max_bootstrap() {
        let net = Network::init(NetworkSpec::new(vec![4, 6, 2], 3)).unwrap();
        let t = simple_transition();
        let got = n_step_return(std::slice::from_ref(&t), 1, 0.99, &net);
        let q = net.forward(&t.next_state);
        let expected = t.reward + 0.99 * q[argmax(&q)];
        assert!((got - expected).abs() < 1e-12);
    }

    fn test_cfg() -> DqfdConfig {
        DqfdConfig::table_defaults(vec![4, 8, 2], 5)
    }

    #[test]
    fn hybrid_loss_collapses_to_one_step_td() {
        let mut cfg = test_cfg();
        cfg.lambda_n = 0.0;
        cfg.lambda_e = 0.0;
        cfg.lambda_l2 = 0.0;
        let behavior = Network::init(cfg.spec.clone()).unwrap();
        let target = Network::init(NetworkSpec::new(vec![4, 8, 2], 77)).unwrap();
        let t = simple_transition();
        let cache = n_step_cache(std::slice::from_ref(&t), 0, cfg.n_step, cfg.gamma);
        let e = entry(t.clone(), cache, true);
        let out = hybrid_loss(&behavior, &target, &[&e], &cfg);
        let q = behavior.forward(&t.state);
        let d = q[t.action] - crate::dqn::double_q_target(&behavior, &target, &t, cfg.gamma);
        assert!((out.loss - d * d).abs() < 1e-12);
        assert!((out.td_errors[0] - d.abs()).abs() < 1e-12);
    }

    #[test]
    fn hybrid_loss_zero_for_zero_net_zero_rewards_zero_margin() {
        let mut cfg = test_cfg();
        cfg.margin = 0.0;
        cfg.lambda_l2 = 0.0;
        let zero = Network::zeros(cfg.spec.clone()).unwrap();
        let t = Transition {
            state: vec![0.1; 4],
            action: 0,
            reward: 0.0,
            next_state: vec![0.2; 4],
            terminal: false,
        };
        let cache = n_step_cache(std::slice::from_ref(&t), 0, cfg.n_step, cfg.gamma);
        let e = entry(t, cache, true);
        let out = hybrid_loss(&zero, &zero.clone(), &[&e], &cfg);
        assert_eq!(out.loss, 0.0);
    }

    #[test]
    fn hybrid_loss_component_isolation() {
        // With exactly one lambda nonzero the loss equals that component.
        let behavior = Network::init(NetworkSpec::new(vec![4, 8, 2], 21)).unwrap();
        let target = Network::init(NetworkSpec::new(vec![4, 8, 2], 22)).unwrap();
        let t = simple_transition();
        let cache = n_step_cache(std::slice::from_ref(&t), 0, 10, 0.99);
        let e = entry(t.clone(), cache.clone(), true);

        let mut only_n = test_cfg();
        only_n.lambda_e = 0.0;
        only_n.lambda_l2 = 0.0;
        let q = behavior.forward(&t.state);
        let d1 = q[t.action] - crate::dqn::double_q_target(&behavior, &target, &t, only_n.gamma);
        let dn = q[t.action] - cache.target_value(&target);
        let out = hybrid_loss(&behavior, &target, &[&e], &only_n);
        assert!((out.loss - (d1 * d1 + dn * dn)).abs() < 1e-12);

        let mut only_e = test_cfg();
        only_e.lambda_n = 0.0;
        only_e.lambda_l2 = 0.0;
        let je = margin_loss(&q, t.action, only_e.margin);
        let out = hybrid_loss(&behavior, &target, &[&e], &only_e);
        assert!((out.loss - (d1 * d1 + je)).abs() < 1e-12);

        let mut only_l2 = test_cfg();
        only_l2.lambda_n = 0.0;
        only_l2.lambda_e = 0.0;
        let w2: f64 =
            behavior.layers().iter().flat_map(|l| l.weights.iter()).map(|w| w * w).sum();
        let out = hybrid_loss(&behavior, &target, &[&e], &only_l2);
        assert!((out.loss - (d1 * d1 + only_l2.lambda_l2 * w2)).abs() < 1e-12);
    }

    #[test]
    fn margin_term_skips_self_generated_entries() {
        let behavior = Network::init(NetworkSpec::new(vec![4, 8, 2], 31)).unwrap();
        let target = behavior.clone();
        let t = simple_transition();
        let cache = n_step_cache(std::slice::from_ref(&t), 0, 10, 0.99);
        let cfg = test_cfg();
        let as_demo = hybrid_loss(&behavior, &target, &[&entry(t.clone(), cache.clone(), true)], &cfg);
        let as_self = hybrid_loss(&behavior, &target, &[&entry(t.clone(), cache, false)], &cfg);
        let q = behavior.forward(&t.state);
        let je = margin_loss(&q, t.action, cfg.margin);
        assert!(je > 0.0, "this fixture should have a live margin term");
        assert!((as_demo.loss - as_self.loss - cfg.lambda_e * je).abs() < 1e-12);
    }

    #[test]
    fn hybrid_gradient_matches_finite_differences() {
        let cfg = test_cfg();
        let behavior = Network::init(NetworkSpec::new(vec![4, 6, 2], 41)).unwrap();
        let target = Network::init(NetworkSpec::new(vec![4, 6, 2], 42)).unwrap();
        let t1 = simple_transition();
        let t2 = Transition {
            state: vec![-0.3, 0.4, -0.1, 0.2],
            action: 0,
            reward: 1.0,
            next_state: vec![-0.25, 0.42, -0.08, 0.18],
            terminal: true,
        };
        let e1 = entry(t1.clone(), n_step_cache(std::slice::from_ref(&t1), 0, 10, 0.99), true);
        let e2 = entry(t2.clone(), n_step_cache(std::slice::from_ref(&t2), 0, 10, 0.99), false);
        let batch = [&e1, &e2];

        let analytic = hybrid_loss(&behavior, &target, &batch, &cfg).gradient;
        let numeric = crate::approximator::test_support::finite_diff_params(&behavior, |net| {
            hybrid_loss(net, &target, &batch, &cfg).loss
        });
        for (a, n) in analytic.layers.iter().zip(&numeric.layers) {
            for (x, y) in a.weights.iter().zip(&n.weights) {
                assert!(crate::approximator::test_support::close(*x, *y), "{x} vs fd {y}");
            }
            for (x, y) in a.biases.iter().zip(&n.biases) {
                assert!(crate::approximator::test_support::close(*x, *y), "{x} vs fd {y}");
            }
        }
    }

    #[test]
    fn zero_steps_returns_the_random_initialization() {
        let policy = Policy::Greedy(Network::init(NetworkSpec::new(vec![4, 8, 2], 1)).unwrap());
        let demos = collect_demonstrations(&policy, 64, 3);
        let mut cfg = test_cfg();
        cfg.pretrain_steps = 0;
        cfg.interaction_steps = 0;
        let (net, log) = dqfd_train(&demos, &cfg).unwrap();
        assert_eq!(net, Network::init(cfg.spec.clone()).unwrap());
        assert!(log.records.is_empty());
    }

    #[test]
    fn demo_entries_survive_heavy_interaction() {
        let policy = Policy::Greedy(Network::init(NetworkSpec::new(vec![4, 8, 2], 2)).unwrap());
        let demos = collect_demonstrations(&policy, 128, 7);
        let cfg = test_cfg();
        let mut buf = ReplayBuffer::from_demonstrations(
            &demos, cfg.n_step, cfg.gamma, 64, cfg.alpha, cfg.eps_demo, cfg.eps_self,
        );
        let before = buf.demo_entries().to_vec();
        for i in 0..10_000 {
            buf.push_self(
                Transition {
                    state: vec![i as f64; 4],
                    action: 0,
                    reward: 1.0,
                    next_state: vec![i as f64 + 1.0; 4],
                    terminal: false,
                },
                NStepCache { reward_sum: 1.0, discount: 1.0, bootstrap: None },
            );
        }
        assert_eq!(buf.demo_entries(), &before[..]);
    }

    #[test]
    fn training_is_deterministic() {
        let policy = Policy::Greedy(Network::init(NetworkSpec::new(vec![4, 8, 2], 4)).unwrap());
        let demos = collect_demonstrations(&policy, 100, 9);
        let mut cfg = test_cfg();
        cfg.pretrain_steps = 200;
        cfg.interaction_steps = 300;
        cfg.replay_capacity = 512;
        let (a, log_a) = dqfd_train(&demos, &cfg).unwrap();
        let (b, log_b) = dqfd_train(&demos, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
    }

    #[test]
    fn imitated_policy_is_greedy_with_low_tie() {
        let mut net = Network::zeros(NetworkSpec::new(vec![4, 2], 0)).unwrap();
        net.layers_mut()[0].biases = vec![1.0, 1.0];
        let policy = imitated_policy(net);
        assert_eq!(policy.greedy(&[0.0; 4]), 0);
    }
}
