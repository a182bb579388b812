//! A policy-imitation attack laboratory for CartPole Q-policies.
//!
//! The pipeline: train victim DQN policies, record passive demonstrations of
//! their behavior, replicate them with Deep Q-Learning from Demonstrations,
//! then weaponize the replica two ways — a DRL adversary that decides
//! per-step whether to induce the replica's worst action, and iterative FGSM
//! state perturbations whose transfer back to the victim is measured.
//! A constrained-randomization defense (CRoP) and its return/imitability
//! trade-off close the loop.
//!
//! Evaluation fans episodes out with rayon (`parallel` feature, on by
//! default); training is single-threaded and fully deterministic per seed.

pub mod adversary;
pub mod approximator;
pub mod checkpoint;
pub mod crop;
pub mod dqfd;
pub mod dqn;
pub mod env;
pub mod parallel;
pub mod pipeline;
pub mod report;
pub mod seeding;
pub mod transfer;

pub use approximator::{Activation, Network, NetworkSpec};
pub use dqn::{DqnConfig, EvalStats, Policy, TrainError};
