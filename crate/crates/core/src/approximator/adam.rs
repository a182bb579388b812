//! Adam optimizer over a [`Network`](super::Network)'s parameters.

use super::{ApproxError, GradientSet, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
}

/// Optimizer accumulators. Shape-congruent with the network it was built for.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub algorithm: OptimizerKind,
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: GradientSet,
    second_moment: GradientSet,
    step: u64,
}

impl OptimizerState {
    /// Adam with the usual defaults (beta1 0.9, beta2 0.999, eps 1e-8).
    pub fn adam(step_size: f64, net: &Network) -> Self {
        assert!(step_size > 0.0, "step size must be positive");
        Self {
            algorithm: OptimizerKind::Adam,
            step_size,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: GradientSet::zeros_like(net),
            second_moment: GradientSet::zeros_like(net),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One Adam update of `net` in place. Rejects non-finite gradients so a
    /// diverging training loop stops instead of poisoning the weights.
    pub fn step(&mut self, net: &mut Network, grads: &GradientSet) -> Result<(), ApproxError> {
        if !grads.is_finite() {
            return Err(ApproxError::NonFiniteGradient);
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (idx, layer) in net.layers_mut().iter_mut().enumerate() {
            let g = &grads.layers[idx];
            let m = &mut self.first_moment.layers[idx];
            let v = &mut self.second_moment.layers[idx];
            update_slice(
                &mut layer.weights,
                &g.weights,
                &mut m.weights,
                &mut v.weights,
                self.step_size,
                self.beta1,
                self.beta2,
                self.epsilon,
                bias1,
                bias2,
            );
            update_slice(
                &mut layer.biases,
                &g.biases,
                &mut m.biases,
                &mut v.biases,
                self.step_size,
                self.beta1,
                self.beta2,
                self.epsilon,
                bias1,
                bias2,
            );
        }
        Ok(())
    }
}

#[allow(clippy::too_many_arguments)]
fn update_slice(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    step_size: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = beta1 * m[i] + (1.0 - beta1) * g;
        v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= step_size * m_hat / (v_hat.sqrt() + epsilon);
    }
}
