//! Multilayer-perceptron function approximator with manual reverse-mode
//! differentiation.
//!
//! This is the numeric substrate for every Q-function in the crate: dense
//! layers with ReLU hidden activations and an identity output, 64-bit floats
//! throughout so gradients can be checked tightly against finite differences.
//! Networks are plain values; training mutates them only through
//! [`OptimizerState::step`].

mod adam;

pub use adam::{OptimizerKind, OptimizerState};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ApproxError {
    #[error("network spec needs at least 2 layer sizes, got {0}")]
    TooFewLayers(usize),
    #[error("layer size must be >= 1, got 0 at position {0}")]
    ZeroLayerSize(usize),
    #[error("non-finite gradient")]
    NonFiniteGradient,
}

/// Hidden-layer activation. The output layer is always identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    ReLU,
}

/// Architecture plus init seed. `layer_sizes[0]` is the state dimension,
/// the last entry the action count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
    pub seed: u64,
}

impl NetworkSpec {
    pub fn new(layer_sizes: Vec<usize>, seed: u64) -> Self {
        Self { layer_sizes, activation: Activation::ReLU, seed }
    }

    pub fn validate(&self) -> Result<(), ApproxError> {
        if self.layer_sizes.len() < 2 {
            return Err(ApproxError::TooFewLayers(self.layer_sizes.len()));
        }
        if let Some(pos) = self.layer_sizes.iter().position(|&s| s == 0) {
            return Err(ApproxError::ZeroLayerSize(pos));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated spec")
    }
}

/// One dense layer. Weights are row-major with shape `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self { in_dim, out_dim, weights: vec![0.0; in_dim * out_dim], biases: vec![0.0; out_dim] }
    }
}

/// A feed-forward Q-network: hidden ReLU layers, identity output.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

/// Per-layer weight and bias gradients, shape-congruent with a [`Network`].
#[derive(Debug, Clone)]
pub struct GradientSet {
    pub layers: Vec<Layer>,
}

impl GradientSet {
    pub fn zeros_like(net: &Network) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Layer::zeros(l.in_dim, l.out_dim)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite())
        })
    }
}

/// Scalar objectives of the output vector that [`Network::input_gradient`]
/// can differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputObjective {
    /// d/ds of `Q(s, action)`.
    ActionValue(usize),
    /// d/ds of `-Q(s, action)`.
    NegActionValue(usize),
}

impl Network {
    /// Builds a network with He-uniform weights and zero biases, drawn
    /// deterministically from `spec.seed`.
    pub fn init(spec: NetworkSpec) -> Result<Self, ApproxError> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut layers = Vec::with_capacity(spec.layer_sizes.len() - 1);
        for pair in spec.layer_sizes.windows(2) {
            let (in_dim, out_dim) = (pair[0], pair[1]);
            let limit = (6.0 / in_dim as f64).sqrt();
            let mut layer = Layer::zeros(in_dim, out_dim);
            for w in &mut layer.weights {
                *w = rng.random_range(-limit..limit);
            }
            layers.push(layer);
        }
        Ok(Self { spec, layers })
    }

    /// All-zero weights and biases; mainly for tests and hand-built nets.
    pub fn zeros(spec: NetworkSpec) -> Result<Self, ApproxError> {
        spec.validate()?;
        let layers = spec.layer_sizes.windows(2).map(|p| Layer::zeros(p[0], p[1])).collect();
        Ok(Self { spec, layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable layer access for hand-constructed nets. Shapes must stay
    /// congruent with the spec.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Rebuilds a network from raw layers (checkpoint loading). The seed of
    /// the reconstructed spec is 0; it only matters for `init`.
    pub fn from_layers(layers: Vec<Layer>, activation: Activation) -> Result<Self, ApproxError> {
        let mut sizes = Vec::with_capacity(layers.len() + 1);
        sizes.push(layers.first().map(|l| l.in_dim).unwrap_or(0));
        for layer in &layers {
            sizes.push(layer.out_dim);
        }
        let spec = NetworkSpec { layer_sizes: sizes, activation, seed: 0 };
        spec.validate()?;
        Ok(Self { spec, layers })
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    /// Action values for one state.
    ///
    /// Panics on dimension mismatch or non-finite input; those are caller
    /// bugs, not recoverable conditions.
    pub fn forward(&self, state: &[f64]) -> Vec<f64> {
        self.check_input(state);
        let mut current = state.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let hidden = idx + 1 < self.layers.len();
            current = affine(layer, &current, hidden);
        }
        current
    }

    /// Mean weight gradient over a batch, given the loss gradient at the
    /// output of each sample. Exact reverse-mode differentiation of
    /// [`Network::forward`].
    pub fn backward(&self, states: &[Vec<f64>], output_grads: &[Vec<f64>]) -> GradientSet {
        assert!(!states.is_empty(), "backward needs a nonempty batch");
        assert_eq!(states.len(), output_grads.len(), "batch size mismatch");
        let mut grads = GradientSet::zeros_like(self);
        for (state, out_grad) in states.iter().zip(output_grads) {
            assert_eq!(out_grad.len(), self.output_dim(), "output gradient shape mismatch");
            let acts = self.forward_cached(state);
            self.backprop_sample(&acts, out_grad, Some(&mut grads), None);
        }
        let scale = 1.0 / states.len() as f64;
        for layer in &mut grads.layers {
            for w in &mut layer.weights {
                *w *= scale;
            }
            for b in &mut layer.biases {
                *b *= scale;
            }
        }
        grads
    }

    /// Gradient of a scalar objective of the output with respect to the
    /// input state.
    pub fn input_gradient(&self, state: &[f64], objective: InputObjective) -> Vec<f64> {
        let (action, sign) = match objective {
            InputObjective::ActionValue(a) => (a, 1.0),
            InputObjective::NegActionValue(a) => (a, -1.0),
        };
        assert!(action < self.output_dim(), "action {action} out of range");
        let mut out_grad = vec![0.0; self.output_dim()];
        out_grad[action] = sign;
        let acts = self.forward_cached(state);
        let mut input_grad = vec![0.0; self.input_dim()];
        self.backprop_sample(&acts, &out_grad, None, Some(&mut input_grad));
        input_grad
    }

    fn check_input(&self, state: &[f64]) {
        assert_eq!(state.len(), self.input_dim(), "state dimension mismatch");
        assert!(state.iter().all(|v| v.is_finite()), "non-finite input state");
    }

    /// Post-activation values per layer; `acts[0]` is the input itself.
    fn forward_cached(&self, state: &[f64]) -> Vec<Vec<f64>> {
        self.check_input(state);
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(state.to_vec());
        for (idx, layer) in self.layers.iter().enumerate() {
            let hidden = idx + 1 < self.layers.len();
            let next = affine(layer, acts.last().expect("nonempty"), hidden);
            acts.push(next);
        }
        acts
    }

    /// Accumulates one sample's parameter gradients into `param_grads`
    /// and/or writes the input gradient into `input_grad`.
    fn backprop_sample(
        &self,
        acts: &[Vec<f64>],
        out_grad: &[f64],
        mut param_grads: Option<&mut GradientSet>,
        input_grad: Option<&mut Vec<f64>>,
    ) {
        let mut delta = out_grad.to_vec();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let input = &acts[idx];
            // Hidden layers: fold the ReLU derivative into delta. The cached
            // post-activation is max(0, z), so z > 0 iff activation > 0.
            if idx + 1 < self.layers.len() {
                for (d, &a) in delta.iter_mut().zip(&acts[idx + 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            if let Some(grads) = param_grads.as_deref_mut() {
                let g = &mut grads.layers[idx];
                for (o, &dz) in delta.iter().enumerate() {
                    g.biases[o] += dz;
                    let row = o * layer.in_dim;
                    for (i, &x) in input.iter().enumerate() {
                        g.weights[row + i] += dz * x;
                    }
                }
            }
            let need_down = idx > 0 || input_grad.is_some();
            if !need_down {
                continue;
            }
            let mut down = vec![0.0; layer.in_dim];
            for (o, &dz) in delta.iter().enumerate() {
                let row = o * layer.in_dim;
                for (i, d) in down.iter_mut().enumerate() {
                    *d += layer.weights[row + i] * dz;
                }
            }
            delta = down;
        }
        if let Some(ig) = input_grad {
            *ig = delta;
        }
    }
}

fn affine(layer: &Layer, input: &[f64], relu: bool) -> Vec<f64> {
    assert_eq!(input.len(), layer.in_dim, "layer input dimension mismatch");
    let mut out = Vec::with_capacity(layer.out_dim);
    for o in 0..layer.out_dim {
        let row = o * layer.in_dim;
        let mut sum = layer.biases[o];
        for (i, &x) in input.iter().enumerate() {
            sum += layer.weights[row + i] * x;
        }
        out.push(if relu { sum.max(0.0) } else { sum });
    }
    out
}
