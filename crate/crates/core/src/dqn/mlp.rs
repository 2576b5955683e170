//! Fully connected Q-network with hand-written backpropagation.
//!
//! Hidden layers use the configured activation, the output layer is linear.
//! The loss is the squared error on the taken action's output only, so every
//! other output receives zero gradient.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::NumericError;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Relu => x.max(S::zero()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    #[inline]
    fn derivative<S: Scalar>(self, y: S) -> S {
        match self {
            Activation::Relu => {
                if y > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Activation::Tanh => S::one() - y * y,
        }
    }
}

/// Dense layer; `weights` is `outputs × inputs`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense<S> {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Scalar> Dense<S> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![S::zero(); inputs * outputs],
            bias: vec![S::zero(); outputs],
        }
    }

    fn forward_into(&self, x: &[S], out: &mut Vec<S>) {
        out.clear();
        out.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (&w, &xi)| acc + w * xi)),
        );
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.bias).all(|v| v.is_finite())
    }
}

/// Action-value approximator mapping a switch-status vector to one value per branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QFunction<S> {
    layers: Vec<Dense<S>>,
    activation: Activation,
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    pub layers: Vec<Dense<S>>,
}

impl<S: Scalar> Gradients<S> {
    /// Flattened in [`QFunction::parameter`] order.
    pub fn flat(&self) -> Vec<S> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }
}

impl<S: Scalar> QFunction<S> {
    /// All-zero network with the given layer sizes (input first, output last).
    pub fn zeros(sizes: &[usize], activation: Activation) -> Self {
        assert!(
            sizes.len() >= 2,
            "need at least an input and an output size"
        );
        assert!(sizes.iter().all(|&s| s > 0), "layer sizes must be positive");
        QFunction {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            activation,
        }
    }

    /// Uniform initialisation scaled by fan-in (He for ReLU, Glorot for tanh); biases zero.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], activation: Activation, rng: &mut R) -> Self {
        let mut q = Self::zeros(sizes, activation);
        for layer in &mut q.layers {
            let bound = match activation {
                Activation::Relu => (6.0 / layer.inputs as f64).sqrt(),
                Activation::Tanh => (6.0 / (layer.inputs + layer.outputs) as f64).sqrt(),
            };
            for w in &mut layer.weights {
                *w = S::of(rng.gen_range(-bound..bound));
            }
        }
        q
    }

    /// Builds a network from explicit layers; shapes must chain.
    pub fn from_layers(layers: Vec<Dense<S>>, activation: Activation) -> Self {
        assert!(!layers.is_empty());
        for l in &layers {
            assert_eq!(l.weights.len(), l.inputs * l.outputs);
            assert_eq!(l.bias.len(), l.outputs);
        }
        for w in layers.windows(2) {
            assert_eq!(w[0].outputs, w[1].inputs, "layer shapes do not chain");
        }
        QFunction { layers, activation }
    }

    pub fn layers(&self) -> &[Dense<S>] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Mutable access to the `i`-th parameter: each layer's weights, then its biases.
    pub fn parameter(&mut self, mut i: usize) -> &mut S {
        for l in &mut self.layers {
            if i < l.weights.len() {
                return &mut l.weights[i];
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return &mut l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    pub fn check_finite(&self) -> Result<(), NumericError> {
        match self.layers.iter().position(|l| !l.is_finite()) {
            Some(layer) => Err(NumericError::NonFiniteParameter { layer }),
            None => Ok(()),
        }
    }

    /// Outputs of every layer, post-activation; the last entry is the Q-vector.
    fn trace(&self, input: &[S]) -> Result<Vec<Vec<S>>, NumericError> {
        if input.len() != self.input_dim() {
            return Err(NumericError::InputShape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut outs: Vec<Vec<S>> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = if i == 0 { input } else { &outs[i - 1] };
            let mut y = Vec::with_capacity(layer.outputs);
            layer.forward_into(x, &mut y);
            if i != last {
                for v in &mut y {
                    *v = self.activation.apply(*v);
                }
            }
            outs.push(y);
        }
        if outs[last].iter().any(|v| !v.is_finite()) {
            self.check_finite()?;
        }
        Ok(outs)
    }

    /// Q-value for every action.
    pub fn forward(&self, input: &[S]) -> Result<Vec<S>, NumericError> {
        Ok(self.trace(input)?.pop().expect("at least one layer"))
    }

    /// Squared error `(Q(input)[action] - target)²` and its gradient.
    ///
    /// `error_clip` bounds the magnitude of `Q - target` in the backward pass only.
    pub fn loss_gradient(
        &self,
        input: &[S],
        action: usize,
        target: S,
        error_clip: Option<S>,
    ) -> Result<(S, Gradients<S>), NumericError> {
        let outs = self.trace(input)?;
        let q = outs[outs.len() - 1][action];
        let err = q - target;
        let loss = err * err;
        let err = match error_clip {
            Some(c) => err.max(-c).min(c),
            None => err,
        };

        let mut grads = Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect(),
        };
        // delta: dL/d(pre-activation) of the current layer
        let mut delta = vec![S::zero(); self.output_dim()];
        delta[action] = (S::one() + S::one()) * err;
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let x = if i == 0 { input } else { &outs[i - 1] };
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == S::zero() {
                    continue;
                }
                g.bias[o] = d;
                for (gw, &xi) in g.weights[o * layer.inputs..(o + 1) * layer.inputs]
                    .iter_mut()
                    .zip(x)
                {
                    *gw = d * xi;
                }
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![S::zero(); layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == S::zero() {
                    continue;
                }
                for (p, &w) in prev
                    .iter_mut()
                    .zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs])
                {
                    *p += d * w;
                }
            }
            for (p, &y) in prev.iter_mut().zip(&outs[i - 1]) {
                *p *= self.activation.derivative(y);
            }
            delta = prev;
        }
        Ok((loss, grads))
    }

    /// Gradient-descent step `θ ← θ - alpha · grad`.
    pub fn apply_gradients(&mut self, grads: &Gradients<S>, alpha: S) {
        for (l, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, &gw) in l.weights.iter_mut().zip(&g.weights) {
                *w -= alpha * gw;
            }
            for (b, &gb) in l.bias.iter_mut().zip(&g.bias) {
                *b -= alpha * gb;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_bias() {
        let mut q = QFunction::<f64>::zeros(&[4, 3, 2], Activation::Relu);
        q.layers[1].bias = vec![0.5, -1.5];
        assert_eq!(q.forward(&[1.0, 0.0, 1.0, 1.0]).unwrap(), vec![0.5, -1.5]);
        assert_eq!(q.forward(&[0.0; 4]).unwrap(), vec![0.5, -1.5]);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = QFunction::<f64>::random(&[5, 8, 5], Activation::Relu, &mut rng);
        let x = [1.0, 0.0, 1.0, 1.0, 0.0];
        assert_eq!(q.forward(&x).unwrap(), q.forward(&x).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(q, QFunction::random(&[5, 8, 5], Activation::Relu, &mut rng));
    }

    #[test]
    fn hand_computed_forward() {
        // 2-2-2: hidden = relu(W1 x + b1), out = W2 h + b2
        let q = QFunction::from_layers(
            vec![
                Dense {
                    inputs: 2,
                    outputs: 2,
                    weights: vec![1.0, 0.0, 0.0, 1.0],
                    bias: vec![0.5, -3.0],
                },
                Dense {
                    inputs: 2,
                    outputs: 2,
                    weights: vec![2.0, 1.0, -1.0, 1.0],
                    bias: vec![0.0, 1.0],
                },
            ],
            Activation::Relu,
        );
        // h = relu([1.5, -1.0]) = [1.5, 0]; out = [3.0, -0.5]
        assert_eq!(q.forward(&[1.0, 2.0]).unwrap(), vec![3.0, -0.5]);
    }

    #[test]
    fn hand_computed_gradient_step() {
        let q0 = QFunction::from_layers(
            vec![
                Dense {
                    inputs: 2,
                    outputs: 2,
                    weights: vec![1.0, 0.0, 0.0, 1.0],
                    bias: vec![0.0, 0.0],
                },
                Dense {
                    inputs: 2,
                    outputs: 2,
                    weights: vec![1.0, 1.0, 1.0, -1.0],
                    bias: vec![0.0, 0.0],
                },
            ],
            Activation::Relu,
        );
        // x = [1, 2] → h = [1, 2] → out = [3, -1]; action 0, target 1 → err 2, dL/dq0 = 4.
        let (loss, g) = q0.loss_gradient(&[1.0, 2.0], 0, 1.0, None).unwrap();
        assert_eq!(loss, 4.0);
        assert_eq!(g.layers[1].weights, vec![4.0, 8.0, 0.0, 0.0]);
        assert_eq!(g.layers[1].bias, vec![4.0, 0.0]);
        // dL/dh = 4 · W2[0,:] = [4, 4]; both units active.
        assert_eq!(g.layers[0].weights, vec![4.0, 8.0, 4.0, 8.0]);
        assert_eq!(g.layers[0].bias, vec![4.0, 4.0]);

        let mut q = q0.clone();
        q.apply_gradients(&g, 0.1);
        assert_relative_eq!(q.layers[1].weights[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(q.layers[1].weights[1], 0.2, epsilon = 1e-15);
        assert_relative_eq!(q.layers[0].weights[3], 0.2, epsilon = 1e-15);
        assert_relative_eq!(q.layers[0].bias[0], -0.4, epsilon = 1e-15);
        assert_eq!(q.layers[1].weights[2..], [1.0, -1.0]);
    }

    #[test]
    fn zero_loss_means_zero_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let q = QFunction::<f64>::random(&[3, 4, 3], Activation::Tanh, &mut rng);
        let x = [1.0, 0.0, 1.0];
        let target = q.forward(&x).unwrap()[1];
        let (loss, g) = q.loss_gradient(&x, 1, target, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flat().iter().all(|&v| v == 0.0));
        let mut q2 = q.clone();
        q2.apply_gradients(&g, 0.1);
        assert_eq!(q, q2);
    }

    #[test]
    fn error_clip_bounds_backward_only() {
        let q = QFunction::<f64>::zeros(&[1, 1], Activation::Relu);
        let (loss, g) = q.loss_gradient(&[1.0], 0, 10.0, Some(1.0)).unwrap();
        assert_eq!(loss, 100.0);
        assert_eq!(g.layers[0].bias, vec![-2.0]);
    }

    #[test]
    fn shape_and_health_errors() {
        let mut q = QFunction::<f64>::zeros(&[2, 2], Activation::Relu);
        assert!(matches!(
            q.forward(&[1.0]),
            Err(NumericError::InputShape { .. })
        ));
        *q.parameter(0) = f64::NAN;
        assert_eq!(
            q.forward(&[1.0, 1.0]),
            Err(NumericError::NonFiniteParameter { layer: 0 })
        );
    }

    #[test]
    fn parameter_indexing_matches_flat_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut q = QFunction::<f64>::random(&[2, 3, 2], Activation::Relu, &mut rng);
        assert_eq!(q.parameter_count(), 2 * 3 + 3 + 3 * 2 + 2);
        let (_, g) = q.loss_gradient(&[1.0, 1.0], 0, 0.0, None).unwrap();
        assert_eq!(g.flat().len(), q.parameter_count());
        *q.parameter(9) = 42.0;
        assert_eq!(q.layers[1].weights[0], 42.0);
    }
}
