//! Small fully connected tanh network with hand-written backpropagation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Dense layer, `weights` row-major with shape `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Layer { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for (w, xi) in row.iter().zip(x) {
                acc += w * xi;
            }
            out.push(acc);
        }
    }
}

/// Hidden layers use tanh; the output layer is affine and scalar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MLPWeights {
    pub layers: Vec<Layer>,
}

impl MLPWeights {
    /// All-zero network with the given layer sizes, e.g. `[4, 16, 16, 1]`.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        ensure(sizes.len() >= 2, || "network needs an input and an output layer".into())?;
        ensure(*sizes.last().unwrap() == 1, || "network output must be scalar".into())?;
        ensure(sizes.iter().all(|&s| s > 0), || "layer sizes must be positive".into())?;
        Ok(MLPWeights { layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect() })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let a = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-a..a);
            }
        }
        Ok(net)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        ensure(!self.layers.is_empty(), || "network has no layers".into())?;
        for (i, l) in self.layers.iter().enumerate() {
            ensure(l.weights.len() == l.inputs * l.outputs && l.bias.len() == l.outputs, || {
                format!("layer {i} has inconsistent weight dimensions")
            })?;
            if i > 0 {
                ensure(self.layers[i - 1].outputs == l.inputs, || {
                    format!(
                        "layer {i} expects {} inputs but previous layer emits {}",
                        l.inputs,
                        self.layers[i - 1].outputs
                    )
                })?;
            }
        }
        ensure(self.layers.last().unwrap().outputs == 1, || "network output must be scalar".into())?;
        ensure(self.params().iter().all(|p| p.is_finite()), || "network weights must be finite".into())
    }

    /// Flattened parameters: per layer, weights then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count());
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + nb]);
            at += nb;
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!("network expects {} inputs, got {}", self.input_dim(), x.len())));
        }
        Ok(self.forward_unchecked(x))
    }

    pub(crate) fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            l.apply(&a, &mut z);
            if i < last {
                z.iter_mut().for_each(|v| *v = v.tanh());
            }
            std::mem::swap(&mut a, &mut z);
        }
        a[0]
    }

    /// Forward pass, then adds `upstream * d(output)/d(params)` into `grad`.
    /// Returns the output.
    pub fn accumulate_gradient(&self, x: &[f64], upstream: f64, grad: &mut [f64], scratch: &mut Scratch) -> f64 {
        let n_layers = self.layers.len();
        scratch.activations.resize(n_layers + 1, Vec::new());
        scratch.activations[0].clear();
        scratch.activations[0].extend_from_slice(x);
        for (i, l) in self.layers.iter().enumerate() {
            let (before, after) = scratch.activations.split_at_mut(i + 1);
            l.apply(&before[i], &mut after[0]);
            if i + 1 < n_layers {
                after[0].iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        let output = scratch.activations[n_layers][0];

        // offsets of each layer's block in the flat parameter vector
        let mut offsets = Vec::with_capacity(n_layers);
        let mut at = 0;
        for l in &self.layers {
            offsets.push(at);
            at += l.param_count();
        }

        scratch.delta.clear();
        scratch.delta.push(upstream);
        for i in (0..n_layers).rev() {
            let l = &self.layers[i];
            let input = &scratch.activations[i];
            let off = offsets[i];
            for o in 0..l.outputs {
                let d = scratch.delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[off + o * l.inputs..off + (o + 1) * l.inputs];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[off + l.weights.len() + o] += d;
            }
            if i > 0 {
                scratch.next_delta.clear();
                scratch.next_delta.resize(l.inputs, 0.0);
                for o in 0..l.outputs {
                    let d = scratch.delta[o];
                    let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                    for (nd, w) in scratch.next_delta.iter_mut().zip(row) {
                        *nd += d * w;
                    }
                }
                // input to layer i is tanh output of layer i-1
                for (nd, a) in scratch.next_delta.iter_mut().zip(input) {
                    *nd *= 1.0 - a * a;
                }
                std::mem::swap(&mut scratch.delta, &mut scratch.next_delta);
            }
        }
        output
    }
}

/// Reusable buffers for [`MLPWeights::accumulate_gradient`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    activations: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn parameter_counts() {
        assert_eq!(MLPWeights::zeros(&[4, 16, 16, 1]).unwrap().param_count(), 369);
        assert_eq!(MLPWeights::zeros(&[4, 8, 8, 1]).unwrap().param_count(), 121);
        assert_eq!(MLPWeights::zeros(&[2, 16, 16, 1]).unwrap().param_count(), 337);
        assert_eq!(MLPWeights::zeros(&[2, 8, 8, 1]).unwrap().param_count(), 105);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = MLPWeights::zeros(&[4, 16, 16, 1]).unwrap();
        assert_eq!(net.forward(&[0.3, -1.0, 2.0, 5.0]).unwrap(), 0.0);
    }

    #[test]
    fn output_bias_passes_through() {
        let mut net = MLPWeights::zeros(&[2, 8, 8, 1]).unwrap();
        net.layers[2].bias[0] = 0.37;
        for x in [[0.0, 0.0], [5.0, -3.0], [-1.0, 100.0]] {
            assert_eq!(net.forward(&x).unwrap(), 0.37);
        }
    }

    #[test]
    fn wrong_input_length_rejected() {
        let net = MLPWeights::zeros(&[4, 8, 8, 1]).unwrap();
        assert!(net.forward(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn params_round_trip() {
        let net = MLPWeights::glorot(&[4, 8, 8, 1], &mut seeded(1)).unwrap();
        let mut other = MLPWeights::zeros(&[4, 8, 8, 1]).unwrap();
        other.set_params(&net.params());
        assert_eq!(net, other);
        net.validate().unwrap();
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = seeded(11);
        for sizes in [[4, 16, 16, 1], [2, 8, 8, 1]] {
            let net = MLPWeights::glorot(&sizes, &mut rng).unwrap();
            let mut net = net;
            // nonzero biases so every path is exercised
            let mut p = net.params();
            for v in p.iter_mut() {
                *v += rng.random_range(-0.1..0.1);
            }
            net.set_params(&p);
            let x: Vec<f64> = (0..sizes[0]).map(|_| rng.random_range(-2.0..2.0)).collect();
            let mut grad = vec![0.0; net.param_count()];
            net.accumulate_gradient(&x, 1.0, &mut grad, &mut Scratch::default());
            let h = 1e-5;
            let mut worst: f64 = 0.0;
            for i in 0..p.len() {
                let mut plus = p.clone();
                plus[i] += h;
                let mut minus = p.clone();
                minus[i] -= h;
                net.set_params(&plus);
                let fp = net.forward(&x).unwrap();
                net.set_params(&minus);
                let fm = net.forward(&x).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-3);
                worst = worst.max(rel);
            }
            net.set_params(&p);
            assert!(worst < 1e-5, "worst relative gradient error {worst}");
        }
    }

    #[test]
    fn one_hidden_unit_hand_evaluation() {
        // 2 -> 1 -> 1 -> 1 with hand-picked weights
        let mut net = MLPWeights::zeros(&[2, 1, 1, 1]).unwrap();
        net.layers[0].weights = vec![0.5, -0.25];
        net.layers[0].bias = vec![0.1];
        net.layers[1].weights = vec![2.0];
        net.layers[1].bias = vec![-0.3];
        net.layers[2].weights = vec![1.5];
        net.layers[2].bias = vec![0.2];
        let x = [0.8, -1.2];
        let h1 = (0.5 * 0.8 + -0.25 * -1.2 + 0.1f64).tanh();
        let h2 = (2.0 * h1 - 0.3f64).tanh();
        let expected = 1.5 * h2 + 0.2;
        assert!((net.forward(&x).unwrap() - expected).abs() < 1e-12);
    }
}
