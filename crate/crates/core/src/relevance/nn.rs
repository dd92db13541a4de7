//! Minimal dense feed-forward network with ReLU hidden layers, a two-way
//! softmax output, cross-entropy loss, backpropagation and Adam.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Fully connected layer; `weights` is row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero biases.
    pub fn init(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = (6.0 / (inputs + outputs) as f64).sqrt();
        Dense {
            inputs,
            outputs,
            weights: (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect(),
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>()
        }));
    }
}

/// Feed-forward stack producing two logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ffn {
    pub layers: Vec<Dense>,
}

/// Per-layer gradients, same shapes as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct FfnGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl FfnGrads {
    pub fn zeros(net: &Ffn) -> Self {
        FfnGrads {
            weights: net.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.weights
            .iter_mut()
            .chain(self.biases.iter_mut())
            .flat_map(|v| v.iter_mut())
            .for_each(|g| *g *= s);
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct Trace {
    /// `acts[0]` is the input; `acts[l + 1]` the post-activation output of
    /// layer `l` (logits for the last layer).
    acts: Vec<Vec<f64>>,
}

impl Trace {
    pub fn logits(&self) -> &[f64] {
        self.acts.last().expect("non-empty trace")
    }
}

pub fn softmax2(logits: &[f64]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

/// Cross-entropy of a two-way softmax for a label in {0, 1}, computed from
/// logits with log-sum-exp.
pub fn cross_entropy(logits: &[f64], label: usize) -> f64 {
    let m = logits[0].max(logits[1]);
    let lse = m + ((logits[0] - m).exp() + (logits[1] - m).exp()).ln();
    lse - logits[label]
}

impl Ffn {
    /// `input → hidden[0] → … → 2`, ReLU between layers.
    pub fn init(input: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(2);
        Ffn {
            layers: sizes.windows(2).map(|w| Dense::init(w[0], w[1], rng)).collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn forward(&self, x: &[f64]) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.forward(&acts[l], &mut out);
            if l != last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        Trace { acts }
    }

    pub fn predict_proba(&self, x: &[f64]) -> [f64; 2] {
        softmax2(self.forward(x).logits())
    }

    /// Accumulates gradients of the cross-entropy for `label` into `grads`
    /// and returns the gradient with respect to the input.
    pub fn backward(&self, trace: &Trace, label: usize, grads: &mut FfnGrads) -> Vec<f64> {
        let p = softmax2(trace.logits());
        let mut delta: Vec<f64> = vec![p[0], p[1]];
        delta[label] -= 1.0;
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.acts[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for (o, d) in delta.iter().enumerate() {
                gb[o] += d;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                for (g, x) in row.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, d) in delta.iter().enumerate() {
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            if l > 0 {
                // ReLU derivative on the previous layer's output
                for (p, a) in prev.iter_mut().zip(&trace.acts[l]) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            out.push(&mut l.weights);
            out.push(&mut l.biases);
        }
        out
    }
}

impl FfnGrads {
    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// Adam with the usual defaults (lr 1e-3, β = (0.9, 0.999), ε = 1e-8).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// One update over parallel lists of parameter and gradient tensors.
    pub fn step(&mut self, params: Vec<&mut Vec<f64>>, grads: Vec<&Vec<f64>>) {
        assert_eq!(params.len(), grads.len());
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / bc1;
                let vh = v[i] / bc2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn loss(net: &Ffn, x: &[f64], y: usize) -> f64 {
        cross_entropy(net.forward(x).logits(), y)
    }

    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut net = Ffn::init(3, &[5, 4], &mut rng);
        for l in &mut net.layers {
            l.biases.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
        }
        let x = [0.3, -1.2, 0.8];
        let mut grads = FfnGrads::zeros(&net);
        let dx = net.backward(&net.forward(&x), 1, &mut grads);
        let h = 1e-6;
        for l in 0..net.layers.len() {
            for i in 0..net.layers[l].weights.len() {
                let mut plus = net.clone();
                plus.layers[l].weights[i] += h;
                let mut minus = net.clone();
                minus.layers[l].weights[i] -= h;
                let fd = (loss(&plus, &x, 1) - loss(&minus, &x, 1)) / (2.0 * h);
                assert!((fd - grads.weights[l][i]).abs() < 1e-6, "layer {l} w{i}");
            }
        }
        for i in 0..3 {
            let mut xp = x;
            xp[i] += h;
            let mut xm = x;
            xm[i] -= h;
            let fd = (loss(&net, &xp, 1) - loss(&net, &xm, 1)) / (2.0 * h);
            assert!((fd - dx[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax2(&[1000.0, -1000.0]);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        assert!((cross_entropy(&[0.0, 0.0], 0) - 2f64.ln()).abs() < 1e-12);
    }
}
