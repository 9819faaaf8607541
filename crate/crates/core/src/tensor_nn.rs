//! Dense MLP substrate: forward pass, exact reverse-mode gradients, Adam,
//! and Polyak target averaging. Everything is f64 and deterministic.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed in terms of pre-activation z and output y.
    fn derivative(self, z: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully-connected network with relu hidden layers. Weights are row-major
/// (out x in), flattened per layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub output_activation: Activation,
}

impl Mlp {
    /// He-uniform init for relu layers, uniform(-3e-3, 3e-3) for the output
    /// layer so initial tanh actions stay near zero.
    pub fn new<R: Rng>(layer_sizes: &[usize], output_activation: Activation, rng: &mut R) -> Self {
        assert!(layer_sizes.len() >= 2, "need at least input and output layer");
        assert!(layer_sizes.iter().all(|&n| n > 0), "layer sizes must be positive");
        let n_layers = layer_sizes.len() - 1;
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        for i in 0..n_layers {
            let (fan_in, fan_out) = (layer_sizes[i], layer_sizes[i + 1]);
            let limit = if i + 1 == n_layers {
                3e-3
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            let w: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            weights.push(w);
            biases.push(vec![0.0; fan_out]);
        }
        Mlp {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            output_activation,
        }
    }

    pub fn zeros(layer_sizes: &[usize], output_activation: Activation) -> Self {
        let n_layers = layer_sizes.len() - 1;
        Mlp {
            layer_sizes: layer_sizes.to_vec(),
            weights: (0..n_layers)
                .map(|i| vec![0.0; layer_sizes[i] * layer_sizes[i + 1]])
                .collect(),
            biases: (0..n_layers).map(|i| vec![0.0; layer_sizes[i + 1]]).collect(),
            output_activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(input)?.output().to_vec())
    }

    /// Forward pass retaining pre-activations and activations for backprop.
    pub fn forward_cached(&self, input: &[f64]) -> Result<ForwardCache> {
        check_dim("mlp_forward input", self.input_dim(), input.len())?;
        let n = self.n_layers();
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut preacts: Vec<Vec<f64>> = Vec::with_capacity(n);
        activations.push(input.to_vec());
        for layer in 0..n {
            let x = &activations[layer];
            let fan_in = self.layer_sizes[layer];
            let fan_out = self.layer_sizes[layer + 1];
            let w = &self.weights[layer];
            let b = &self.biases[layer];
            let act = if layer + 1 == n {
                self.output_activation
            } else {
                Activation::Relu
            };
            let mut z = vec![0.0; fan_out];
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                let mut acc = b[o];
                for (wv, xv) in row.iter().zip(x.iter()) {
                    acc += wv * xv;
                }
                z[o] = acc;
            }
            let a: Vec<f64> = z.iter().map(|&zv| act.apply(zv)).collect();
            preacts.push(z);
            activations.push(a);
        }
        Ok(ForwardCache {
            activations,
            preacts,
        })
    }

    /// Reverse-mode gradients of output . upstream_grad w.r.t. all parameters
    /// and the input. `output_preact_grad` adds a gradient contribution
    /// directly on the output layer's pre-activations (used for pre-tanh
    /// action regularization).
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream_grad: &[f64],
        output_preact_grad: Option<&[f64]>,
    ) -> Result<(GradientBundle, Vec<f64>)> {
        check_dim("mlp_backward upstream", self.output_dim(), upstream_grad.len())?;
        let n = self.n_layers();
        let mut bundle = GradientBundle::zeros_like(self);
        // delta holds dL/dz for the current layer
        let mut delta: Vec<f64> = Vec::new();
        for layer in (0..n).rev() {
            let fan_in = self.layer_sizes[layer];
            let fan_out = self.layer_sizes[layer + 1];
            let act = if layer + 1 == n {
                self.output_activation
            } else {
                Activation::Relu
            };
            let z = &cache.preacts[layer];
            let y = &cache.activations[layer + 1];
            if layer + 1 == n {
                delta = (0..fan_out)
                    .map(|o| upstream_grad[o] * act.derivative(z[o], y[o]))
                    .collect();
                if let Some(extra) = output_preact_grad {
                    check_dim("output_preact_grad", fan_out, extra.len())?;
                    for (d, e) in delta.iter_mut().zip(extra.iter()) {
                        *d += e;
                    }
                }
            } else {
                for (o, d) in delta.iter_mut().enumerate() {
                    *d *= act.derivative(z[o], y[o]);
                }
            }
            let x = &cache.activations[layer];
            let dw = &mut bundle.d_weights[layer];
            for o in 0..fan_out {
                let d = delta[o];
                let row = &mut dw[o * fan_in..(o + 1) * fan_in];
                for (g, xv) in row.iter_mut().zip(x.iter()) {
                    *g += d * xv;
                }
            }
            bundle.d_biases[layer].copy_from_slice(&delta);
            // propagate to previous layer: dL/dx = W^T delta
            let w = &self.weights[layer];
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                let row = &w[o * fan_in..(o + 1) * fan_in];
                for (p, wv) in prev.iter_mut().zip(row.iter()) {
                    *p += d * wv;
                }
            }
            delta = prev;
        }
        Ok((bundle, delta))
    }

    pub fn shape_congruent(&self, other: &Mlp) -> bool {
        self.layer_sizes == other.layer_sizes && self.output_activation == other.output_activation
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|p| p.is_finite()))
    }
}

pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
    preacts: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().unwrap()
    }

    /// Pre-activations of the output layer (pre-tanh for actors).
    pub fn output_preact(&self) -> &[f64] {
        self.preacts.last().unwrap()
    }
}

/// Per-layer parameter gradients, shape-congruent with an Mlp.
#[derive(Debug, Clone)]
pub struct GradientBundle {
    pub d_weights: Vec<Vec<f64>>,
    pub d_biases: Vec<Vec<f64>>,
}

impl GradientBundle {
    pub fn zeros_like(net: &Mlp) -> Self {
        GradientBundle {
            d_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            d_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn accumulate(&mut self, other: &GradientBundle) {
        for (a, b) in self.d_weights.iter_mut().zip(other.d_weights.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
        for (a, b) in self.d_biases.iter_mut().zip(other.d_biases.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.d_weights.iter_mut().chain(self.d_biases.iter_mut()) {
            for x in v.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.d_weights
            .iter()
            .chain(self.d_biases.iter())
            .all(|v| v.iter().all(|g| g.is_finite()))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment accumulators for one Mlp.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    m_weights: Vec<Vec<f64>>,
    v_weights: Vec<Vec<f64>>,
    m_biases: Vec<Vec<f64>>,
    v_biases: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(net: &Mlp, hyper: AdamHyper) -> Self {
        AdamState {
            hyper,
            step: 0,
            m_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            v_weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            m_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            v_biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

fn adam_apply(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    h: &AdamHyper,
    bias1: f64,
    bias2: f64,
) {
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
        v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
        let m_hat = m[i] / bias1;
        let v_hat = v[i] / bias2;
        params[i] -= h.learning_rate * m_hat / (v_hat.sqrt() + h.epsilon);
    }
}

/// One bias-corrected Adam update. Aborts on non-finite gradients without
/// touching the parameters.
pub fn adam_step(net: &mut Mlp, grads: &GradientBundle, state: &mut AdamState) -> Result<()> {
    if grads.d_weights.len() != net.weights.len()
        || grads
            .d_weights
            .iter()
            .zip(net.weights.iter())
            .any(|(g, w)| g.len() != w.len())
    {
        return Err(Error::Contract("gradient bundle not shape-congruent with net".into()));
    }
    if !grads.all_finite() {
        return Err(Error::Divergence("non-finite gradient in adam_step".into()));
    }
    state.step += 1;
    let h = state.hyper;
    let bias1 = 1.0 - h.beta1.powi(state.step as i32);
    let bias2 = 1.0 - h.beta2.powi(state.step as i32);
    for layer in 0..net.weights.len() {
        adam_apply(
            &mut net.weights[layer],
            &grads.d_weights[layer],
            &mut state.m_weights[layer],
            &mut state.v_weights[layer],
            &h,
            bias1,
            bias2,
        );
        adam_apply(
            &mut net.biases[layer],
            &grads.d_biases[layer],
            &mut state.m_biases[layer],
            &mut state.v_biases[layer],
            &h,
            bias1,
            bias2,
        );
    }
    Ok(())
}

/// p_target' = (1 - tau) * p_target + tau * p_online, element-wise.
pub fn polyak_update(target: &mut Mlp, online: &Mlp, tau: f64) -> Result<()> {
    if !target.shape_congruent(online) {
        return Err(Error::Contract("polyak_update: nets not shape-congruent".into()));
    }
    let blend = |t: &mut Vec<f64>, o: &Vec<f64>| {
        for (tp, op) in t.iter_mut().zip(o.iter()) {
            *tp = (1.0 - tau) * *tp + tau * *op;
        }
    };
    for (t, o) in target.weights.iter_mut().zip(online.weights.iter()) {
        blend(t, o);
    }
    for (t, o) in target.biases.iter_mut().zip(online.biases.iter()) {
        blend(t, o);
    }
    Ok(())
}
