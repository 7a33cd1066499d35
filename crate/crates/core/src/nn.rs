//! Dense feed-forward network with exact reverse-mode gradients and Adam.
//!
//! Layer `j` computes `h_j = f(W_j h_{j-1} + b_j)`; the activation is applied at every
//! layer including the last. Weights are stored row-major as `d_j x d_{j-1}`.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::linalg;
use crate::math;
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] =
        [Activation::Sigmoid, Activation::Tanh, Activation::Relu, Activation::Identity];

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => math::sigmoid(x),
            Activation::Tanh => math::tanh(x),
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    /// `f'(z)`, computed from the pre-activation `z` and output `h = f(z)`.
    /// The relu derivative at 0 is 0.
    #[inline]
    pub fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Sigmoid => h * (1.0 - h),
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    pub fn apply_slice(self, xs: &mut [f64]) {
        for x in xs {
            *x = self.apply(*x);
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(alloc::format!("unknown activation `{other}`"))),
        }
    }
}

pub fn activate(kind: Activation, x: f64) -> f64 {
    kind.apply(x)
}

/// Inverted dropout: each coordinate is zeroed with probability `rate`, survivors are
/// scaled by `1 / (1 - rate)`. `rate == 0` returns the input unchanged and draws nothing.
pub fn apply_input_dropout(x: &[f64], rate: f64, rng: &mut Rng) -> Result<Vec<f64>> {
    check_dropout(rate)?;
    let mut out = x.to_vec();
    if rate > 0.0 {
        let scale = 1.0 / (1.0 - rate);
        for v in &mut out {
            *v = if keep(rate, rng) { *v * scale } else { 0.0 };
        }
    }
    Ok(out)
}

pub(crate) fn check_dropout(rate: f64) -> Result<()> {
    if (0.0..1.0).contains(&rate) {
        Ok(())
    } else {
        Err(Error::InvalidDropout(rate))
    }
}

#[inline]
pub(crate) fn keep(rate: f64, rng: &mut Rng) -> bool {
    use rand::Rng as _;
    rng.gen::<f64>() >= rate
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    inputs: usize,
    outputs: usize,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    #[inline]
    pub fn weight(&self, row: usize, col: usize) -> f64 {
        self.weights[row * self.inputs + col]
    }
}

/// Parameters of the network `h_L(.)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
    activation: Activation,
}

fn validate_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 {
        return Err(Error::InvalidLayerDims(alloc::format!(
            "need at least input and output dims, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidLayerDims(alloc::format!("zero-width layer in {dims:?}")));
    }
    Ok(())
}

impl Mlp {
    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(dims: &[usize], activation: Activation, rng: &mut Rng) -> Result<Self> {
        validate_dims(dims)?;
        let layers = dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = math::sqrt(6.0 / (inputs + outputs) as f64);
                let weights = (0..inputs * outputs).map(|_| rng::uniform_sym(rng, bound)).collect();
                Layer { weights, bias: alloc::vec![0.0; outputs], inputs, outputs }
            })
            .collect();
        Ok(Self { layers, activation })
    }

    pub fn from_seed(dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        Self::init(dims, activation, &mut rng::seeded(seed))
    }

    /// Assembles a network from explicit parameters (row-major weights).
    pub fn from_parts(
        dims: &[usize],
        activation: Activation,
        weights: Vec<Vec<f64>>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        validate_dims(dims)?;
        let depth = dims.len() - 1;
        if weights.len() != depth || biases.len() != depth {
            return Err(Error::DimensionMismatch {
                what: "layer count",
                expected: depth,
                found: weights.len().min(biases.len()),
            });
        }
        let mut layers = Vec::with_capacity(depth);
        for (j, (w, b)) in weights.into_iter().zip(biases).enumerate() {
            let (inputs, outputs) = (dims[j], dims[j + 1]);
            if w.len() != inputs * outputs {
                return Err(Error::DimensionMismatch { what: "weights", expected: inputs * outputs, found: w.len() });
            }
            if b.len() != outputs {
                return Err(Error::DimensionMismatch { what: "bias", expected: outputs, found: b.len() });
            }
            if w.iter().chain(&b).any(|v| !v.is_finite()) {
                return Err(Error::InvalidLayerDims(alloc::format!("non-finite parameter in layer {}", j + 1)));
            }
            layers.push(Layer { weights: w, bias: b, inputs, outputs });
        }
        Ok(Self { layers, activation })
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = Vec::with_capacity(self.layers.len() + 1);
        d.push(self.input_dim());
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    /// Number of layers L.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// `Σ_j (d_j d_{j-1} + d_j)`
    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// `Σ_j ‖W_j‖²_F` (biases excluded).
    pub fn weight_sq_norm(&self) -> f64 {
        self.layers.iter().map(|l| linalg::sum_squares(&l.weights)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }

    pub fn forward(&self, x: &[f64]) -> Result<ForwardTrace> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { what: "network input", expected: self.input_dim(), found: x.len() });
        }
        let mut pre = Vec::with_capacity(self.depth());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for layer in &self.layers {
            let prev = post.last().map(Vec::as_slice).unwrap_or(x);
            let mut z = layer.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                *zo += linalg::dot(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs], prev);
            }
            let mut h = z.clone();
            self.activation.apply_slice(&mut h);
            pre.push(z);
            post.push(h);
        }
        Ok(ForwardTrace { input: x.to_vec(), pre_activations: pre, activations: post })
    }

    /// `h_L(x)` only.
    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.activations.pop().expect("depth >= 1"))
    }

    /// Gradients of `grad_output · h_L` with respect to every parameter and the input.
    pub fn backward(&self, trace: &ForwardTrace, grad_output: &[f64]) -> Result<MlpGradients> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::DimensionMismatch { what: "output gradient", expected: self.output_dim(), found: grad_output.len() });
        }
        if trace.activations.len() != self.depth() || trace.input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { what: "trace depth", expected: self.depth(), found: trace.activations.len() });
        }
        let mut grads = MlpGradients::zeros_like(self);
        let mut upstream = grad_output.to_vec();
        for j in (0..self.depth()).rev() {
            let layer = &self.layers[j];
            let z = &trace.pre_activations[j];
            let h = &trace.activations[j];
            if z.len() != layer.outputs {
                return Err(Error::DimensionMismatch { what: "trace layer", expected: layer.outputs, found: z.len() });
            }
            let delta: Vec<f64> = (0..layer.outputs)
                .map(|o| upstream[o] * self.activation.derivative(z[o], h[o]))
                .collect();
            let prev = if j == 0 { &trace.input } else { &trace.activations[j - 1] };
            let gw = &mut grads.weights[j];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (g, &p) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(prev) {
                        *g = d * p;
                    }
                }
            }
            grads.biases[j].copy_from_slice(&delta);
            let mut next = alloc::vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    for (n, &w) in next.iter_mut().zip(&layer.weights[o * layer.inputs..(o + 1) * layer.inputs]) {
                        *n += d * w;
                    }
                }
            }
            upstream = next;
        }
        grads.input = upstream;
        Ok(grads)
    }

    /// Batched forward pass over sparse input rows.
    pub fn forward_batch(&self, input: &SparseBatch) -> Result<BatchTrace> {
        if input.dim != self.input_dim() {
            return Err(Error::DimensionMismatch { what: "batch input", expected: self.input_dim(), found: input.dim });
        }
        let rows = input.len();
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for (j, layer) in self.layers.iter().enumerate() {
            let mut z = alloc::vec![0.0; rows * layer.outputs];
            for r in 0..rows {
                z[r * layer.outputs..(r + 1) * layer.outputs].copy_from_slice(&layer.bias);
            }
            if j == 0 {
                for r in 0..rows {
                    let zr = &mut z[r * layer.outputs..(r + 1) * layer.outputs];
                    let (idx, val) = input.row(r);
                    for (&c, &v) in idx.iter().zip(val) {
                        for (o, zo) in zr.iter_mut().enumerate() {
                            *zo += v * layer.weights[o * layer.inputs + c];
                        }
                    }
                }
            } else {
                let prev = &post[j - 1];
                linalg::matmul_nt(rows, layer.inputs, layer.outputs, prev, &layer.weights, 1.0, &mut z);
            }
            let mut h = z.clone();
            self.activation.apply_slice(&mut h);
            pre.push(z);
            post.push(h);
        }
        Ok(BatchTrace { rows, pre_activations: pre, activations: post })
    }

    /// Accumulates into `grads` the gradients of `Σ_r grad_output[r] · h_L(row r)`.
    /// `grads.input` is left untouched.
    pub fn backward_batch(
        &self,
        input: &SparseBatch,
        trace: &BatchTrace,
        grad_output: &[f64],
        grads: &mut MlpGradients,
    ) -> Result<()> {
        let rows = trace.rows;
        if grad_output.len() != rows * self.output_dim() {
            return Err(Error::DimensionMismatch { what: "batch output gradient", expected: rows * self.output_dim(), found: grad_output.len() });
        }
        if input.len() != rows {
            return Err(Error::DimensionMismatch { what: "batch rows", expected: rows, found: input.len() });
        }
        let mut upstream = grad_output.to_vec();
        for j in (0..self.depth()).rev() {
            let layer = &self.layers[j];
            let z = &trace.pre_activations[j];
            let h = &trace.activations[j];
            let mut delta = upstream;
            for ((d, &zv), &hv) in delta.iter_mut().zip(z).zip(h) {
                *d *= self.activation.derivative(zv, hv);
            }
            for r in 0..rows {
                for (g, &d) in grads.biases[j].iter_mut().zip(&delta[r * layer.outputs..(r + 1) * layer.outputs]) {
                    *g += d;
                }
            }
            if j == 0 {
                let gw = &mut grads.weights[0];
                for r in 0..rows {
                    let dr = &delta[r * layer.outputs..(r + 1) * layer.outputs];
                    let (idx, val) = input.row(r);
                    for (&c, &v) in idx.iter().zip(val) {
                        for (o, &d) in dr.iter().enumerate() {
                            gw[o * layer.inputs + c] += d * v;
                        }
                    }
                }
                upstream = Vec::new();
            } else {
                let prev = &trace.activations[j - 1];
                linalg::matmul_tn(layer.outputs, rows, layer.inputs, &delta, prev, 1.0, &mut grads.weights[j]);
                let mut next = alloc::vec![0.0; rows * layer.inputs];
                linalg::matmul_nn(rows, layer.outputs, layer.inputs, &delta, &layer.weights, 0.0, &mut next);
                upstream = next;
            }
        }
        Ok(())
    }
}

/// Everything computed by one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// Network input (after dropout, when training).
    pub input: Vec<f64>,
    pub pre_activations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("depth >= 1")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    /// Gradient with respect to the network input.
    pub input: Vec<f64>,
}

impl MlpGradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            weights: net.layers.iter().map(|l| alloc::vec![0.0; l.weights.len()]).collect(),
            biases: net.layers.iter().map(|l| alloc::vec![0.0; l.bias.len()]).collect(),
            input: Vec::new(),
        }
    }

    pub fn fill_zero(&mut self) {
        for b in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            b.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Adds `2λ W_j` to every weight gradient.
    pub fn add_weight_decay(&mut self, net: &Mlp, l2: f64) {
        if l2 == 0.0 {
            return;
        }
        for (g, layer) in self.weights.iter_mut().zip(&net.layers) {
            for (gv, &w) in g.iter_mut().zip(&layer.weights) {
                *gv += 2.0 * l2 * w;
            }
        }
    }
}

/// Rows of sparse network inputs in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseBatch {
    dim: usize,
    ptr: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl SparseBatch {
    pub fn new(dim: usize) -> Self {
        Self { dim, ptr: alloc::vec![0], idx: Vec::new(), val: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends one row. Indices must be below `dim`.
    pub fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (i, v) in entries {
            debug_assert!(i < self.dim);
            if v != 0.0 {
                self.idx.push(i);
                self.val.push(v);
            }
        }
        self.ptr.push(self.idx.len());
    }

    /// Appends a binary row, applying inverted dropout when `rate > 0`.
    pub fn push_binary_row(&mut self, ones: &[usize], dropout: f64, rng: &mut Rng) {
        if dropout > 0.0 {
            let scale = 1.0 / (1.0 - dropout);
            for &i in ones {
                if keep(dropout, rng) {
                    self.idx.push(i);
                    self.val.push(scale);
                }
            }
            self.ptr.push(self.idx.len());
        } else {
            self.push_row(ones.iter().map(|&i| (i, 1.0)));
        }
    }

    pub fn clear(&mut self) {
        self.ptr.truncate(1);
        self.idx.clear();
        self.val.clear();
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.ptr[r], self.ptr[r + 1]);
        (&self.idx[a..b], &self.val[a..b])
    }

    pub fn dense_row(&self, r: usize) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        let (idx, val) = self.row(r);
        for (&i, &v) in idx.iter().zip(val) {
            out[i] = v;
        }
        out
    }
}

/// Batched forward trace; each layer is a `rows x d_j` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTrace {
    rows: usize,
    pub pre_activations: Vec<Vec<f64>>,
    pub activations: Vec<Vec<f64>>,
}

impl BatchTrace {
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// `rows x d_L` output matrix.
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("depth >= 1")
    }

    pub fn output_row(&self, r: usize) -> &[f64] {
        let out = self.output();
        let k = out.len() / self.rows.max(1);
        &out[r * k..(r + 1) * k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Identifies a parameter block in diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    /// `W_j`, 1-based.
    Weight(usize),
    /// `b_j`, 1-based.
    Bias(usize),
    Named(&'static str),
}

impl fmt::Display for BlockLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BlockLabel::Weight(j) => write!(f, "W{j}"),
            BlockLabel::Bias(j) => write!(f, "b{j}"),
            BlockLabel::Named(n) => f.write_str(n),
        }
    }
}

pub struct ParamBlock<'a> {
    pub label: BlockLabel,
    pub values: &'a mut [f64],
    pub grads: &'a [f64],
}

/// Adam moments for an ordered list of parameter blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub step_count: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, block_sizes: &[usize]) -> Self {
        Self {
            config,
            first_moment: block_sizes.iter().map(|&n| alloc::vec![0.0; n]).collect(),
            second_moment: block_sizes.iter().map(|&n| alloc::vec![0.0; n]).collect(),
            step_count: 0,
        }
    }

    pub fn for_mlp(config: AdamConfig, net: &Mlp) -> Self {
        Self::new(config, &mlp_block_sizes(net))
    }

    /// One bias-corrected Adam update. Nothing is modified if any gradient is non-finite.
    pub fn step(&mut self, blocks: &mut [ParamBlock<'_>]) -> Result<()> {
        if blocks.len() != self.first_moment.len() {
            return Err(Error::DimensionMismatch { what: "parameter blocks", expected: self.first_moment.len(), found: blocks.len() });
        }
        for (b, m) in blocks.iter().zip(&self.first_moment) {
            if b.values.len() != m.len() || b.grads.len() != m.len() {
                return Err(Error::DimensionMismatch { what: "parameter block", expected: m.len(), found: b.grads.len() });
            }
            if b.grads.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteGradient { block: alloc::format!("{}", b.label) });
            }
        }
        self.step_count += 1;
        let AdamConfig { learning_rate, beta1, beta2, epsilon } = self.config;
        let c1 = 1.0 - math::powi(beta1, self.step_count);
        let c2 = 1.0 - math::powi(beta2, self.step_count);
        for ((b, m), v) in blocks.iter_mut().zip(&mut self.first_moment).zip(&mut self.second_moment) {
            for (((p, &g), mi), vi) in b.values.iter_mut().zip(b.grads).zip(m.iter_mut()).zip(v.iter_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * g;
                *vi = beta2 * *vi + (1.0 - beta2) * g * g;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *p -= learning_rate * m_hat / (math::sqrt(v_hat) + epsilon);
            }
        }
        Ok(())
    }
}

pub(crate) fn mlp_block_sizes(net: &Mlp) -> Vec<usize> {
    net.layers.iter().flat_map(|l| [l.weights.len(), l.bias.len()]).collect()
}

/// Parameter blocks of `net` in `W1, b1, W2, b2, ...` order, paired with `grads`.
pub fn mlp_blocks<'a>(net: &'a mut Mlp, grads: &'a MlpGradients) -> Vec<ParamBlock<'a>> {
    net.layers
        .iter_mut()
        .zip(grads.weights.iter().zip(&grads.biases))
        .enumerate()
        .flat_map(|(j, (layer, (gw, gb)))| {
            [
                ParamBlock { label: BlockLabel::Weight(j + 1), values: &mut layer.weights[..], grads: &gw[..] },
                ParamBlock { label: BlockLabel::Bias(j + 1), values: &mut layer.bias[..], grads: &gb[..] },
            ]
        })
        .collect()
}

/// Adam update of a bare network.
pub fn adam_step(state: &mut AdamState, net: &mut Mlp, grads: &MlpGradients) -> Result<()> {
    let mut blocks = mlp_blocks(net, grads);
    state.step(&mut blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn activation_values() {
        assert_eq!(activate(Activation::Sigmoid, 0.0), 0.5);
        assert_eq!(activate(Activation::Relu, -2.0), 0.0);
        assert_eq!(activate(Activation::Tanh, 0.0), 0.0);
        assert_eq!(activate(Activation::Identity, -3.5), -3.5);
        assert_eq!(Activation::Relu.derivative(0.0, 0.0), 0.0);
        for a in Activation::ALL {
            assert_eq!(a.name().parse::<Activation>().unwrap(), a);
        }
        assert!("softmax".parse::<Activation>().is_err());
        let s = activate(Activation::Sigmoid, 40.0);
        assert!(s > 0.0 && s <= 1.0);
        assert!(activate(Activation::Sigmoid, -800.0) >= 0.0);
    }

    #[test]
    fn init_shapes_and_determinism() {
        let net = Mlp::from_seed(&[4, 3], Activation::Sigmoid, 9).unwrap();
        assert_eq!(net.layers()[0].weights.len(), 12);
        assert_eq!(net.layers()[0].bias, vec![0.0; 3]);
        assert_eq!(net, Mlp::from_seed(&[4, 3], Activation::Sigmoid, 9).unwrap());
        assert_ne!(net, Mlp::from_seed(&[4, 3], Activation::Sigmoid, 10).unwrap());
        let wide = Mlp::from_seed(&[100, 50], Activation::Tanh, 1).unwrap();
        let bound = libm::sqrt(6.0 / 150.0);
        assert!(wide.layers()[0].weights.iter().all(|w| w.abs() <= bound));
        assert!(Mlp::from_seed(&[4], Activation::Tanh, 1).is_err());
        assert!(Mlp::from_seed(&[4, 0, 2], Activation::Tanh, 1).is_err());
    }

    #[test]
    fn zero_net_sigmoid_gives_half() {
        let net = Mlp::from_parts(&[3, 2, 2], Activation::Sigmoid, vec![vec![0.0; 6], vec![0.0; 4]], vec![vec![0.0; 2]; 2]).unwrap();
        let t = net.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert!(t.activations.iter().flatten().all(|&h| h == 0.5));
    }

    #[test]
    fn identity_chain_is_identity() {
        let eye = |n: usize| (0..n * n).map(|i| if i % (n + 1) == 0 { 1.0 } else { 0.0 }).collect::<Vec<_>>();
        let net = Mlp::from_parts(&[3, 3, 3], Activation::Identity, vec![eye(3), eye(3)], vec![vec![0.0; 3]; 2]).unwrap();
        assert_eq!(net.output(&[0.25, -1.0, 7.0]).unwrap(), vec![0.25, -1.0, 7.0]);
        assert!(net.forward(&[1.0]).is_err());
    }

    #[test]
    fn backward_zero_and_outer_product() {
        let net = Mlp::from_seed(&[3, 4, 2], Activation::Tanh, 3).unwrap();
        let t = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let g = net.backward(&t, &[0.0, 0.0]).unwrap();
        assert!(g.weights.iter().chain(&g.biases).flatten().chain(&g.input).all(|&v| v == 0.0));
        assert!(net.backward(&t, &[1.0]).is_err());

        let single = Mlp::from_parts(&[2, 2], Activation::Identity, vec![vec![1.0, 0.0, 0.0, 1.0]], vec![vec![0.0; 2]]).unwrap();
        let x = [3.0, -2.0];
        let go = [0.5, 4.0];
        let g = single.backward(&single.forward(&x).unwrap(), &go).unwrap();
        assert_eq!(g.weights[0], vec![1.5, -1.0, 12.0, -8.0]);
        assert_eq!(g.biases[0], vec![0.5, 4.0]);
    }

    #[test]
    fn dropout_rate_zero_and_survivor_values() {
        let mut rng = rng::seeded(5);
        let x = vec![1.0; 50];
        assert_eq!(apply_input_dropout(&x, 0.0, &mut rng).unwrap(), x);
        let y = apply_input_dropout(&x, 0.25, &mut rng).unwrap();
        assert!(y.iter().all(|&v| v == 0.0 || v == 1.0 / 0.75));
        assert!(apply_input_dropout(&x, 1.0, &mut rng).is_err());
        assert!(apply_input_dropout(&x, -0.1, &mut rng).is_err());
    }

    #[test]
    fn dropout_preserves_mean() {
        let mut rng = rng::seeded(11);
        let n = 100_000;
        let rate = 0.5;
        let y = apply_input_dropout(&vec![1.0; n], rate, &mut rng).unwrap();
        let mean = y.iter().sum::<f64>() / n as f64;
        // each coordinate is 0 or 2 with equal probability: variance 1
        let se = 1.0 / libm::sqrt(n as f64);
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut p = vec![1.0];
        let g = vec![1.0];
        let mut st = AdamState::new(AdamConfig::with_learning_rate(0.001), &[1]);
        st.step(&mut [ParamBlock { label: BlockLabel::Named("p"), values: &mut p, grads: &g }]).unwrap();
        let expected = 1.0 - 0.001 * 1.0 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15);
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn adam_two_steps_match_closed_form() {
        let mut p = vec![0.5, -0.5];
        let g = vec![0.3, -2.0];
        let cfg = AdamConfig::with_learning_rate(0.01);
        let mut st = AdamState::new(cfg, &[2]);
        for _ in 0..2 {
            st.step(&mut [ParamBlock { label: BlockLabel::Named("p"), values: &mut p, grads: &g }]).unwrap();
        }
        assert_eq!(st.step_count, 2);
        for (d, &gd) in g.iter().enumerate() {
            // m_2 = (1-β1)(β1 + 1) g, v_2 = (1-β2)(β2 + 1) g²
            let m2 = (1.0 - 0.9) * (0.9 + 1.0) * gd;
            let v2 = (1.0 - 0.999) * (0.999 + 1.0) * gd * gd;
            assert!((st.first_moment[0][d] - m2).abs() < 1e-15);
            assert!((st.second_moment[0][d] - v2).abs() < 1e-15);
        }
    }

    #[test]
    fn adam_zero_gradient_and_non_finite() {
        let mut net = Mlp::from_seed(&[3, 2], Activation::Relu, 1).unwrap();
        let before = net.clone();
        let mut st = AdamState::for_mlp(AdamConfig::default(), &net);
        let zero = MlpGradients::zeros_like(&net);
        adam_step(&mut st, &mut net, &zero).unwrap();
        assert_eq!(net, before);
        let mut bad = zero.clone();
        bad.biases[0][1] = f64::NAN;
        let err = adam_step(&mut st, &mut net, &bad).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { block: "b1".into() });
        assert_eq!(st.step_count, 1);
    }

    #[test]
    fn batch_path_matches_single_path() {
        let mut rng = rng::seeded(2);
        for act in Activation::ALL {
            let net = Mlp::init(&[7, 5, 4, 3], act, &mut rng).unwrap();
            let mut batch = SparseBatch::new(7);
            batch.push_row([(0, 1.0), (3, 2.0), (6, -0.5)]);
            batch.push_row([]);
            batch.push_row([(2, 1.0), (5, 1.0)]);
            let bt = net.forward_batch(&batch).unwrap();
            let go: Vec<f64> = (0..9).map(|i| (i as f64) * 0.1 - 0.4).collect();
            let mut acc = MlpGradients::zeros_like(&net);
            net.backward_batch(&batch, &bt, &go, &mut acc).unwrap();
            let mut want = MlpGradients::zeros_like(&net);
            for r in 0..3 {
                let t = net.forward(&batch.dense_row(r)).unwrap();
                for (a, b) in t.output().iter().zip(bt.output_row(r)) {
                    assert!((a - b).abs() < 1e-12);
                }
                let g = net.backward(&t, &go[r * 3..(r + 1) * 3]).unwrap();
                for (w, gw) in want.weights.iter_mut().zip(&g.weights).chain(want.biases.iter_mut().zip(&g.biases)) {
                    for (a, b) in w.iter_mut().zip(gw) {
                        *a += b;
                    }
                }
            }
            for (a, b) in acc.weights.iter().flatten().zip(want.weights.iter().flatten()) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in acc.biases.iter().flatten().zip(want.biases.iter().flatten()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
