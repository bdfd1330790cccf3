//! Feedforward regressor with three ReLU hidden layers and a linear output unit.
//!
//! Every unit computes `f(sum_i w_i * x_i + b)`. Hidden layers use ReLU,
//! the single output unit is the identity. Training minimizes the mean
//! squared error with mini-batch gradient descent and classical momentum.
//!
//! All accumulations run in `f64` in a fixed index order (samples in batch
//! order, inputs in column order) so that training is bitwise reproducible.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, NormalizationParams};

/// Number of hidden layers; fixed, only their widths vary.
pub const HIDDEN_LAYERS: usize = 3;

/// Rectified linear unit: `v` when `v >= 0`, else 0.
pub fn relu(v: f64) -> f64 {
    if v >= 0.0 {
        v
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => relu(v),
            Activation::Identity => v,
        }
    }

    /// Derivative with respect to the pre-activation. The ReLU kink at 0 takes slope 0.
    fn slope(self, z: f64) -> f64 {
        match self {
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
}

/// Weights (`out_dim x in_dim`, row-major) and biases of one dense layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl LayerParams {
    pub fn new(in_dim: usize, out_dim: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::shape("layer dimensions must be at least 1"));
        }
        if weights.len() != in_dim * out_dim || biases.len() != out_dim {
            return Err(Error::shape(format!(
                "layer {out_dim}x{in_dim} needs {} weights and {out_dim} biases, got {} and {}",
                in_dim * out_dim,
                weights.len(),
                biases.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::Data("layer parameters must be finite".into()));
        }
        Ok(LayerParams {
            in_dim,
            out_dim,
            weights,
            biases,
        })
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LayerParams {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// Row `o` of the weight matrix: the incoming weights of unit `o`.
    pub fn weight_row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.in_dim..(o + 1) * self.in_dim]
    }

    fn forward_into(&self, inputs: &[f64], activation: Activation, pre: &mut [f64], out: &mut [f64]) {
        for o in 0..self.out_dim {
            let mut z = self.biases[o];
            for (w, x) in self.weight_row(o).iter().zip(inputs) {
                z += w * x;
            }
            pre[o] = z;
            out[o] = activation.apply(z);
        }
    }
}

/// Applies one layer to `inputs`.
pub fn layer_forward(inputs: &[f64], layer: &LayerParams, activation: Activation) -> Result<Vec<f64>> {
    if inputs.len() != layer.in_dim {
        return Err(Error::shape(format!(
            "layer expects {} inputs, got {}",
            layer.in_dim,
            inputs.len()
        )));
    }
    let mut pre = vec![0.0; layer.out_dim];
    let mut out = vec![0.0; layer.out_dim];
    layer.forward_into(inputs, activation, &mut pre, &mut out);
    Ok(out)
}

/// Parameters of the network `input -> h1 -> h2 -> h3 -> 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    input_dim: usize,
    hidden_sizes: [usize; HIDDEN_LAYERS],
    layers: Vec<LayerParams>,
}

impl NetworkParams {
    pub fn new(input_dim: usize, hidden_sizes: [usize; HIDDEN_LAYERS], layers: Vec<LayerParams>) -> Result<Self> {
        let dims = layer_dims(input_dim, hidden_sizes)?;
        if layers.len() != HIDDEN_LAYERS + 1 {
            return Err(Error::shape(format!(
                "expected {} layers, got {}",
                HIDDEN_LAYERS + 1,
                layers.len()
            )));
        }
        for (l, layer) in layers.iter().enumerate() {
            if (layer.in_dim, layer.out_dim) != (dims[l], dims[l + 1]) {
                return Err(Error::shape(format!(
                    "layer {l} is {}x{}, expected {}x{}",
                    layer.out_dim,
                    layer.in_dim,
                    dims[l + 1],
                    dims[l]
                )));
            }
        }
        Ok(NetworkParams {
            input_dim,
            hidden_sizes,
            layers,
        })
    }

    /// All weights and biases zero.
    pub fn zeros(input_dim: usize, hidden_sizes: [usize; HIDDEN_LAYERS]) -> Result<Self> {
        let dims = layer_dims(input_dim, hidden_sizes)?;
        let layers = dims.windows(2).map(|d| LayerParams::zeros(d[0], d[1])).collect();
        NetworkParams::new(input_dim, hidden_sizes, layers)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_sizes(&self) -> [usize; HIDDEN_LAYERS] {
        self.hidden_sizes
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [LayerParams] {
        &mut self.layers
    }

    pub fn activation(layer: usize) -> Activation {
        if layer < HIDDEN_LAYERS {
            Activation::Relu
        } else {
            Activation::Identity
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }
}

fn layer_dims(input_dim: usize, hidden: [usize; HIDDEN_LAYERS]) -> Result<[usize; HIDDEN_LAYERS + 2]> {
    if input_dim == 0 {
        return Err(Error::argument("input dimension must be at least 1"));
    }
    if hidden.contains(&0) {
        return Err(Error::argument(format!(
            "hidden widths must be at least 1, got {hidden:?}"
        )));
    }
    Ok([input_dim, hidden[0], hidden[1], hidden[2], 1])
}

/// Per-sample activations kept for backpropagation.
struct Workspace {
    /// `acts[0]` is the input; `acts[l + 1]` the output of layer `l`.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next_delta: Vec<f64>,
}

impl Workspace {
    fn new(net: &NetworkParams) -> Self {
        let mut acts = vec![vec![0.0; net.input_dim]];
        let mut pre = Vec::new();
        for layer in &net.layers {
            acts.push(vec![0.0; layer.out_dim]);
            pre.push(vec![0.0; layer.out_dim]);
        }
        let widest = acts.iter().map(Vec::len).max().unwrap_or(1);
        Workspace {
            acts,
            pre,
            delta: Vec::with_capacity(widest),
            next_delta: Vec::with_capacity(widest),
        }
    }

    fn forward(&mut self, net: &NetworkParams, x: &[f64]) -> f64 {
        self.acts[0].copy_from_slice(x);
        for (l, layer) in net.layers.iter().enumerate() {
            let (done, rest) = self.acts.split_at_mut(l + 1);
            layer.forward_into(&done[l], NetworkParams::activation(l), &mut self.pre[l], &mut rest[0]);
        }
        self.acts[HIDDEN_LAYERS + 1][0]
    }

    /// Forward then backward for one sample; adds `scale * d(err^2)/dparam`
    /// into `grads`. Returns the prediction.
    fn accumulate(&mut self, net: &NetworkParams, x: &[f64], y: f64, scale: f64, grads: &mut Gradients) -> f64 {
        let prediction = self.forward(net, x);
        self.delta.clear();
        self.delta.push(scale * 2.0 * (prediction - y));
        for l in (0..net.layers.len()).rev() {
            let layer = &net.layers[l];
            let g = &mut grads.layers[l];
            let input = &self.acts[l];
            for (o, &d) in self.delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (gw, a) in row.iter_mut().zip(input) {
                    *gw += d * a;
                }
            }
            if l > 0 {
                let below = NetworkParams::activation(l - 1);
                self.next_delta.clear();
                for i in 0..layer.in_dim {
                    let mut back = 0.0;
                    for (o, &d) in self.delta.iter().enumerate() {
                        back += layer.weights[o * layer.in_dim + i] * d;
                    }
                    self.next_delta.push(back * below.slope(self.pre[l - 1][i]));
                }
                std::mem::swap(&mut self.delta, &mut self.next_delta);
            }
        }
        prediction
    }
}

fn check_input(net: &NetworkParams, len: usize) -> Result<()> {
    if len != net.input_dim {
        return Err(Error::shape(format!(
            "network expects {} inputs, got {len}",
            net.input_dim
        )));
    }
    Ok(())
}

/// Network output for one normalized feature vector.
pub fn forward(net: &NetworkParams, x: &[f64]) -> Result<f64> {
    check_input(net, x.len())?;
    Ok(Workspace::new(net).forward(net, x))
}

/// Outputs for every row of a normalized matrix, in normalized target units.
pub fn forward_matrix(net: &NetworkParams, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    check_input(net, matrix.n_cols())?;
    let mut ws = Workspace::new(net);
    Ok(matrix.rows().map(|row| ws.forward(net, row)).collect())
}

/// Mean squared error.
pub fn mse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::shape(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::shape("mse of empty vectors"));
    }
    let sum: f64 = predictions.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(sum / predictions.len() as f64)
}

/// Gradient of the batch MSE with respect to every parameter, layer by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
}

impl Gradients {
    fn zeros_like(net: &NetworkParams) -> Self {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerParams::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    fn reset(&mut self) {
        for layer in &mut self.layers {
            layer.weights.fill(0.0);
            layer.biases.fill(0.0);
        }
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Exact gradients of `mse(forward(inputs), targets)`. `inputs` is row-major
/// with `targets.len()` rows of `input_dim` values.
pub fn gradients(net: &NetworkParams, inputs: &[f64], targets: &[f64]) -> Result<Gradients> {
    if targets.is_empty() {
        return Err(Error::shape("gradient batch is empty"));
    }
    if inputs.len() != targets.len() * net.input_dim {
        return Err(Error::shape(format!(
            "{} input values do not form {} rows of {}",
            inputs.len(),
            targets.len(),
            net.input_dim
        )));
    }
    let mut grads = Gradients::zeros_like(net);
    let mut ws = Workspace::new(net);
    let scale = 1.0 / targets.len() as f64;
    for (x, &y) in inputs.chunks_exact(net.input_dim).zip(targets) {
        ws.accumulate(net, x, y, scale, &mut grads);
    }
    Ok(grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitScheme {
    /// Gaussian with standard deviation `sqrt(2 / fan_in)`.
    He,
    /// Uniform on `[-0.1, 0.1]`.
    UniformSmall,
}

impl std::str::FromStr for InitScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "he" => Ok(InitScheme::He),
            "uniform-small" => Ok(InitScheme::UniformSmall),
            other => Err(Error::argument(format!(
                "unknown init scheme `{other}` (expected he or uniform-small)"
            ))),
        }
    }
}

const UNIFORM_SMALL_BOUND: f64 = 0.1;

/// Random weights, zero biases. Deterministic per seed.
pub fn init_params(
    input_dim: usize,
    hidden_sizes: [usize; HIDDEN_LAYERS],
    scheme: InitScheme,
    seed: u64,
) -> Result<NetworkParams> {
    let mut net = NetworkParams::zeros(input_dim, hidden_sizes)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in &mut net.layers {
        match scheme {
            InitScheme::He => {
                let normal =
                    Normal::new(0.0, (2.0 / layer.in_dim as f64).sqrt()).expect("positive finite standard deviation");
                for w in &mut layer.weights {
                    *w = normal.sample(&mut rng);
                }
            }
            InitScheme::UniformSmall => {
                for w in &mut layer.weights {
                    *w = rng.random_range(-UNIFORM_SMALL_BOUND..=UNIFORM_SMALL_BOUND);
                }
            }
        }
    }
    Ok(net)
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub init_scheme: InitScheme,
    pub momentum: f64,
    /// Stop after this many epochs without validation improvement; `None` disables
    /// early stopping and trains on every row.
    pub early_stop_patience: Option<usize>,
    /// Chronological tail of the training rows held out for early stopping.
    pub validation_fraction: f64,
    pub shuffle_each_epoch: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 2000,
            batch_size: 32,
            seed: 0,
            init_scheme: InitScheme::He,
            momentum: 0.9,
            early_stop_patience: Some(50),
            validation_fraction: 0.1,
            shuffle_each_epoch: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::argument(format!(
                "learning rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::argument("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::argument("batch size must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::argument(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::argument(format!(
                "validation fraction must lie in [0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    /// Best parameters on the validation tail when early stopping is active,
    /// otherwise the parameters after the last epoch.
    pub params: NetworkParams,
    /// Training MSE (normalized units) after each epoch.
    pub loss_history: Vec<f64>,
    /// Validation MSE after each epoch; empty without early stopping.
    pub validation_history: Vec<f64>,
    pub epochs_run: usize,
    /// 1-based epoch whose parameters were returned.
    pub best_epoch: usize,
}

/// Number of trailing rows reserved for validation out of `n`.
pub fn validation_len(n: usize, fraction: f64) -> usize {
    let tail = ((n as f64) * fraction + 1e-9).floor() as usize;
    if tail == 0 || tail >= n {
        0
    } else {
        tail
    }
}

fn matrix_mse(net: &NetworkParams, ws: &mut Workspace, matrix: &FeatureMatrix, rows: std::ops::Range<usize>) -> f64 {
    let mut sum = 0.0;
    let n = rows.len();
    for i in rows {
        let e = ws.forward(net, matrix.row(i)) - matrix.target()[i];
        sum += e * e;
    }
    sum / n as f64
}

/// Fits `init` to a normalized matrix.
///
/// Mini-batch gradient descent with momentum `v <- mu v - lr g; w <- w + v`.
/// Batches are drawn from a permutation driven by `config.seed` when shuffling
/// is on, otherwise in row order.
pub fn train(init: &NetworkParams, matrix: &FeatureMatrix, config: &TrainConfig) -> Result<TrainResult> {
    config.validate()?;
    check_input(init, matrix.n_cols())?;
    if matrix.is_empty() {
        return Err(Error::Data("training matrix is empty".into()));
    }
    let n = matrix.n_rows();
    let n_val = if config.early_stop_patience.is_some() {
        validation_len(n, config.validation_fraction)
    } else {
        0
    };
    let n_fit = n - n_val;

    let mut net = init.clone();
    let mut velocity = Gradients::zeros_like(&net);
    let mut grads = Gradients::zeros_like(&net);
    let mut ws = Workspace::new(&net);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..n_fit).collect();

    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut validation_history = Vec::new();
    let mut best: Option<(f64, usize, NetworkParams)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.epochs {
        if config.shuffle_each_epoch {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            grads.reset();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                ws.accumulate(&net, matrix.row(i), matrix.target()[i], scale, &mut grads);
            }
            for (layer, (v, g)) in net.layers.iter_mut().zip(velocity.layers.iter_mut().zip(&grads.layers)) {
                for ((w, v), g) in layer.weights.iter_mut().zip(&mut v.weights).zip(&g.weights) {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *w += *v;
                }
                for ((b, v), g) in layer.biases.iter_mut().zip(&mut v.biases).zip(&g.biases) {
                    *v = config.momentum * *v - config.learning_rate * g;
                    *b += *v;
                }
            }
        }

        let loss = matrix_mse(&net, &mut ws, matrix, 0..n_fit);
        if !loss.is_finite() || !net.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_history.push(loss);

        if let (Some(patience), true) = (config.early_stop_patience, n_val > 0) {
            let val = matrix_mse(&net, &mut ws, matrix, n_fit..n);
            if !val.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            validation_history.push(val);
            match &best {
                Some((best_val, _, _)) if val >= *best_val => since_best += 1,
                _ => {
                    best = Some((val, epoch, net.clone()));
                    since_best = 0;
                }
            }
            if since_best >= patience {
                break;
            }
        }
    }

    let epochs_run = loss_history.len();
    let (params, best_epoch) = match best {
        Some((_, epoch, params)) => (params, epoch),
        None => (net, epochs_run),
    };
    Ok(TrainResult {
        params,
        loss_history,
        validation_history,
        epochs_run,
        best_epoch,
    })
}

/// Forward pass over a normalized matrix followed by denormalization to kWh.
pub fn predict(net: &NetworkParams, matrix: &FeatureMatrix, norm: &NormalizationParams) -> Result<Vec<f64>> {
    if norm.features.len() != matrix.n_cols() {
        return Err(Error::shape(format!(
            "normalization covers {} columns, matrix has {}",
            norm.features.len(),
            matrix.n_cols()
        )));
    }
    let outputs = forward_matrix(net, matrix)?;
    Ok(norm.invert_target(&outputs))
}
