//! Single-layer LSTM regressor written from scratch: forward recursion,
//! exact backpropagation through time, Adam/SGD training and a binary
//! checkpoint format.
//!
//! Per step, with `xh = [h_{t-1}, x_t]`:
//!
//! ```text
//! i = sigmoid(W_i xh + b_i)    f = sigmoid(W_f xh + b_f)
//! g = tanh(W_g xh + b_g)       o = sigmoid(W_o xh + b_o)
//! c_t = f * c_{t-1} + i * g    h_t = o * tanh(c_t)
//! ```
//!
//! The prediction is `w_y . h_L + b_y`, from a zero initial state.
//!
//! All parameters live in one flat vector, in this order: `W_i, W_f, W_g, W_o`
//! (each `H x (H + d)`, row-major, hidden columns first), `b_i, b_f, b_g, b_o`
//! (each `H`), `w_y` (`H`), `b_y`.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::Sample;

#[derive(Debug, Error, PartialEq)]
pub enum NeuralError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("window contains a non-finite value")]
    NonFiniteInput,
    #[error("trace does not belong to this model/window")]
    TraceMismatch,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at epoch {0}")]
    DivergedLoss(usize),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmModel {
    input_dim: usize,
    hidden_dim: usize,
    seed: u64,
    params: Vec<f64>,
}

fn param_count(d: usize, h: usize) -> usize {
    4 * h * (h + d) + 4 * h + h + 1
}

impl LstmModel {
    /// Uniform weights in `[-1/sqrt(H+d), 1/sqrt(H+d)]`, forget bias 1, other
    /// biases 0.
    pub fn init(input_dim: usize, hidden_dim: usize, seed: u64) -> Self {
        assert!(input_dim >= 1 && hidden_dim >= 1, "dimensions must be positive");
        let mut model = LstmModel::zeroed(input_dim, hidden_dim);
        model.seed = seed;
        let bound = 1.0 / ((hidden_dim + input_dim) as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights = 4 * hidden_dim * model.cols();
        for w in &mut model.params[..weights] {
            *w = rng.random_range(-bound..=bound);
        }
        for w in model.head_weights_mut() {
            *w = rng.random_range(-bound..=bound);
        }
        model.gate_bias_mut(Gate::Forget).fill(1.0);
        model
    }

    /// All parameters zero.
    pub fn zeroed(input_dim: usize, hidden_dim: usize) -> Self {
        LstmModel {
            input_dim,
            hidden_dim,
            seed: 0,
            params: vec![0.0; param_count(input_dim, hidden_dim)],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Width of `[h, x]`.
    pub fn cols(&self) -> usize {
        self.hidden_dim + self.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weights_len(&self) -> usize {
        4 * self.hidden_dim * self.cols()
    }

    fn gate_weight_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let block = self.hidden_dim * self.cols();
        gate as usize * block..(gate as usize + 1) * block
    }

    fn gate_bias_range(&self, gate: Gate) -> std::ops::Range<usize> {
        let start = self.weights_len() + gate as usize * self.hidden_dim;
        start..start + self.hidden_dim
    }

    fn head_range(&self) -> std::ops::Range<usize> {
        let start = self.weights_len() + 4 * self.hidden_dim;
        start..start + self.hidden_dim
    }

    /// `H x (H + d)` row-major block of one gate.
    pub fn gate_weights(&self, gate: Gate) -> &[f64] {
        &self.params[self.gate_weight_range(gate)]
    }

    pub fn gate_weights_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.gate_weight_range(gate);
        &mut self.params[r]
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        &self.params[self.gate_bias_range(gate)]
    }

    pub fn gate_bias_mut(&mut self, gate: Gate) -> &mut [f64] {
        let r = self.gate_bias_range(gate);
        &mut self.params[r]
    }

    pub fn head_weights(&self) -> &[f64] {
        &self.params[self.head_range()]
    }

    pub fn head_weights_mut(&mut self) -> &mut [f64] {
        let r = self.head_range();
        &mut self.params[r]
    }

    pub fn head_bias(&self) -> f64 {
        self.params[self.params.len() - 1]
    }

    pub fn set_head_bias(&mut self, b: f64) {
        let n = self.params.len();
        self.params[n - 1] = b;
    }

    fn steps_of(&self, window: &[f64]) -> Result<usize, NeuralError> {
        if window.is_empty() || !window.len().is_multiple_of(self.input_dim) {
            return Err(NeuralError::ShapeMismatch(format!(
                "window of {} values is not a non-empty multiple of d={}",
                window.len(),
                self.input_dim
            )));
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(NeuralError::NonFiniteInput);
        }
        Ok(window.len() / self.input_dim)
    }

    /// Runs the recursion over a row-major `L x d` window.
    pub fn forward(&self, window: &[f64]) -> Result<(f64, Trace), NeuralError> {
        let mut trace = Trace::default();
        let y = self.forward_into(window, &mut trace)?;
        Ok((y, trace))
    }

    fn forward_into(&self, window: &[f64], trace: &mut Trace) -> Result<f64, NeuralError> {
        let steps = self.steps_of(window)?;
        let (h, d, cols) = (self.hidden_dim, self.input_dim, self.cols());
        trace.reset(steps, h, d);
        let weights = &self.params[..self.weights_len()];
        let biases = &self.params[self.weights_len()..self.weights_len() + 4 * h];

        for t in 0..steps {
            let (prev_h, rest) = trace.hidden.split_at_mut((t + 1) * h);
            let prev_h = &prev_h[t * h..];
            let xh = &mut trace.xh[t * cols..(t + 1) * cols];
            xh[..h].copy_from_slice(prev_h);
            xh[h..].copy_from_slice(&window[t * d..(t + 1) * d]);

            let gates = &mut trace.gates[t * 4 * h..(t + 1) * 4 * h];
            for (r, z) in gates.iter_mut().enumerate() {
                *z = biases[r] + dot(&weights[r * cols..(r + 1) * cols], xh);
            }
            let (ifg, o) = gates.split_at_mut(3 * h);
            let (i_f, g) = ifg.split_at_mut(2 * h);
            i_f.iter_mut().for_each(|z| *z = sigmoid(*z));
            g.iter_mut().for_each(|z| *z = z.tanh());
            o.iter_mut().for_each(|z| *z = sigmoid(*z));

            let (prev_c, next_c) = trace.cells.split_at_mut((t + 1) * h);
            let prev_c = &prev_c[t * h..];
            let next_c = &mut next_c[..h];
            let tanh_c = &mut trace.tanh_cells[t * h..(t + 1) * h];
            let next_h = &mut rest[..h];
            for j in 0..h {
                let (ig, fg, gg, og) = (i_f[j], i_f[h + j], g[j], o[j]);
                next_c[j] = fg * prev_c[j] + ig * gg;
                tanh_c[j] = next_c[j].tanh();
                next_h[j] = og * tanh_c[j];
            }
        }
        let last = &trace.hidden[steps * h..];
        let y = self.head_bias() + dot(self.head_weights(), last);
        trace.prediction = y;
        Ok(y)
    }

    /// Exact gradient of `(prediction - target)^2` for the traced window.
    pub fn backward(&self, trace: &Trace, window: &[f64], target: f64) -> Result<Gradients, NeuralError> {
        self.check_trace(trace, window)?;
        let mut grad = Gradients::zeros_like(self);
        let mut scratch = Scratch::default();
        self.backward_into(trace, target, &mut grad.0, &mut scratch);
        Ok(grad)
    }

    fn check_trace(&self, trace: &Trace, window: &[f64]) -> Result<(), NeuralError> {
        let (h, d, cols) = (self.hidden_dim, self.input_dim, self.cols());
        if trace.hidden_dim != h || trace.input_dim != d || trace.steps * d != window.len() {
            return Err(NeuralError::TraceMismatch);
        }
        let same_inputs = (0..trace.steps)
            .all(|t| trace.xh[t * cols + h..(t + 1) * cols] == window[t * d..(t + 1) * d]);
        if !same_inputs {
            return Err(NeuralError::TraceMismatch);
        }
        Ok(())
    }

    /// Adds the gradient into `grad` (flat, same layout as the parameters).
    fn backward_into(&self, trace: &Trace, target: f64, grad: &mut [f64], s: &mut Scratch) {
        let (h, cols, steps) = (self.hidden_dim, self.cols(), trace.steps);
        let wlen = self.weights_len();
        let weights = &self.params[..wlen];
        let dy = 2.0 * (trace.prediction - target);

        let head = self.head_range();
        let last_h = &trace.hidden[steps * h..];
        for (g, &hv) in grad[head.clone()].iter_mut().zip(last_h) {
            *g += dy * hv;
        }
        grad[self.params.len() - 1] += dy;

        s.dh.clear();
        s.dh.extend(self.head_weights().iter().map(|w| dy * w));
        s.dc.clear();
        s.dc.resize(h, 0.0);
        s.dz.resize(4 * h, 0.0);
        s.dxh.resize(cols, 0.0);

        let (grad_w, grad_rest) = grad.split_at_mut(wlen);
        let grad_b = &mut grad_rest[..4 * h];
        for t in (0..steps).rev() {
            let gates = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
            let prev_c = &trace.cells[t * h..(t + 1) * h];
            let tanh_c = &trace.tanh_cells[t * h..(t + 1) * h];
            for j in 0..h {
                let (ig, fg, gg, og) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let dh = s.dh[j];
                let tc = tanh_c[j];
                let dc = s.dc[j] + dh * og * (1.0 - tc * tc);
                s.dz[j] = dc * gg * ig * (1.0 - ig);
                s.dz[h + j] = dc * prev_c[j] * fg * (1.0 - fg);
                s.dz[2 * h + j] = dc * ig * (1.0 - gg * gg);
                s.dz[3 * h + j] = dh * tc * og * (1.0 - og);
                s.dc[j] = dc * fg;
            }

            let xh = &trace.xh[t * cols..(t + 1) * cols];
            s.dxh.fill(0.0);
            for (r, &dz) in s.dz.iter().enumerate() {
                grad_b[r] += dz;
                if dz == 0.0 {
                    continue;
                }
                axpy(dz, xh, &mut grad_w[r * cols..(r + 1) * cols]);
                axpy(dz, &weights[r * cols..(r + 1) * cols], &mut s.dxh);
            }
            s.dh.copy_from_slice(&s.dxh[..h]);
        }
    }

    /// Squared error of one window.
    pub fn loss(&self, window: &[f64], target: f64) -> Result<f64, NeuralError> {
        let (y, _) = self.forward(window)?;
        Ok((y - target) * (y - target))
    }
}

#[derive(Default)]
struct Scratch {
    dh: Vec<f64>,
    dc: Vec<f64>,
    dz: Vec<f64>,
    dxh: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Hidden and cell vectors after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

/// Everything the forward pass computed, kept for BPTT.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    steps: usize,
    hidden_dim: usize,
    input_dim: usize,
    /// `L x (H + d)` concatenated inputs.
    xh: Vec<f64>,
    /// `L x 4H` activated gates in `i, f, g, o` order.
    gates: Vec<f64>,
    /// `(L + 1) x H`, including the zero initial cell.
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    /// `(L + 1) x H`, including the zero initial hidden state.
    hidden: Vec<f64>,
    prediction: f64,
}

impl Trace {
    fn reset(&mut self, steps: usize, h: usize, d: usize) {
        self.steps = steps;
        self.hidden_dim = h;
        self.input_dim = d;
        let fit = |v: &mut Vec<f64>, n: usize| {
            v.clear();
            v.resize(n, 0.0);
        };
        fit(&mut self.xh, steps * (h + d));
        fit(&mut self.gates, steps * 4 * h);
        fit(&mut self.cells, (steps + 1) * h);
        fit(&mut self.tanh_cells, steps * h);
        fit(&mut self.hidden, (steps + 1) * h);
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn prediction(&self) -> f64 {
        self.prediction
    }

    /// Activated gate vector at step `t` (0-based).
    pub fn gate(&self, t: usize, gate: Gate) -> &[f64] {
        let h = self.hidden_dim;
        let start = t * 4 * h + gate as usize * h;
        &self.gates[start..start + h]
    }

    /// State after step `t` (0-based).
    pub fn state(&self, t: usize) -> LstmState {
        let h = self.hidden_dim;
        LstmState {
            h: self.hidden[(t + 1) * h..(t + 2) * h].to_vec(),
            c: self.cells[(t + 1) * h..(t + 2) * h].to_vec(),
        }
    }
}

/// Gradient with the same flat layout as [`LstmModel::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<f64>);

impl Gradients {
    pub fn zeros_like(model: &LstmModel) -> Self {
        Gradients(vec![0.0; model.params.len()])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn head_bias(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, eps: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "size")]
pub enum BatchMode {
    /// One update per epoch over the whole training set.
    Full,
    /// Chunks of the given size, order reshuffled each epoch from the seed.
    Mini(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub seed: u64,
    pub optimizer: Optimizer,
    /// Global-norm clip threshold; `0` disables clipping.
    pub clip: f64,
    pub batch: BatchMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1e-3,
            hidden_dim: 32,
            seed: 1,
            optimizer: Optimizer::default(),
            clip: 5.0,
            batch: BatchMode::Full,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: &str| Err(NeuralError::InvalidConfig(m.into()));
        if self.epochs < 1 {
            return bad("epochs must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.hidden_dim < 1 {
            return bad("hidden dim must be >= 1");
        }
        if !(self.clip >= 0.0) {
            return bad("clip threshold must be >= 0");
        }
        if self.batch == BatchMode::Mini(0) {
            return bad("mini-batch size must be >= 1");
        }
        Ok(())
    }

    /// First 8 bytes of the SHA-256 of the config's JSON form.
    pub fn hash(&self) -> u64 {
        config_hash(&serde_json::to_string(self).expect("config serializes"))
    }
}

/// Hash of an arbitrary canonical text, truncated to 64 bits.
pub fn config_hash(canonical: &str) -> u64 {
    let digest = Sha256::digest(canonical.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LstmModel,
    /// Mean training loss of each epoch.
    pub losses: Vec<f64>,
}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

/// Trains in place on `samples`. Per-sample gradients are summed in sample
/// order, so the result is bit-reproducible.
pub fn train(mut model: LstmModel, samples: &[Sample], cfg: &TrainConfig) -> Result<TrainOutcome, NeuralError> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(NeuralError::EmptyTrainingSet);
    }
    if let Some(s) = samples.iter().find(|s| s.dim != model.input_dim) {
        return Err(NeuralError::ShapeMismatch(format!(
            "sample dim {} vs model input dim {}",
            s.dim, model.input_dim
        )));
    }

    let n = model.params.len();
    let mut adam = AdamState {
        m: vec![0.0; n],
        v: vec![0.0; n],
        t: 0,
    };
    let mut grad = vec![0.0; n];
    let mut trace = Trace::default();
    let mut scratch = Scratch::default();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_5eed);
    let batch = match cfg.batch {
        BatchMode::Full => samples.len(),
        BatchMode::Mini(size) => size,
    };

    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        if matches!(cfg.batch, BatchMode::Mini(_)) {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            grad.fill(0.0);
            for &k in chunk {
                let s = &samples[k];
                let y = model.forward_into(&s.window, &mut trace)?;
                epoch_loss += (y - s.target) * (y - s.target);
                model.backward_into(&trace, s.target, &mut grad, &mut scratch);
            }
            let scale = 1.0 / chunk.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            if !grad.iter().all(|g| g.is_finite()) {
                return Err(NeuralError::DivergedLoss(epoch));
            }
            clip_global_norm(&mut grad, cfg.clip);
            apply_update(&mut model.params, &grad, cfg, &mut adam);
        }
        let mean = epoch_loss / samples.len() as f64;
        if !mean.is_finite() {
            return Err(NeuralError::DivergedLoss(epoch));
        }
        losses.push(mean);
    }
    Ok(TrainOutcome { model, losses })
}

fn clip_global_norm(grad: &mut [f64], threshold: f64) {
    if threshold <= 0.0 {
        return;
    }
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > threshold {
        let s = threshold / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
}

fn apply_update(params: &mut [f64], grad: &[f64], cfg: &TrainConfig, st: &mut AdamState) {
    let lr = cfg.learning_rate;
    match cfg.optimizer {
        Optimizer::Sgd => axpy(-lr, grad, params),
        Optimizer::Adam { beta1, beta2, eps } => {
            st.t += 1;
            let c1 = 1.0 - beta1.powi(st.t);
            let c2 = 1.0 - beta2.powi(st.t);
            for i in 0..params.len() {
                let g = grad[i];
                st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
                st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
                let m_hat = st.m[i] / c1;
                let v_hat = st.v[i] / c2;
                params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Forward pass over each sample, in order.
pub fn predict(model: &LstmModel, samples: &[Sample]) -> Result<Vec<f64>, NeuralError> {
    let mut trace = Trace::default();
    samples
        .iter()
        .map(|s| {
            if s.dim != model.input_dim {
                return Err(NeuralError::ShapeMismatch(format!(
                    "sample dim {} vs model input dim {}",
                    s.dim, model.input_dim
                )));
            }
            model.forward_into(&s.window, &mut trace)
        })
        .collect()
}

const MAGIC: &[u8; 8] = b"SCLSTM\0\0";
const VERSION: u32 = 1;

/// A trained model plus the hash of the config that produced it.
///
/// Binary layout (little-endian): magic `SCLSTM\0\0`, `u32` version, `u32` d,
/// `u32` H, `u64` seed, `u64` config hash, `u64` parameter count, then the
/// parameters as `f64` in declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: LstmModel,
    pub config_hash: u64,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = &self.model;
        let mut out = Vec::with_capacity(44 + 8 * m.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(m.input_dim as u32).to_le_bytes());
        out.extend_from_slice(&(m.hidden_dim as u32).to_le_bytes());
        out.extend_from_slice(&m.seed.to_le_bytes());
        out.extend_from_slice(&self.config_hash.to_le_bytes());
        out.extend_from_slice(&(m.params.len() as u64).to_le_bytes());
        for p in &m.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NeuralError> {
        let bad = |m: &str| NeuralError::Checkpoint(m.to_string());
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8], NeuralError> {
            if cur.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(8)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().expect("4 bytes"));
        let u64_at = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes"));
        let version = u32_at(take(4)?);
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let d = u32_at(take(4)?) as usize;
        let h = u32_at(take(4)?) as usize;
        let seed = u64_at(take(8)?);
        let config_hash = u64_at(take(8)?);
        let count = u64_at(take(8)?) as usize;
        if d == 0 || h == 0 || count != param_count(d, h) {
            return Err(bad("parameter count does not match dimensions"));
        }
        let raw = take(8 * count)?;
        let params = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(Checkpoint {
            model: LstmModel {
                input_dim: d,
                hidden_dim: h,
                seed,
                params,
            },
            config_hash,
        })
    }

    pub fn write<W: Write>(&self, mut sink: W) -> std::io::Result<()> {
        sink.write_all(&self.to_bytes())
    }

    pub fn read<R: Read>(mut source: R) -> Result<Self, NeuralError> {
        let mut buf = Vec::new();
        source
            .read_to_end(&mut buf)
            .map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        Checkpoint::from_bytes(&buf)
    }
}
