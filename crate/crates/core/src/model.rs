//! A 5-64-64-1 perceptron regressing normalized traversal time (s/m) from
//! the five normalized metrics. Hidden layers use ReLU, the output is linear
//! and training minimizes mean squared error with plain mini-batch gradient
//! descent.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{normalize, MetricStats, MetricVector};
use crate::seed::{self, stream};

pub const INPUTS: usize = 5;
pub const HIDDEN: usize = 64;
pub const OUTPUTS: usize = 1;
pub const LAYER_SIZES: [usize; 4] = [INPUTS, HIDDEN, HIDDEN, OUTPUTS];
pub const MODEL_HEADER: &str = "BARNMLP1 5 64 64 1";
pub const MIN_TRAINING_EXAMPLES: usize = 10;

/// Total number of scalar parameters.
pub const PARAM_COUNT: usize = INPUTS * HIDDEN + HIDDEN + HIDDEN * HIDDEN + HIDDEN + HIDDEN * OUTPUTS + OUTPUTS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: [f64; 5],
    /// Normalized traversal time in s/m.
    pub label: f64,
}

impl LabeledExample {
    pub fn validate(&self) -> Result<()> {
        if !self.features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("example features"));
        }
        if !(self.label.is_finite() && self.label > 0.0) {
            return Err(Error::Config(format!("example label must be positive, got {}", self.label)));
        }
        Ok(())
    }
}

/// Dense layer; `weights[i * outputs + j]` connects input `i` to output `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], biases: vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], relu: bool) -> Vec<f64> {
        let mut out = self.biases.clone();
        for (i, &xi) in x.iter().enumerate() {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            for (o, &w) in out.iter_mut().zip(row) {
                *o += xi * w;
            }
        }
        if relu {
            for o in &mut out {
                *o = o.max(0.0);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Examples per update. The default exceeds the 300-environment dataset,
    /// so default training is full-batch descent.
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 3000, learning_rate: 0.001, batch_size: 512, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config(format!("learning rate must be finite and non-negative, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// What produced a model; stored in the JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub architecture: String,
    pub hidden_activation: String,
    pub output_activation: String,
    pub loss: String,
    pub initialization: String,
    pub config: TrainConfig,
    pub examples: usize,
    pub final_loss: f64,
    pub loss_history: Vec<f64>,
    /// Normalization the features were produced with, if known.
    pub stats: Option<MetricStats>,
}

impl TrainingMeta {
    fn new(config: TrainConfig, examples: usize) -> Self {
        Self {
            architecture: MODEL_HEADER.to_string(),
            hidden_activation: "relu".into(),
            output_activation: "identity".into(),
            loss: "mse".into(),
            initialization: "uniform(-sqrt(6/fan_in), sqrt(6/fan_in)) weights, zero biases".into(),
            config,
            examples,
            final_loss: f64::NAN,
            loss_history: Vec::new(),
            stats: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: [Layer; 3],
    pub meta: Option<TrainingMeta>,
}

/// Activations kept for backpropagation.
struct Trace {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: f64,
}

impl MlpModel {
    pub fn zeros() -> Self {
        Self {
            layers: [
                Layer::zeros(INPUTS, HIDDEN),
                Layer::zeros(HIDDEN, HIDDEN),
                Layer::zeros(HIDDEN, OUTPUTS),
            ],
            meta: None,
        }
    }

    /// Fan-in scaled uniform weights from the seed's init stream.
    pub fn init(seed: u64) -> Self {
        let mut rng = seed::rng(seed::derive(seed, &[stream::INIT]));
        let mut m = Self::zeros();
        for layer in &mut m.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.gen_range(-bound..bound);
            }
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        for (layer, pair) in self.layers.iter().zip(LAYER_SIZES.windows(2)) {
            if layer.inputs != pair[0]
                || layer.outputs != pair[1]
                || layer.weights.len() != pair[0] * pair[1]
                || layer.biases.len() != pair[1]
            {
                return Err(Error::Config("layer shapes do not match 5-64-64-1".into()));
            }
        }
        if !self.params().iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64; 5]) -> Trace {
        let h1 = self.layers[0].apply(x, true);
        let h2 = self.layers[1].apply(&h1, true);
        let out = self.layers[2].apply(&h2, false)[0];
        Trace { h1, h2, out }
    }

    pub fn forward(&self, features: &[f64; 5]) -> Result<f64> {
        if !features.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("model input"));
        }
        Ok(self.trace(features).out)
    }

    /// Parameters flattened in file order: per layer, weights row-major then
    /// biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(PARAM_COUNT);
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.biases);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != PARAM_COUNT {
            return Err(Error::Config(format!("expected {PARAM_COUNT} parameters, got {}", p.len())));
        }
        let mut it = p.iter().copied();
        for l in &mut self.layers {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
        Ok(())
    }

    /// Gradient of `(forward(x) - label)^2`, flattened like [`params`](Self::params).
    pub fn grad(&self, ex: &LabeledExample) -> Vec<f64> {
        let mut g = vec![0.0; PARAM_COUNT];
        self.accumulate_grad(ex, 1.0, &mut g);
        g
    }

    /// Adds `scale * grad(ex)` into `g`; returns the squared error.
    fn accumulate_grad(&self, ex: &LabeledExample, scale: f64, g: &mut [f64]) -> f64 {
        let t = self.trace(&ex.features);
        let err = t.out - ex.label;
        let [l1, l2, l3] = &self.layers;
        let (g1, rest) = g.split_at_mut(l1.weights.len() + l1.biases.len());
        let (g2, g3) = rest.split_at_mut(l2.weights.len() + l2.biases.len());

        let d_out = scale * 2.0 * err;
        let (g3w, g3b) = g3.split_at_mut(l3.weights.len());
        g3b[0] += d_out;
        let mut d2 = vec![0.0; HIDDEN];
        for i in 0..HIDDEN {
            g3w[i] += d_out * t.h2[i];
            if t.h2[i] > 0.0 {
                d2[i] = d_out * l3.weights[i];
            }
        }

        let (g2w, g2b) = g2.split_at_mut(l2.weights.len());
        let mut d1 = vec![0.0; HIDDEN];
        for j in 0..HIDDEN {
            g2b[j] += d2[j];
        }
        for i in 0..HIDDEN {
            let row = &l2.weights[i * HIDDEN..(i + 1) * HIDDEN];
            let grow = &mut g2w[i * HIDDEN..(i + 1) * HIDDEN];
            let mut back = 0.0;
            for j in 0..HIDDEN {
                grow[j] += t.h1[i] * d2[j];
                back += row[j] * d2[j];
            }
            if t.h1[i] > 0.0 {
                d1[i] = back;
            }
        }

        let (g1w, g1b) = g1.split_at_mut(l1.weights.len());
        for j in 0..HIDDEN {
            g1b[j] += d1[j];
        }
        for i in 0..INPUTS {
            let grow = &mut g1w[i * HIDDEN..(i + 1) * HIDDEN];
            for j in 0..HIDDEN {
                grow[j] += ex.features[i] * d1[j];
            }
        }
        err * err
    }

    /// Mean squared error over `examples`.
    pub fn loss(&self, examples: &[LabeledExample]) -> f64 {
        let s: f64 = examples.iter().map(|e| (self.trace(&e.features).out - e.label).powi(2)).sum();
        s / examples.len() as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from(MODEL_HEADER);
        s.push('\n');
        for l in &self.layers {
            for row in l.weights.chunks(l.outputs) {
                push_row(&mut s, row);
            }
            push_row(&mut s, &l.biases);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == MODEL_HEADER => {}
            other => {
                return Err(Error::Parse { line: 1, msg: format!("expected header {MODEL_HEADER:?}, got {:?}", other.unwrap_or("")) })
            }
        }
        let mut params = Vec::with_capacity(PARAM_COUNT);
        for (i, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|_| Error::Parse { line: i + 2, msg: format!("bad number {tok:?}") })?;
                params.push(v);
            }
        }
        if params.len() != PARAM_COUNT {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: format!("expected {PARAM_COUNT} parameters, found {}", params.len()),
            });
        }
        let mut m = Self::zeros();
        m.set_params(&params)?;
        m.validate()?;
        Ok(m)
    }

    /// Writes the parameter file and, when metadata exists, `<path>.json`.
    pub fn save(&self, path: &FsPath) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))?;
        if let Some(meta) = &self.meta {
            let side = sidecar_path(path);
            let json = serde_json::to_string_pretty(meta)?;
            fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
        }
        Ok(())
    }

    /// Reads a parameter file plus its sidecar if one is present.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut m = Self::from_text(&text)?;
        let side = sidecar_path(path);
        if side.exists() {
            let json = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
            m.meta = Some(serde_json::from_str(&json)?);
        }
        Ok(m)
    }
}

fn push_row(s: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        // Debug formatting is the shortest string that parses back exactly.
        s.push_str(&format!("{v:?}"));
    }
    s.push('\n');
}

pub fn sidecar_path(path: &FsPath) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Mini-batch gradient descent on mean squared error. Initialization and the
/// per-epoch shuffle come from independent streams of `config.seed`.
pub fn train(examples: &[LabeledExample], config: &TrainConfig) -> Result<MlpModel> {
    config.validate()?;
    if examples.len() < MIN_TRAINING_EXAMPLES {
        return Err(Error::Config(format!(
            "training needs at least {MIN_TRAINING_EXAMPLES} examples, got {}",
            examples.len()
        )));
    }
    for e in examples {
        e.validate()?;
    }
    let mut model = MlpModel::init(config.seed);
    let mut params = model.params();
    let mut shuffle = seed::rng(seed::derive(config.seed, &[stream::SHUFFLE]));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut grad = vec![0.0; PARAM_COUNT];
    let mut meta = TrainingMeta::new(config.clone(), examples.len());

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                model.accumulate_grad(&examples[i], scale, &mut grad);
            }
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= config.learning_rate * g;
            }
            model.set_params(&params)?;
        }
        let loss = model.loss(examples);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch, loss });
        }
        meta.loss_history.push(loss);
    }
    meta.final_loss = meta.loss_history.last().copied().unwrap_or_else(|| model.loss(examples));
    model.meta = Some(meta);
    Ok(model)
}

/// Normalizes `raw` with `stats` and runs the model.
pub fn predict_difficulty(model: &MlpModel, stats: &MetricStats, raw: &MetricVector) -> Result<f64> {
    model.forward(&normalize(raw, stats)?)
}
