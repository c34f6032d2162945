//! Numeric + text fusion forecaster.
//!
//! The numeric branch projects each lookback value to `hidden` dimensions,
//! adds a sinusoidal positional encoding, runs a stack of pre-norm
//! transformer encoder layers, flattens all positions and maps them linearly
//! to the horizon. The text branch is an MLP over a frozen summary
//! embedding. The forecast is `tsf + alpha * mlp`.
//!
//! Training minimises MSE with Adam. In [`Mode::Multi`] both branches are
//! trained jointly; [`Mode::Uni`] has no text branch at all.

mod adam;
mod gemm;
mod network;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::ForecastSample;
use crate::embedding::{check_identity, embed_all, EmbedderIdentity, TextEmbedder, TextEmbedding};
use crate::error::{invalid, Result};
use crate::rng::{self, stream};
use crate::{DEFAULT_ALPHA, DEFAULT_HORIZON, DEFAULT_LOOKBACK};

use adam::{clip_global_norm, Adam};
use network::{loss_and_grad, Layout, StepInput};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TsfConfig {
    pub layers: usize,
    pub heads: usize,
    pub hidden: usize,
    /// Width of the encoder feed-forward block.
    pub ff_hidden: usize,
    pub lookback: usize,
    pub horizon: usize,
    pub embed_dim: usize,
    pub mlp_hidden: Vec<usize>,
    pub alpha: f64,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_decay: f64,
    /// Global gradient-norm clip; 0 disables clipping.
    pub grad_clip: f64,
    /// Anneal the learning rate to zero along a half cosine.
    pub cosine_decay: bool,
}

impl Default for TsfConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            heads: 4,
            hidden: 64,
            ff_hidden: 128,
            lookback: DEFAULT_LOOKBACK,
            horizon: DEFAULT_HORIZON,
            embed_dim: crate::embedding::EMBEDDING_DIM,
            mlp_hidden: vec![512, 256, 128],
            alpha: DEFAULT_ALPHA,
            dropout: 0.0,
            learning_rate: 3e-3,
            epochs: 10,
            batch_size: 32,
            seed: 0,
            weight_decay: 0.0,
            grad_clip: 1.0,
            cosine_decay: true,
        }
    }
}

impl TsfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 || self.heads == 0 || self.hidden % self.heads != 0 {
            return Err(invalid!(
                "hidden ({}) must be a positive multiple of heads ({})",
                self.hidden,
                self.heads
            ));
        }
        if self.lookback == 0 || self.horizon == 0 {
            return Err(invalid!("lookback and horizon must be at least 1"));
        }
        if self.ff_hidden == 0 || self.embed_dim == 0 || self.mlp_hidden.contains(&0) {
            return Err(invalid!("layer widths must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(invalid!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 {
            return Err(invalid!("learning rate and batch size must be positive"));
        }
        if self.weight_decay < 0.0 || self.grad_clip < 0.0 {
            return Err(invalid!("weight decay and grad clip must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Numeric branch only.
    Uni,
    /// Numeric branch plus the summary-embedding branch.
    Multi,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Uni => "uni",
            Mode::Multi => "multi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uni" => Some(Mode::Uni),
            "multi" => Some(Mode::Multi),
            _ => None,
        }
    }
}

/// Mean training loss per epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epoch_loss: Vec<f64>,
}

/// Fixed per-dimension standardisation of summary embeddings, fitted on the
/// training set. Frozen embeddings vary little around a large common mean;
/// centring them lets the text branch see that variation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingNorm {
    pub mean: Vec<f64>,
    /// Reciprocal standard deviation (1 for constant dimensions).
    pub scale: Vec<f64>,
}

impl EmbeddingNorm {
    /// Fits on `n x dim` row-major data.
    pub fn fit(data: &[f64], dim: usize) -> Self {
        let n = (data.len() / dim).max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in data.chunks_exact(dim) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd > 1e-12 {
                    1.0 / sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    fn apply(&self, data: &mut [f64]) {
        for row in data.chunks_exact_mut(self.mean.len()) {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) * s;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionForecaster {
    config: TsfConfig,
    mode: Mode,
    embedder: Option<EmbedderIdentity>,
    embedding_norm: Option<EmbeddingNorm>,
    params: Vec<f64>,
    layout: Layout,
}

impl FusionForecaster {
    /// Freshly initialised model.
    pub fn new(config: TsfConfig, mode: Mode, embedder: Option<EmbedderIdentity>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config, mode == Mode::Multi);
        let params = layout.init(&mut rng::stream_rng(config.seed, &[stream::INIT]));
        Self::from_parts(config, mode, embedder, None, params)
    }

    /// Rebuilds a model from stored parts, checking the parameter count.
    pub fn from_parts(
        config: TsfConfig,
        mode: Mode,
        embedder: Option<EmbedderIdentity>,
        embedding_norm: Option<EmbeddingNorm>,
        params: Vec<f64>,
    ) -> Result<Self> {
        config.validate()?;
        if let Some(n) = &embedding_norm {
            if mode == Mode::Uni {
                return Err(invalid!(
                    "a numeric-only model has no embedding normalisation"
                ));
            }
            if n.mean.len() != config.embed_dim || n.scale.len() != config.embed_dim {
                return Err(invalid!(
                    "embedding normalisation must have {} dims",
                    config.embed_dim
                ));
            }
            if n.mean.iter().chain(&n.scale).any(|v| !v.is_finite()) {
                return Err(invalid!(
                    "embedding normalisation contains non-finite values"
                ));
            }
        }
        match (&embedder, mode) {
            (None, Mode::Multi) => {
                return Err(invalid!("a multimodal model needs an embedder identity"))
            }
            (Some(e), Mode::Multi) if e.dim != config.embed_dim => {
                return Err(invalid!(
                    "embedder dim {} differs from config embed_dim {}",
                    e.dim,
                    config.embed_dim
                ))
            }
            _ => {}
        }
        let layout = Layout::new(&config, mode == Mode::Multi);
        if params.len() != layout.total {
            return Err(invalid!(
                "expected {} parameters, got {}",
                layout.total,
                params.len()
            ));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid!("parameters contain non-finite values"));
        }
        Ok(Self {
            config,
            mode,
            embedder,
            embedding_norm,
            params,
            layout,
        })
    }

    pub fn config(&self) -> &TsfConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn embedder(&self) -> Option<&EmbedderIdentity> {
        self.embedder.as_ref()
    }

    pub fn embedding_norm(&self) -> Option<&EmbeddingNorm> {
        self.embedding_norm.as_ref()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    /// Changes the fusion weight of a trained model.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid!("alpha must lie in [0, 1], got {alpha}"));
        }
        self.config.alpha = alpha;
        Ok(())
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.lookback {
            return Err(invalid!(
                "input has {} values, model expects {}",
                x.len(),
                self.config.lookback
            ));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(invalid!("input contains non-finite values"));
        }
        Ok(())
    }

    fn check_embedding(&self, e: &TextEmbedding) -> Result<()> {
        if self.mode == Mode::Uni {
            return Err(invalid!("numeric-only model was given a summary embedding"));
        }
        if e.dim() != self.config.embed_dim {
            return Err(invalid!(
                "embedding has {} dims, model expects {}",
                e.dim(),
                self.config.embed_dim
            ));
        }
        Ok(())
    }

    /// `tsf` output for one lookback window.
    pub fn numeric_branch(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_x(x)?;
        Ok(self.layout.numeric_forward(&self.params, x, 1, 0.0, None).0)
    }

    /// `mlp` output for one summary embedding.
    pub fn text_branch(&self, e: &TextEmbedding) -> Result<Vec<f64>> {
        self.check_embedding(e)?;
        let mut emb: Vec<f64> = e.vector.iter().map(|v| f64::from(*v)).collect();
        if let Some(n) = &self.embedding_norm {
            n.apply(&mut emb);
        }
        Ok(self.layout.text_forward(&self.params, &emb, 1, 0.0, None).0)
    }

    /// Fused forecast. A multimodal model needs the embedding; a numeric-only
    /// model refuses one.
    pub fn predict(&self, x: &[f64], embedding: Option<&TextEmbedding>) -> Result<Vec<f64>> {
        match (self.mode, embedding) {
            (Mode::Multi, None) => Err(invalid!("multimodal model needs a summary embedding")),
            (_, None) => self.numeric_branch(x),
            (_, Some(e)) => {
                let mut y = self.numeric_branch(x)?;
                if self.config.alpha != 0.0 {
                    let m = self.text_branch(e)?;
                    y.iter_mut()
                        .zip(&m)
                        .for_each(|(v, t)| *v += self.config.alpha * t);
                } else {
                    self.check_embedding(e)?;
                }
                Ok(y)
            }
        }
    }

    /// Batched [`predict`](Self::predict); same results, far fewer calls.
    pub fn predict_batch(
        &self,
        xs: &[&[f64]],
        embeddings: Option<&[&TextEmbedding]>,
    ) -> Result<Vec<Vec<f64>>> {
        const CHUNK: usize = 256;
        let h = self.config.horizon;
        if self.mode == Mode::Multi && embeddings.is_none() {
            return Err(invalid!("multimodal model needs summary embeddings"));
        }
        if let Some(e) = embeddings {
            if e.len() != xs.len() {
                return Err(invalid!("{} inputs but {} embeddings", xs.len(), e.len()));
            }
        }
        let mut out = Vec::with_capacity(xs.len());
        for start in (0..xs.len()).step_by(CHUNK) {
            let end = (start + CHUNK).min(xs.len());
            let b = end - start;
            let mut flat = Vec::with_capacity(b * self.config.lookback);
            for x in &xs[start..end] {
                self.check_x(x)?;
                flat.extend_from_slice(x);
            }
            let mut y = self
                .layout
                .numeric_forward(&self.params, &flat, b, 0.0, None)
                .0;
            if let Some(embs) = embeddings {
                let mut e: Vec<f64> = Vec::with_capacity(b * self.config.embed_dim);
                for emb in &embs[start..end] {
                    self.check_embedding(emb)?;
                    e.extend(emb.vector.iter().map(|v| f64::from(*v)));
                }
                if let Some(n) = &self.embedding_norm {
                    n.apply(&mut e);
                }
                if self.config.alpha != 0.0 {
                    let m = self.layout.text_forward(&self.params, &e, b, 0.0, None).0;
                    y.iter_mut()
                        .zip(&m)
                        .for_each(|(v, t)| *v += self.config.alpha * t);
                }
            }
            out.extend(y.chunks_exact(h).map(<[f64]>::to_vec));
        }
        Ok(out)
    }

    /// Mean squared error over every forecast element of a batch and its
    /// gradient with respect to [`params`](Self::params), without dropout.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        embeddings: Option<&[&TextEmbedding]>,
        ys: &[&[f64]],
    ) -> Result<(f64, Vec<f64>)> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(invalid!("{} inputs but {} targets", xs.len(), ys.len()));
        }
        let mut x = Vec::with_capacity(xs.len() * self.config.lookback);
        let mut y = Vec::with_capacity(xs.len() * self.config.horizon);
        for (xi, yi) in xs.iter().zip(ys) {
            self.check_x(xi)?;
            if yi.len() != self.config.horizon {
                return Err(invalid!(
                    "target has {} values, model forecasts {}",
                    yi.len(),
                    self.config.horizon
                ));
            }
            x.extend_from_slice(xi);
            y.extend_from_slice(yi);
        }
        let emb = match (self.mode, embeddings) {
            (Mode::Multi, None) => {
                return Err(invalid!("multimodal model needs summary embeddings"))
            }
            (_, None) => None,
            (_, Some(embs)) => {
                if embs.len() != xs.len() {
                    return Err(invalid!(
                        "{} inputs but {} embeddings",
                        xs.len(),
                        embs.len()
                    ));
                }
                let mut e = Vec::with_capacity(xs.len() * self.config.embed_dim);
                for emb in embs {
                    self.check_embedding(emb)?;
                    e.extend(emb.vector.iter().map(|v| f64::from(*v)));
                }
                if let Some(n) = &self.embedding_norm {
                    n.apply(&mut e);
                }
                Some(e)
            }
        };
        let input = StepInput {
            x: &x,
            emb: emb.as_deref(),
            y: &y,
            b: xs.len(),
        };
        let mut grad = vec![0.0; self.params.len()];
        let loss = loss_and_grad(
            &self.layout,
            &self.params,
            &mut grad,
            &input,
            self.config.alpha,
            0.0,
            None,
        );
        Ok((loss, grad))
    }
}

/// Inputs, optional embeddings and targets as dense row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub x: Vec<f64>,
    pub embeddings: Option<Vec<f64>>,
    pub y: Vec<f64>,
    pub len: usize,
}

impl TrainingData {
    /// Assembles training matrices. `embeddings` must be aligned with
    /// `samples` when given.
    pub fn new(samples: &[ForecastSample], embeddings: Option<&[TextEmbedding]>) -> Result<Self> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for s in samples {
            x.extend_from_slice(&s.x);
            y.extend_from_slice(&s.y);
        }
        let embeddings = match embeddings {
            None => None,
            Some(e) if e.len() != samples.len() => {
                return Err(invalid!(
                    "{} samples but {} embeddings",
                    samples.len(),
                    e.len()
                ))
            }
            Some(e) => Some(
                e.iter()
                    .flat_map(|t| t.vector.iter().map(|v| f64::from(*v)))
                    .collect(),
            ),
        };
        Ok(Self {
            x,
            embeddings,
            y,
            len: samples.len(),
        })
    }
}

/// Trains a model on pre-assembled data.
pub fn train_on(
    data: &TrainingData,
    mode: Mode,
    config: &TsfConfig,
    embedder: Option<EmbedderIdentity>,
) -> Result<(FusionForecaster, TrainingHistory)> {
    config.validate()?;
    let n = data.len;
    if n == 0 {
        return Err(invalid!("training set is empty"));
    }
    let (l, h, e) = (config.lookback, config.horizon, config.embed_dim);
    if data.x.len() != n * l || data.y.len() != n * h {
        return Err(invalid!(
            "training samples must have lookback {l} and horizon {h}"
        ));
    }
    let normalized = match (mode, &data.embeddings) {
        (Mode::Multi, None) => {
            return Err(invalid!("multimodal training needs summary embeddings"))
        }
        (Mode::Multi, Some(v)) if v.len() != n * e => {
            return Err(invalid!("embeddings must have {e} dimensions"))
        }
        (Mode::Multi, Some(v)) => {
            let norm = EmbeddingNorm::fit(v, e);
            let mut z = v.clone();
            norm.apply(&mut z);
            Some((norm, z))
        }
        (Mode::Uni, _) => None,
    };
    if data.x.iter().chain(&data.y).any(|v| !v.is_finite()) {
        return Err(invalid!("training data contains non-finite values"));
    }

    let mut model = FusionForecaster::new(config.clone(), mode, embedder)?;
    let emb = normalized.as_ref().map(|(_, z)| z.as_slice());
    model.embedding_norm = normalized.as_ref().map(|(norm, _)| norm.clone());
    let layout = model.layout.clone();
    let mut opt = Adam::new(layout.total, config.learning_rate, config.weight_decay);
    let mut grads = vec![0.0; layout.total];
    let mut history = TrainingHistory::default();
    let mut order: Vec<usize> = (0..n).collect();
    let bs = config.batch_size;
    let total_steps = (config.epochs * n.div_ceil(bs)) as f64;
    let mut step = 0usize;
    let (mut bx, mut be, mut by) = (Vec::new(), Vec::new(), Vec::new());
    for epoch in 0..config.epochs {
        let ep = epoch as u64;
        rng::shuffle(
            &mut rng::stream_rng(config.seed, &[stream::SHUFFLE, ep]),
            &mut order,
        );
        let mut drop_rng = rng::stream_rng(config.seed, &[stream::DROPOUT, ep]);
        let mut total = 0.0;
        for batch in order.chunks(bs) {
            bx.clear();
            be.clear();
            by.clear();
            for &i in batch {
                bx.extend_from_slice(&data.x[i * l..(i + 1) * l]);
                by.extend_from_slice(&data.y[i * h..(i + 1) * h]);
                if let Some(v) = emb {
                    be.extend_from_slice(&v[i * e..(i + 1) * e]);
                }
            }
            grads.fill(0.0);
            let input = StepInput {
                x: &bx,
                emb: emb.map(|_| be.as_slice()),
                y: &by,
                b: batch.len(),
            };
            let dropout_rng = (config.dropout > 0.0).then_some(&mut drop_rng);
            let loss = loss_and_grad(
                &layout,
                &model.params,
                &mut grads,
                &input,
                config.alpha,
                config.dropout,
                dropout_rng,
            );
            if !loss.is_finite() {
                return Err(invalid!("training diverged at epoch {epoch}"));
            }
            total += loss * batch.len() as f64;
            if config.grad_clip > 0.0 {
                clip_global_norm(&mut grads, config.grad_clip);
            }
            if config.cosine_decay {
                let progress = step as f64 / total_steps;
                opt.set_learning_rate(
                    config.learning_rate
                        * 0.5
                        * (1.0 + libm::cos(core::f64::consts::PI * progress)),
                );
            }
            step += 1;
            opt.step(&mut model.params, &grads);
        }
        history.epoch_loss.push(total / n as f64);
    }
    Ok((model, history))
}

/// Text paired with every sample in multi mode: its summary.
pub fn summary_texts<'a>(
    samples: &[ForecastSample],
    summaries: &'a BTreeMap<String, String>,
) -> Result<Vec<&'a str>> {
    samples
        .iter()
        .map(|s| {
            let id = s.sample_id();
            summaries
                .get(&id)
                .map(String::as_str)
                .ok_or_else(|| invalid!("no summary for sample {id}"))
        })
        .collect()
}

/// Trains on forecast samples, embedding the per-sample summaries with the
/// frozen `embedder` in multi mode.
pub fn train(
    samples: &[ForecastSample],
    summaries: Option<&BTreeMap<String, String>>,
    mode: Mode,
    config: &TsfConfig,
    embedder: &dyn TextEmbedder,
) -> Result<(FusionForecaster, TrainingHistory)> {
    if samples.is_empty() {
        return Err(invalid!("training set is empty"));
    }
    let (embeddings, identity) = match mode {
        Mode::Uni => (None, None),
        Mode::Multi => {
            let summaries =
                summaries.ok_or_else(|| invalid!("multimodal training needs summaries"))?;
            let texts = summary_texts(samples, summaries)?;
            (Some(embed_all(embedder, texts)?), Some(embedder.identity()))
        }
    };
    let data = TrainingData::new(samples, embeddings.as_deref())?;
    train_on(&data, mode, config, identity)
}

/// Forecasts for `samples`, embedding their summaries when the model is
/// multimodal. The embedder must be the one the model was trained with.
pub fn forecast_samples(
    model: &FusionForecaster,
    samples: &[ForecastSample],
    summaries: Option<&BTreeMap<String, String>>,
    embedder: Option<&dyn TextEmbedder>,
) -> Result<Vec<Vec<f64>>> {
    let xs: Vec<&[f64]> = samples.iter().map(|s| s.x.as_slice()).collect();
    match model.mode() {
        Mode::Uni => model.predict_batch(&xs, None),
        Mode::Multi => {
            let summaries =
                summaries.ok_or_else(|| invalid!("multimodal model needs summaries"))?;
            let embedder =
                embedder.ok_or_else(|| invalid!("multimodal model needs an embedder"))?;
            if let Some(expected) = model.embedder() {
                check_identity(expected, &embedder.identity())?;
            }
            let embs = embed_all(embedder, summary_texts(samples, summaries)?)?;
            let refs: Vec<&TextEmbedding> = embs.iter().collect();
            model.predict_batch(&xs, Some(&refs))
        }
    }
}

/// Repeats the mean of the last `h` lookback values `h` times.
pub fn copy_baseline(x: &[f64], h: usize) -> Result<Vec<f64>> {
    if h == 0 || h > x.len() {
        return Err(invalid!(
            "copy baseline needs 1 <= h <= lookback, got h={h}, lookback={}",
            x.len()
        ));
    }
    let m = crate::data::mean(&x[x.len() - h..]);
    Ok(vec![m; h])
}
