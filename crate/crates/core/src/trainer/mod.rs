//! Hybrid training of the variational classifier.
//!
//! The loss is the clipped binary cross-entropy of `p1` (probability of
//! measuring `|1>` = stable on qubit 0). Gradients use the two-term
//! parameter-shift rule on every rotation angle, with the activation's
//! chain factor for the encoding weights and biases. Updates precondition
//! the gradient with the damped block-diagonal quantum Fisher information and
//! feed the result through bias-corrected Adam moments.

mod fisher;
mod gradient;
mod model;
mod optimizer;

pub use fisher::{fisher_matrix, BlockFisher, FisherBlock};
pub use gradient::{parameter_shift_grad, prob_one_grad};
pub use model::{classify, classify_prob, Classification, EpochRecord, FeatureScaler, TrainedModel};
pub use optimizer::{gqng_update, OptimizerState};

use crate::circuit::{CircuitError, CircuitSpec, FeatureVector, ParameterVector, Tape};
use crate::dataset::SampleSet;
use crate::qsim::SimError;
use gradient::PROB_CLIP;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("batch is empty")]
    EmptyBatch,
    #[error("training data contain a single class")]
    SingleClass,
    #[error("loss became non-finite in epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("undamped fisher block at parameter {start} is singular")]
    SingularFisher { start: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
}

impl From<SimError> for TrainError {
    fn from(e: SimError) -> Self {
        TrainError::Circuit(e.into())
    }
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epsilon: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub fisher_damping: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub use_fisher: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.05,
            epsilon: 1e-8,
            beta1: 0.9,
            beta2: 0.999,
            fisher_damping: 1e-3,
            max_epochs: 200,
            batch_size: 32,
            seed: 0,
            use_fisher: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TrainError::Config(msg.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be > 0");
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad("beta1 and beta2 must lie in (0, 1)");
        }
        if !(self.fisher_damping >= 0.0 && self.fisher_damping.is_finite()) {
            return bad("fisher_damping must be >= 0");
        }
        if self.max_epochs == 0 || self.batch_size == 0 {
            return bad("max_epochs and batch_size must be >= 1");
        }
        Ok(())
    }
}

/// A normalized input with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub features: FeatureVector,
    pub label: u8,
}

/// `-[y ln p + (1 - y) ln(1 - p)]` with `p` clipped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(p1: f64, label: u8) -> f64 {
    let p = p1.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if label == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// `p1` for every example.
pub fn predict_batch(spec: &CircuitSpec, params: &[f64], batch: &[Example]) -> Result<Vec<f64>> {
    let tape = spec.tape()?;
    predict_with(&tape, params, batch)
}

fn predict_with(tape: &Tape, params: &[f64], batch: &[Example]) -> Result<Vec<f64>> {
    batch
        .par_iter()
        .map(|ex| Ok(tape.resolve(params, &ex.features)?.run()?.prob_one(0)?))
        .collect()
}

/// Mean loss over a nonempty batch.
pub fn batch_loss(spec: &CircuitSpec, params: &[f64], batch: &[Example]) -> Result<f64> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let probs = predict_batch(spec, params, batch)?;
    Ok(probs.iter().zip(batch).map(|(&p, ex)| bce_loss(p, ex.label)).sum::<f64>() / batch.len() as f64)
}

/// Mean loss and accuracy at threshold 0.5.
fn evaluate(tape: &Tape, params: &[f64], batch: &[Example]) -> Result<(f64, f64)> {
    let probs = predict_with(tape, params, batch)?;
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (&p, ex) in probs.iter().zip(batch) {
        loss += bce_loss(p, ex.label);
        correct += (classify_prob(p, 0.5).label == ex.label) as usize;
    }
    let n = batch.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Fits a scaler on `data` and trains `spec` on the normalized samples.
pub fn train(spec: &CircuitSpec, data: &SampleSet, cfg: &TrainConfig) -> Result<TrainedModel> {
    train_with_progress(spec, data, cfg, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with_progress(
    spec: &CircuitSpec,
    data: &SampleSet,
    cfg: &TrainConfig,
    progress: impl FnMut(&EpochRecord),
) -> Result<TrainedModel> {
    if data.dim() != spec.feature_dim {
        return Err(TrainError::Shape(format!("dataset has {} features, circuit expects {}", data.dim(), spec.feature_dim)));
    }
    let scaler = FeatureScaler::fit(data.samples().iter().map(|s| s.features.as_slice()))?;
    let examples = data
        .samples()
        .iter()
        .map(|s| Ok(Example { features: scaler.transform(&s.features)?, label: s.label }))
        .collect::<Result<Vec<_>>>()?;
    let (params, history) = train_examples(spec, &examples, cfg, progress)?;
    TrainedModel::new(*spec, params, scaler, history)
}

/// Mini-batch training on already normalized examples; returns the
/// best-loss parameters and the per-epoch history.
pub fn train_examples(
    spec: &CircuitSpec,
    examples: &[Example],
    cfg: &TrainConfig,
    mut progress: impl FnMut(&EpochRecord),
) -> Result<(ParameterVector, Vec<EpochRecord>)> {
    cfg.validate()?;
    spec.validate()?;
    if examples.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    if cfg.batch_size > examples.len() {
        return Err(TrainError::Config(format!(
            "batch_size {} exceeds the {} training samples",
            cfg.batch_size,
            examples.len()
        )));
    }
    let stable = examples.iter().filter(|e| e.label == 1).count();
    if stable == 0 || stable == examples.len() {
        return Err(TrainError::SingleClass);
    }
    let tape = spec.tape()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params: Vec<f64> = (0..spec.param_count()).map(|_| rng.gen_range(-0.1..=0.1)).collect();
    let mut opt = OptimizerState::new(params.len());
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut batch = Vec::with_capacity(cfg.batch_size);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut history = Vec::with_capacity(cfg.max_epochs);
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let (loss, grad) = gradient::loss_and_grad(&tape, &params, &batch)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(TrainError::NonFinite { epoch });
            }
            let fisher = if cfg.use_fisher { Some(fisher_matrix(spec, &params, &batch[0].features)?) } else { None };
            let (next, updated) = gqng_update(&opt, &params, &grad, fisher.as_ref(), cfg)?;
            opt = next;
            params = updated;
        }
        let (loss, train_accuracy) = evaluate(&tape, &params, examples)?;
        if !loss.is_finite() {
            return Err(TrainError::NonFinite { epoch });
        }
        let record = EpochRecord { epoch, loss, train_accuracy };
        progress(&record);
        history.push(record);
        if best.as_ref().is_none_or(|(l, _)| loss < *l) {
            best = Some((loss, params.clone()));
        }
    }
    let (_, best_params) = best.expect("at least one epoch");
    Ok((ParameterVector::from_values(spec, best_params)?, history))
}
