use super::{BlockFisher, Result, TrainConfig, TrainError};
use serde::{Deserialize, Serialize};

/// Adam moments over the (natural) gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl OptimizerState {
    pub fn new(n_params: usize) -> Self {
        OptimizerState { m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }

    /// Resumes from raw (uncorrected) moments after `step` updates.
    pub fn from_moments(m: Vec<f64>, v: Vec<f64>, step: u64) -> Result<Self> {
        if m.len() != v.len() || v.iter().any(|x| !(*x >= 0.0)) {
            return Err(TrainError::Shape("moments must have equal length and v >= 0".into()));
        }
        Ok(OptimizerState { m, v, step })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Bias-corrected first moment; zeros before the first step.
    pub fn m_hat(&self, beta1: f64) -> Vec<f64> {
        self.corrected(&self.m, beta1)
    }

    /// Bias-corrected second moment; zeros before the first step.
    pub fn v_hat(&self, beta2: f64) -> Vec<f64> {
        self.corrected(&self.v, beta2)
    }

    fn corrected(&self, raw: &[f64], beta: f64) -> Vec<f64> {
        if self.step == 0 {
            return vec![0.0; raw.len()];
        }
        let c = 1.0 - beta.powi(self.step.min(i32::MAX as u64) as i32);
        raw.iter().map(|x| x / c).collect()
    }
}

/// One generalized quantum natural-gradient step: the natural gradient
/// `(F + lambda I)^-1 grad` (or `grad` itself with `use_fisher = false`)
/// drives bias-corrected Adam moments, and
/// `params -= eta * m_hat / (sqrt(v_hat) + xi)`.
pub fn gqng_update(
    opt: &OptimizerState,
    params: &[f64],
    grad: &[f64],
    fisher: Option<&BlockFisher>,
    cfg: &TrainConfig,
) -> Result<(OptimizerState, Vec<f64>)> {
    let n = params.len();
    if grad.len() != n || opt.len() != n {
        return Err(TrainError::Shape(format!(
            "params {n}, gradient {}, optimizer {} entries",
            grad.len(),
            opt.len()
        )));
    }
    let natural = match (cfg.use_fisher, fisher) {
        (true, Some(f)) => f.solve(grad, cfg.fisher_damping)?,
        (true, None) => return Err(TrainError::Shape("natural-gradient step without a fisher matrix".into())),
        (false, _) => grad.to_vec(),
    };
    let mut next = opt.clone();
    next.step += 1;
    for ((m, v), g) in next.m.iter_mut().zip(next.v.iter_mut()).zip(&natural) {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
    }
    let m_hat = next.m_hat(cfg.beta1);
    let v_hat = next.v_hat(cfg.beta2);
    let updated = params
        .iter()
        .zip(m_hat.iter().zip(&v_hat))
        .map(|(p, (m, v))| p - cfg.learning_rate * m / (v.sqrt() + cfg.epsilon))
        .collect();
    Ok((next, updated))
}
