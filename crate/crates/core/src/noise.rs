//! Noisy execution of trained circuits on the density-matrix simulator.
//!
//! After every gate each participating qubit gets a depolarizing channel
//! (rate `p` for one-qubit gates, `1 - (1 - p)^2` per qubit for two-qubit
//! gates) followed by thermal relaxation over the gate duration: amplitude
//! damping `gamma = 1 - exp(-t/T1)` and pure dephasing at rate
//! `1/T_phi = 1/T2 - 1/(2 T1)`. Measurement itself is noiseless.

use crate::circuit::{CircuitError, CircuitSpec, FeatureVector};
use crate::dataset::SampleSet;
use crate::qsim::{DensityMatrix, KrausChannel, SimError};
use crate::trainer::{classify_prob, TrainError, TrainedModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("invalid noise model: {0}")]
    InvalidModel(String),
    #[error("empty {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Train(#[from] TrainError),
}

impl From<SimError> for NoiseError {
    fn from(e: SimError) -> Self {
        NoiseError::Circuit(e.into())
    }
}

pub type Result<T> = std::result::Result<T, NoiseError>;

/// Relaxation times standing in for "no relaxation".
pub const NO_RELAXATION: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    pub p_dep: f64,
    /// Seconds.
    pub t1: f64,
    /// Seconds, at most `2 T1`.
    pub t2: f64,
    pub gate_time_1q: f64,
    pub gate_time_2q: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel { p_dep: 0.0, t1: NO_RELAXATION, t2: NO_RELAXATION, gate_time_1q: 35e-9, gate_time_2q: 300e-9 }
    }
}

impl NoiseModel {
    /// Gate error only.
    pub fn depolarizing(p_dep: f64) -> Self {
        NoiseModel { p_dep, ..Self::default() }
    }

    /// Relaxation only, with `T2 = T1`.
    pub fn relaxation(t1: f64) -> Self {
        NoiseModel { t1, t2: t1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(NoiseError::InvalidModel(m));
        if !(0.0..=1.0).contains(&self.p_dep) {
            return bad(format!("p_dep = {} outside [0, 1]", self.p_dep));
        }
        for (name, t) in [("T1", self.t1), ("T2", self.t2), ("gate_time_1q", self.gate_time_1q), ("gate_time_2q", self.gate_time_2q)] {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!("{name} = {t} must be a positive time"));
            }
        }
        if self.t2 > 2.0 * self.t1 + 1e-12 {
            return bad(format!("T2 = {} exceeds 2 T1 = {}", self.t2, 2.0 * self.t1));
        }
        Ok(())
    }
}

/// Amplitude damping then pure dephasing for a duration `t`.
pub fn thermal_relaxation(t1: f64, t2: f64, t: f64) -> Result<KrausChannel> {
    NoiseModel { t1, t2, gate_time_1q: t, gate_time_2q: t, p_dep: 0.0 }.validate()?;
    let gamma = 1.0 - (-t / t1).exp();
    let inv_tphi = (1.0 / t2 - 0.5 / t1).max(0.0);
    let lambda = 1.0 - (-2.0 * t * inv_tphi).exp();
    Ok(KrausChannel::amplitude_damping(gamma)?.then(&KrausChannel::phase_damping(lambda)?)?)
}

/// Per-qubit channels after one- and two-qubit gates.
struct GateNoise {
    after_1q: KrausChannel,
    after_2q: KrausChannel,
}

impl GateNoise {
    fn new(noise: &NoiseModel) -> Result<Self> {
        noise.validate()?;
        let p2 = 1.0 - (1.0 - noise.p_dep).powi(2);
        let relax = |t: f64| thermal_relaxation(noise.t1, noise.t2, t);
        Ok(GateNoise {
            after_1q: KrausChannel::depolarizing(noise.p_dep)?.then(&relax(noise.gate_time_1q)?)?,
            after_2q: KrausChannel::depolarizing(p2)?.then(&relax(noise.gate_time_2q)?)?,
        })
    }
}

/// Final density matrix of a circuit under `noise`.
pub fn noisy_state(spec: &CircuitSpec, params: &[f64], features: &FeatureVector, noise: &NoiseModel) -> Result<DensityMatrix> {
    let chans = GateNoise::new(noise)?;
    let rc = spec.tape()?.resolve(params, features)?;
    let mut rho = DensityMatrix::zero_state(spec.n_qubits)?;
    for g in rc.gates() {
        rho.apply_gate(g)?;
        let ch = if g.is_two_qubit() { &chans.after_2q } else { &chans.after_1q };
        for &q in g.qubits().iter() {
            rho.apply_kraus(ch, &[q])?;
        }
    }
    Ok(rho)
}

/// Noisy `p1` of a circuit on normalized features.
pub fn noisy_prob_one(spec: &CircuitSpec, params: &[f64], features: &FeatureVector, noise: &NoiseModel) -> Result<f64> {
    Ok(noisy_state(spec, params, features, noise)?.prob_one(0)?)
}

/// Noisy `p1` of a trained model on physical-unit features.
pub fn noisy_predict(model: &TrainedModel, raw: &[f64], noise: &NoiseModel) -> Result<f64> {
    noisy_prob_one(&model.spec, model.params.values(), &model.features(raw)?, noise)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleOutcome {
    pub sample_id: usize,
    /// Probability mass on the correct label.
    pub success_prob: f64,
    pub p1: f64,
    pub predicted_label: u8,
    pub true_label: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub setting_id: usize,
    pub noise: NoiseModel,
    pub accuracy: f64,
    pub mean_success_prob: f64,
    /// Mean `|p1_noisy - p1_noiseless|`.
    pub mean_abs_shift: f64,
    /// Sorted by success probability, lowest first (ties by sample id).
    pub samples: Vec<SampleOutcome>,
}

/// Evaluates every sample under every noise setting.
pub fn noise_sweep(model: &TrainedModel, data: &SampleSet, sweep: &[NoiseModel]) -> Result<Vec<SweepPoint>> {
    if sweep.is_empty() {
        return Err(NoiseError::Empty("sweep"));
    }
    if data.is_empty() {
        return Err(NoiseError::Empty("dataset"));
    }
    let features = data.samples().iter().map(|s| model.features(&s.features)).collect::<std::result::Result<Vec<_>, _>>()?;
    let clean = features
        .par_iter()
        .map(|z| Ok(crate::circuit::predict_prob_one(&model.spec, model.params.values(), z)?))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::with_capacity(sweep.len());
    for (setting_id, noise) in sweep.iter().enumerate() {
        noise.validate()?;
        let probs = features
            .par_iter()
            .map(|z| noisy_prob_one(&model.spec, model.params.values(), z, noise))
            .collect::<Result<Vec<f64>>>()?;
        let mut samples: Vec<SampleOutcome> = probs
            .iter()
            .zip(data.samples())
            .enumerate()
            .map(|(sample_id, (&p1, s))| SampleOutcome {
                sample_id,
                success_prob: if s.label == 1 { p1 } else { 1.0 - p1 },
                p1,
                predicted_label: classify_prob(p1, 0.5).label,
                true_label: s.label,
            })
            .collect();
        let n = samples.len() as f64;
        let accuracy = samples.iter().filter(|o| o.predicted_label == o.true_label).count() as f64 / n;
        let mean_success_prob = samples.iter().map(|o| o.success_prob).sum::<f64>() / n;
        let mean_abs_shift = probs.iter().zip(&clean).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
        samples.sort_by(|a, b| a.success_prob.total_cmp(&b.success_prob).then(a.sample_id.cmp(&b.sample_id)));
        out.push(SweepPoint { setting_id, noise: *noise, accuracy, mean_success_prob, mean_abs_shift, samples });
    }
    Ok(out)
}

/// Per-sample rows `setting_id,p_dep,t1_s,sample_id,success_prob,predicted_label,true_label`.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["setting_id", "p_dep", "t1_s", "sample_id", "success_prob", "predicted_label", "true_label"])?;
    for p in points {
        for s in &p.samples {
            w.write_record([
                p.setting_id.to_string(),
                p.noise.p_dep.to_string(),
                p.noise.t1.to_string(),
                s.sample_id.to_string(),
                s.success_prob.to_string(),
                s.predicted_label.to_string(),
                s.true_label.to_string(),
            ])?;
        }
    }
    w.flush()
}

/// One row per setting.
pub fn write_summary_csv<W: Write>(points: &[SweepPoint], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["setting_id", "p_dep", "t1_s", "t2_s", "accuracy", "mean_success_prob", "mean_abs_shift"])?;
    for p in points {
        w.write_record([
            p.setting_id.to_string(),
            p.noise.p_dep.to_string(),
            p.noise.t1.to_string(),
            p.noise.t2.to_string(),
            p.accuracy.to_string(),
            p.mean_success_prob.to_string(),
            p.mean_abs_shift.to_string(),
        ])?;
    }
    w.flush()
}
