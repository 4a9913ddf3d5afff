use super::{bce_loss, Example, Result, TrainError};
use crate::circuit::{CircuitSpec, FeatureVector, ResolvedCircuit, Tape};
use crate::qsim::{DensityMatrix, StateVector};
use rayon::prelude::*;
use std::f64::consts::FRAC_PI_2;

/// Clip bound of the loss; `ln` never sees anything smaller.
pub(crate) const PROB_CLIP: f64 = 1e-7;

/// `dL/dp1` of [`bce_loss`], zero where the clip is active.
pub(crate) fn bce_slope(p1: f64, label: u8) -> f64 {
    if !(PROB_CLIP..=1.0 - PROB_CLIP).contains(&p1) {
        return 0.0;
    }
    if label == 1 {
        -1.0 / p1
    } else {
        1.0 / (1.0 - p1)
    }
}

/// Forward states `psi_0 = |0>, psi_i = G_i psi_{i-1}` of a resolved circuit.
pub(crate) fn forward_states(rc: &ResolvedCircuit) -> Result<Vec<StateVector>> {
    let mut states = Vec::with_capacity(rc.gates().len() + 1);
    let mut psi = StateVector::zero_state(rc.n_qubits())?;
    states.push(psi.clone());
    for g in rc.gates() {
        psi.apply_gate(g)?;
        states.push(psi.clone());
    }
    Ok(states)
}

/// `p1` and `dp1/dparams` of one circuit by two-term parameter shifts.
///
/// Every shifted evaluation `<psi_+-| O_{i+1} |psi_+-> ` uses the cached
/// state before gate `i` and the Heisenberg-evolved readout projector
/// `O_{i+1}` of the gates after it, so all shifts cost one backward sweep
/// instead of a full circuit run each.
pub(crate) fn shift_gradient(rc: &ResolvedCircuit, n_params: usize) -> Result<(f64, Vec<f64>)> {
    let states = forward_states(rc)?;
    let gates = rc.gates();
    let p1 = states[gates.len()].prob_one(0)?;
    let mut grad = vec![0.0; n_params];
    let mut obs = DensityMatrix::projector_one(rc.n_qubits(), 0)?;
    for i in (0..gates.len()).rev() {
        let partials = rc.partials(i);
        if !partials.is_empty() {
            let mut plus = states[i].clone();
            plus.apply_gate(&gates[i].shifted(FRAC_PI_2))?;
            let mut minus = states[i].clone();
            minus.apply_gate(&gates[i].shifted(-FRAC_PI_2))?;
            let d = 0.5 * (obs.expectation(&plus)? - obs.expectation(&minus)?);
            for (k, factor) in partials.iter() {
                grad[k] += factor * d;
            }
        }
        if i > 0 {
            obs.apply_gate(&gates[i].inverse())?;
        }
    }
    Ok((p1, grad))
}

/// Mean loss and its gradient over `batch`.
pub(crate) fn loss_and_grad(tape: &Tape, params: &[f64], batch: &[Example]) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(TrainError::EmptyBatch);
    }
    let n = params.len();
    let per_sample = batch
        .par_iter()
        .map(|ex| {
            let rc = tape.resolve(params, &ex.features)?;
            let (p1, dp) = shift_gradient(&rc, n)?;
            Ok((bce_loss(p1, ex.label), bce_slope(p1, ex.label), dp))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n];
    for (l, slope, dp) in per_sample {
        loss += l;
        for (g, d) in grad.iter_mut().zip(dp) {
            *g += slope * d;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grad.iter_mut().for_each(|g| *g *= scale);
    Ok((loss * scale, grad))
}

/// Gradient of the mean binary cross-entropy over `batch` with respect to
/// every circuit parameter.
pub fn parameter_shift_grad(spec: &CircuitSpec, params: &[f64], batch: &[Example]) -> Result<Vec<f64>> {
    Ok(loss_and_grad(&spec.tape()?, params, batch)?.1)
}

/// `p1` and its gradient for a single input.
pub fn prob_one_grad(spec: &CircuitSpec, params: &[f64], features: &FeatureVector) -> Result<(f64, Vec<f64>)> {
    let rc = spec.tape()?.resolve(params, features)?;
    shift_gradient(&rc, params.len())
}
