//! Layered variational circuits.
//!
//! The qTSA layer is `U_R U_V U_E`: an activation-wrapped encoding block, a
//! free-rotation block closed by a CZ ring, and an independent re-encoding
//! block. IQP, QAOA-style and data re-uploading circuits are provided as
//! baselines on the same gate alphabet.
//!
//! Encoding rotations are numbered globally in circuit order (layer by
//! layer, RY slots before RZ slots within a block); slot `k` reads feature
//! `k mod feature_dim`, so any feature dimension fits any register.

mod document;
mod spec;
mod tape;

pub use document::CircuitDocument;
pub use spec::{build_baseline, Activation, Architecture, BlockKind, CircuitSpec, Segment};
pub use tape::{AngleSource, ResolvedCircuit, Tape, TapeOp};

use crate::qsim::{SimError, StateVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalized features may reach this magnitude after test-time clipping.
pub const FEATURE_CLIP: f64 = 1.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid circuit: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} parameters, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("expected {expected} features, got {found}")]
    FeatureCount { expected: usize, found: usize },
    #[error("feature {index} = {value} outside [-{FEATURE_CLIP}, {FEATURE_CLIP}]")]
    FeatureRange { index: usize, value: f64 },
    #[error("expected {expected} encoding weights and biases, got {weights} / {biases}")]
    EncodingSlots { expected: usize, weights: usize, biases: usize },
    #[error("architecture {found:?} where {expected:?} is required")]
    Architecture { expected: Architecture, found: Architecture },
    #[error("parameter layout does not match the circuit")]
    Layout,
    #[error(transparent)]
    Sim(#[from] SimError),
}

pub type Result<T> = std::result::Result<T, CircuitError>;

/// Normalized classical features `Z` fed to the encoding gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() || value.abs() > FEATURE_CLIP + 1e-12 {
                return Err(CircuitError::FeatureRange { index, value });
            }
        }
        Ok(FeatureVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Trainable parameters together with their block layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    values: Vec<f64>,
    layout: Vec<Segment>,
}

impl ParameterVector {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        ParameterVector { values: vec![0.0; spec.param_count()], layout: spec.layout() }
    }

    pub fn from_values(spec: &CircuitSpec, values: Vec<f64>) -> Result<Self> {
        let expected = spec.param_count();
        if values.len() != expected {
            return Err(CircuitError::ParamCount { expected, found: values.len() });
        }
        Ok(ParameterVector { values, layout: spec.layout() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn layout(&self) -> &[Segment] {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Rotation angles `w_k act(z_{k mod d}) + b_k` for every encoding slot of
/// `spec`, in slot order.
pub fn encoding_angles(
    spec: &CircuitSpec,
    features: &FeatureVector,
    weights: &[f64],
    biases: &[f64],
) -> Result<Vec<f64>> {
    let expected = spec.encoding_slots();
    if weights.len() != expected || biases.len() != expected {
        return Err(CircuitError::EncodingSlots { expected, weights: weights.len(), biases: biases.len() });
    }
    spec.check_features(features)?;
    let z = features.values();
    Ok((0..expected)
        .map(|k| weights[k] * spec.activation.apply(z[k % z.len()]) + biases[k])
        .collect())
}

/// Executes any architecture and returns the final pure state.
pub fn execute(spec: &CircuitSpec, params: &[f64], features: &FeatureVector) -> Result<StateVector> {
    spec.tape()?.resolve(params, features)?.run()
}

/// Runs a qTSA circuit on `|0...0>`.
pub fn run_qtsa(spec: &CircuitSpec, params: &ParameterVector, features: &FeatureVector) -> Result<StateVector> {
    if spec.architecture != Architecture::Qtsa {
        return Err(CircuitError::Architecture { expected: Architecture::Qtsa, found: spec.architecture });
    }
    execute(spec, params.values(), features)
}

/// Probability of `|1>` (stable) on qubit 0.
pub fn predict_prob_one(spec: &CircuitSpec, params: &[f64], features: &FeatureVector) -> Result<f64> {
    Ok(execute(spec, params, features)?.prob_one(0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::Gate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn encoding_angles_examples() {
        let spec = CircuitSpec::qtsa(1, 1, 1).unwrap().with_activation(Activation::Identity);
        let slots = spec.encoding_slots();
        assert_eq!(slots, 4);
        let biases = vec![0.1, -0.2, 0.3, 0.4];
        let a = encoding_angles(&spec, &fv(&[0.7]), &vec![0.0; slots], &biases).unwrap();
        assert_eq!(a, biases);
        let a = encoding_angles(&spec, &fv(&[0.5]), &vec![PI; slots], &vec![0.0; slots]).unwrap();
        assert_abs_diff_eq!(a[0], FRAC_PI_2, epsilon = 1e-15);
        let tanh = spec.with_activation(Activation::Tanh);
        let a = encoding_angles(&tanh, &fv(&[1.0]), &vec![1.0; slots], &vec![0.0; slots]).unwrap();
        assert_abs_diff_eq!(a[0], 0.761_594_155_955_764_9, epsilon = 1e-15);
        assert!(matches!(
            encoding_angles(&spec, &fv(&[0.5]), &[1.0], &[0.0]),
            Err(CircuitError::EncodingSlots { expected: 4, .. })
        ));
    }

    #[test]
    fn cyclic_feature_assignment() {
        let spec = CircuitSpec::qtsa(2, 1, 3).unwrap().with_activation(Activation::Identity);
        let n = spec.encoding_slots();
        let a = encoding_angles(&spec, &fv(&[0.1, 0.2, 0.3]), &vec![1.0; n], &vec![0.0; n]).unwrap();
        for (k, angle) in a.iter().enumerate() {
            assert_eq!(*angle, [0.1, 0.2, 0.3][k % 3]);
        }
    }

    #[test]
    fn zero_params_give_ground_state() {
        let spec = CircuitSpec::qtsa(2, 3, 2).unwrap().with_activation(Activation::Identity);
        let p = ParameterVector::zeros(&spec);
        let psi = run_qtsa(&spec, &p, &fv(&[0.3, -0.9])).unwrap();
        assert_eq!(psi, crate::qsim::StateVector::zero_state(2).unwrap());
        assert_eq!(predict_prob_one(&spec, p.values(), &fv(&[0.3, -0.9])).unwrap(), 0.0);
    }

    #[test]
    fn single_qubit_net_pi_rotation() {
        let spec = CircuitSpec::qtsa(1, 1, 1).unwrap();
        let layout = spec.layout();
        let mut p = ParameterVector::zeros(&spec);
        // RY bias of U_E and free RY of U_V add to pi when all RZ angles vanish
        p.values_mut()[layout[0].start + 2] = FRAC_PI_2;
        p.values_mut()[layout[1].start] = FRAC_PI_2;
        let prob = predict_prob_one(&spec, p.values(), &fv(&[0.4])).unwrap();
        assert_abs_diff_eq!(prob, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn parameter_counts() {
        // per layer: 2 encoding blocks x (2n weights + 2n biases) + 2n free angles
        let spec = CircuitSpec::qtsa(2, 6, 2).unwrap();
        assert_eq!(spec.param_count(), 6 * (2 * 2 * 2 + 2 * 2 + 2 * 2 * 2));
        assert_eq!(spec.param_count(), 120);
        let re = build_baseline(Architecture::Reupload, 2, 10, 2).unwrap();
        assert_eq!(re.param_count(), 80);
        assert_eq!(build_baseline(Architecture::Iqp, 3, 10, 2).unwrap().param_count(), 60);
        assert_eq!(build_baseline(Architecture::Qaoa, 3, 10, 2).unwrap().param_count(), 60);
        assert!(build_baseline(Architecture::Qtsa, 2, 1, 2).is_err());
    }

    #[test]
    fn layout_segments_are_contiguous() {
        for spec in [
            CircuitSpec::qtsa(3, 4, 5).unwrap(),
            build_baseline(Architecture::Qaoa, 1, 3, 2).unwrap(),
            build_baseline(Architecture::Iqp, 4, 2, 2).unwrap(),
        ] {
            let mut next = 0;
            for s in spec.layout() {
                assert_eq!(s.start, next);
                next += s.len;
            }
            assert_eq!(next, spec.param_count());
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = CircuitSpec::qtsa(2, 1, 2).unwrap();
        assert!(matches!(execute(&spec, &[0.0; 3], &fv(&[0.0, 0.0])), Err(CircuitError::ParamCount { .. })));
        let p = ParameterVector::zeros(&spec);
        assert!(matches!(execute(&spec, p.values(), &fv(&[0.0])), Err(CircuitError::FeatureCount { .. })));
        let iqp = build_baseline(Architecture::Iqp, 2, 1, 2).unwrap();
        assert!(matches!(
            run_qtsa(&iqp, &ParameterVector::zeros(&iqp), &fv(&[0.0, 0.0])),
            Err(CircuitError::Architecture { .. })
        ));
        assert!(CircuitSpec::qtsa(0, 1, 1).is_err());
        assert!(CircuitSpec::qtsa(5, 1, 1).is_err());
        assert!(CircuitSpec::qtsa(2, 0, 1).is_err());
        assert!(CircuitSpec::qtsa(2, 1, 0).is_err());
        assert!(FeatureVector::new(vec![2.0]).is_err());
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn iqp_with_zero_features_drops_phases() {
        let spec = build_baseline(Architecture::Iqp, 3, 2, 2).unwrap();
        let params: Vec<f64> = (0..spec.param_count()).map(|i| 0.1 * i as f64 - 0.5).collect();
        let psi = execute(&spec, &params, &fv(&[0.0, 0.0])).unwrap();
        let mut expect = crate::qsim::StateVector::zero_state(3).unwrap();
        for layer in 0..2 {
            for q in 0..3 {
                expect.apply_gate(&Gate::Ry { qubit: q, angle: FRAC_PI_2 }).unwrap();
            }
            for q in 0..3 {
                expect.apply_gate(&Gate::Ry { qubit: q, angle: params[6 * layer + q] }).unwrap();
            }
            for q in 0..3 {
                expect.apply_gate(&Gate::Rz { qubit: q, angle: params[6 * layer + 3 + q] }).unwrap();
            }
        }
        for (a, b) in psi.amplitudes().iter().zip(expect.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn qaoa_zero_angles_leave_phase_state() {
        let spec = build_baseline(Architecture::Qaoa, 2, 3, 2).unwrap();
        let z = [0.4, -0.7];
        let psi = execute(&spec, &vec![0.0; spec.param_count()], &fv(&z)).unwrap();
        let mut expect = crate::qsim::StateVector::zero_state(2).unwrap();
        for q in 0..2 {
            expect.apply_gate(&Gate::Ry { qubit: q, angle: FRAC_PI_2 }).unwrap();
        }
        for (q, zq) in z.iter().enumerate() {
            expect.apply_gate(&Gate::Rz { qubit: q, angle: 3.0 * zq }).unwrap();
        }
        assert_abs_diff_eq!(psi.fidelity(&expect).unwrap(), 1.0, epsilon = 1e-14);
        for (a, b) in psi.amplitudes().iter().zip(expect.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn document_round_trip_and_field_names() {
        let spec = CircuitSpec::qtsa(2, 2, 3).unwrap();
        let values: Vec<f64> = (0..spec.param_count()).map(|i| (i as f64).sin()).collect();
        let params = ParameterVector::from_values(&spec, values).unwrap();
        let doc = CircuitDocument::new(&spec, &params);
        let json = serde_json::to_value(&doc).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(
            keys,
            ["activation", "architecture", "feature_dim", "n_layers", "n_qubits", "param_layout", "params"]
        );
        assert_eq!(json["architecture"], "QTSA");
        assert_eq!(json["activation"], "TANH");
        let back: CircuitDocument = serde_json::from_value(json).unwrap();
        let (s2, p2) = back.into_parts().unwrap();
        assert_eq!(s2, spec);
        assert_eq!(p2, params);
    }

    #[test]
    fn document_with_foreign_layout_rejected() {
        let spec = CircuitSpec::qtsa(2, 2, 3).unwrap();
        let mut doc = CircuitDocument::new(&spec, &ParameterVector::zeros(&spec));
        doc.n_layers = 3;
        assert_eq!(doc.into_parts(), Err(CircuitError::Layout));
    }
}
