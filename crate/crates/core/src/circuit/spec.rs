use super::tape::{AngleSource, Tape, TapeOp};
use super::{CircuitError, FeatureVector, Result};
use crate::qsim::{GateKind, MAX_QUBITS};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Architecture {
    Qtsa,
    Iqp,
    Qaoa,
    Reupload,
}

impl Architecture {
    pub fn name(self) -> &'static str {
        match self {
            Architecture::Qtsa => "QTSA",
            Architecture::Iqp => "IQP",
            Architecture::Qaoa => "QAOA",
            Architecture::Reupload => "REUPLOAD",
        }
    }
}

impl std::str::FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "QTSA" => Ok(Architecture::Qtsa),
            "IQP" => Ok(Architecture::Iqp),
            "QAOA" => Ok(Architecture::Qaoa),
            "REUPLOAD" => Ok(Architecture::Reupload),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Activation {
    Tanh,
    Arctan,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Arctan => x.atan(),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Arctan => 1.0 / (1.0 + x * x),
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "TANH" => Ok(Activation::Tanh),
            "ARCTAN" => Ok(Activation::Arctan),
            "IDENTITY" => Ok(Activation::Identity),
            other => Err(format!("unknown activation `{other}`")),
        }
    }
}

/// Role of a contiguous run of parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// Encoding weights then biases (`U_E`).
    Encoding,
    /// Free rotation angles (`U_V`, and the IQP trainable rotations).
    Variational,
    /// Re-encoding weights then biases (`U_R`).
    ReEncoding,
    /// Trainable ZZ phases of a QAOA cost layer.
    Cost,
    /// RX mixer angles of a QAOA layer.
    Mixing,
    /// Re-uploading weights then biases.
    Upload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub layer: usize,
    pub block: BlockKind,
    pub start: usize,
    pub len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub architecture: Architecture,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub feature_dim: usize,
    pub activation: Activation,
}

impl CircuitSpec {
    /// qTSA(n, L) with the default TANH activation.
    pub fn qtsa(n_qubits: usize, n_layers: usize, feature_dim: usize) -> Result<Self> {
        let spec = CircuitSpec {
            architecture: Architecture::Qtsa,
            n_qubits,
            n_layers,
            feature_dim,
            activation: Activation::Tanh,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(CircuitError::InvalidSpec(format!("n_qubits = {} (1..={MAX_QUBITS})", self.n_qubits)));
        }
        if self.n_layers == 0 {
            return Err(CircuitError::InvalidSpec("n_layers must be at least 1".into()));
        }
        if self.feature_dim == 0 {
            return Err(CircuitError::InvalidSpec("feature_dim must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn check_features(&self, features: &FeatureVector) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(CircuitError::FeatureCount { expected: self.feature_dim, found: features.len() });
        }
        Ok(())
    }

    /// Ordered parameter segments; contiguous and non-overlapping.
    pub fn layout(&self) -> Vec<Segment> {
        let n = self.n_qubits;
        let blocks: Vec<(BlockKind, usize)> = match self.architecture {
            Architecture::Qtsa => vec![
                (BlockKind::Encoding, 4 * n),
                (BlockKind::Variational, 2 * n),
                (BlockKind::ReEncoding, 4 * n),
            ],
            Architecture::Iqp => vec![(BlockKind::Variational, 2 * n)],
            Architecture::Qaoa => {
                let pairs = ring_pairs(n).len();
                let mut b = Vec::new();
                if pairs > 0 {
                    b.push((BlockKind::Cost, pairs));
                }
                b.push((BlockKind::Mixing, n));
                b
            }
            Architecture::Reupload => vec![(BlockKind::Upload, 4 * n)],
        };
        let mut start = 0;
        let mut out = Vec::new();
        for layer in 0..self.n_layers {
            for &(block, len) in &blocks {
                out.push(Segment { layer, block, start, len });
                start += len;
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.layout().iter().map(|s| s.len).sum()
    }

    /// Number of activation-wrapped encoding rotations in the circuit.
    pub fn encoding_slots(&self) -> usize {
        let n = self.n_qubits;
        match self.architecture {
            Architecture::Qtsa => self.n_layers * 4 * n,
            Architecture::Reupload => self.n_layers * 2 * n,
            Architecture::Iqp | Architecture::Qaoa => 0,
        }
    }

    /// Gate program with symbolic angles.
    pub fn tape(&self) -> Result<Tape> {
        self.validate()?;
        let n = self.n_qubits;
        let d = self.feature_dim;
        let layout = self.layout();
        let mut ops = Vec::new();
        let mut slot = 0usize;
        let mut layer_starts = Vec::with_capacity(self.n_layers);
        let seg_of = |layer: usize, block: BlockKind| -> (usize, Segment) {
            layout
                .iter()
                .copied()
                .enumerate()
                .find(|(_, s)| s.layer == layer && s.block == block)
                .expect("block present in layout")
        };
        // weights occupy the first half of an encoding segment, biases the second
        let encode = |ops: &mut Vec<TapeOp>, seg_idx: usize, seg: Segment, slot: &mut usize| {
            let half = seg.len / 2;
            for (i, kind) in (0..half).map(|i| (i, if i < n { GateKind::Ry } else { GateKind::Rz })) {
                ops.push(TapeOp::rotation(
                    kind,
                    i % n,
                    AngleSource::Encoded { slot: *slot, feature: *slot % d, weight: seg.start + i, bias: seg.start + half + i },
                    Some(seg_idx),
                ));
                *slot += 1;
            }
        };
        match self.architecture {
            Architecture::Qtsa => {
                for layer in 0..self.n_layers {
                    layer_starts.push(ops.len());
                    let (ei, e) = seg_of(layer, BlockKind::Encoding);
                    encode(&mut ops, ei, e, &mut slot);
                    let (vi, v) = seg_of(layer, BlockKind::Variational);
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Ry, q, AngleSource::Param(v.start + q), Some(vi)));
                    }
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Rz, q, AngleSource::Param(v.start + n + q), Some(vi)));
                    }
                    for (a, b) in ring_pairs(n) {
                        ops.push(TapeOp::two(GateKind::Cz, a, b));
                    }
                    let (ri, r) = seg_of(layer, BlockKind::ReEncoding);
                    encode(&mut ops, ri, r, &mut slot);
                }
            }
            Architecture::Reupload => {
                for layer in 0..self.n_layers {
                    layer_starts.push(ops.len());
                    let (ui, u) = seg_of(layer, BlockKind::Upload);
                    encode(&mut ops, ui, u, &mut slot);
                    for (a, b) in ring_pairs(n) {
                        ops.push(TapeOp::two(GateKind::Cz, a, b));
                    }
                }
            }
            Architecture::Iqp => {
                let mut fslot = 0usize;
                for layer in 0..self.n_layers {
                    layer_starts.push(ops.len());
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Ry, q, AngleSource::Const(FRAC_PI_2), None));
                    }
                    let feats: Vec<usize> = (0..n).map(|i| (fslot + i) % d).collect();
                    fslot += n;
                    for (q, &f) in feats.iter().enumerate() {
                        ops.push(TapeOp::rotation(GateKind::Rz, q, AngleSource::Feature(f), None));
                    }
                    for (a, b) in ring_pairs(n) {
                        ops.push(TapeOp::two(GateKind::Cnot, a, b));
                        ops.push(TapeOp::rotation(
                            GateKind::Rz,
                            b,
                            AngleSource::FeatureProduct(feats[a], feats[b]),
                            None,
                        ));
                        ops.push(TapeOp::two(GateKind::Cnot, a, b));
                    }
                    let (vi, v) = seg_of(layer, BlockKind::Variational);
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Ry, q, AngleSource::Param(v.start + q), Some(vi)));
                    }
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Rz, q, AngleSource::Param(v.start + n + q), Some(vi)));
                    }
                }
            }
            Architecture::Qaoa => {
                for q in 0..n {
                    ops.push(TapeOp::rotation(GateKind::Ry, q, AngleSource::Const(FRAC_PI_2), None));
                }
                let mut fslot = 0usize;
                for layer in 0..self.n_layers {
                    layer_starts.push(ops.len());
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Rz, q, AngleSource::Feature(fslot % d), None));
                        fslot += 1;
                    }
                    let pairs = ring_pairs(n);
                    if !pairs.is_empty() {
                        let (ci, c) = seg_of(layer, BlockKind::Cost);
                        for (p, (a, b)) in pairs.into_iter().enumerate() {
                            ops.push(TapeOp::two(GateKind::Cnot, a, b));
                            ops.push(TapeOp::rotation(GateKind::Rz, b, AngleSource::Param(c.start + p), Some(ci)));
                            ops.push(TapeOp::two(GateKind::Cnot, a, b));
                        }
                    }
                    let (mi, m) = seg_of(layer, BlockKind::Mixing);
                    for q in 0..n {
                        ops.push(TapeOp::rotation(GateKind::Rx, q, AngleSource::Param(m.start + q), Some(mi)));
                    }
                }
            }
        }
        Ok(Tape::new(*self, ops, layer_starts, layout))
    }
}

/// Entangling pairs `(q, q+1 mod n)`; the two-qubit ring degenerates to a
/// single pair and a single qubit has none.
pub(crate) fn ring_pairs(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n).map(|q| (q, (q + 1) % n)).collect(),
    }
}

/// Baseline circuits for architecture comparisons.
pub fn build_baseline(kind: Architecture, n_qubits: usize, n_layers: usize, feature_dim: usize) -> Result<CircuitSpec> {
    if kind == Architecture::Qtsa {
        return Err(CircuitError::InvalidSpec("QTSA is not a baseline architecture".into()));
    }
    let spec = CircuitSpec { architecture: kind, n_qubits, n_layers, feature_dim, activation: Activation::Identity };
    spec.validate()?;
    Ok(spec)
}
