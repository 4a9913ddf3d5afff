use super::{CircuitError, CircuitSpec, FeatureVector, Result, Segment};
use crate::qsim::{Gate, GateKind, StateVector};
use std::ops::Range;

/// Where a rotation angle comes from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleSource {
    /// Two-qubit gate, no angle.
    None,
    Const(f64),
    /// Free parameter.
    Param(usize),
    /// `params[weight] * act(z[feature]) + params[bias]` for encoding slot `slot`.
    Encoded { slot: usize, feature: usize, weight: usize, bias: usize },
    /// `z[feature]`.
    Feature(usize),
    /// `z[a] * z[b]`.
    FeatureProduct(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TapeOp {
    pub kind: GateKind,
    pub qubits: [usize; 2],
    pub angle: AngleSource,
    /// Index into the parameter layout of the block this gate belongs to.
    pub segment: Option<usize>,
}

impl TapeOp {
    pub(crate) fn rotation(kind: GateKind, qubit: usize, angle: AngleSource, segment: Option<usize>) -> Self {
        TapeOp { kind, qubits: [qubit, 0], angle, segment }
    }

    pub(crate) fn two(kind: GateKind, a: usize, b: usize) -> Self {
        TapeOp { kind, qubits: [a, b], angle: AngleSource::None, segment: None }
    }
}

/// A compiled circuit whose angles are still symbolic.
#[derive(Clone, Debug, PartialEq)]
pub struct Tape {
    spec: CircuitSpec,
    ops: Vec<TapeOp>,
    layer_starts: Vec<usize>,
    layout: Vec<Segment>,
}

/// `(parameter index, d angle / d parameter)` pairs of one gate.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Partials {
    entries: [(usize, f64); 2],
    len: usize,
}

impl Partials {
    fn push(&mut self, param: usize, factor: f64) {
        self.entries[self.len] = (param, factor);
        self.len += 1;
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries[..self.len].iter().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Concrete gates for one `(params, features)` pair, with the chain-rule
/// factors linking each rotation angle to the trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedCircuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    partials: Vec<Partials>,
    segments: Vec<Option<usize>>,
    layer_starts: Vec<usize>,
}

impl Tape {
    pub(crate) fn new(spec: CircuitSpec, ops: Vec<TapeOp>, layer_starts: Vec<usize>, layout: Vec<Segment>) -> Self {
        Tape { spec, ops, layer_starts, layout }
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn ops(&self) -> &[TapeOp] {
        &self.ops
    }

    pub fn layout(&self) -> &[Segment] {
        &self.layout
    }

    pub fn resolve(&self, params: &[f64], features: &FeatureVector) -> Result<ResolvedCircuit> {
        let expected = self.spec.param_count();
        if params.len() != expected {
            return Err(CircuitError::ParamCount { expected, found: params.len() });
        }
        self.spec.check_features(features)?;
        let z = features.values();
        let act = self.spec.activation;
        let mut gates = Vec::with_capacity(self.ops.len());
        let mut partials = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let mut part = Partials::default();
            let angle = match op.angle {
                AngleSource::None => 0.0,
                AngleSource::Const(a) => a,
                AngleSource::Param(i) => {
                    part.push(i, 1.0);
                    params[i]
                }
                AngleSource::Encoded { feature, weight, bias, .. } => {
                    let a = act.apply(z[feature]);
                    part.push(weight, a);
                    part.push(bias, 1.0);
                    params[weight] * a + params[bias]
                }
                AngleSource::Feature(j) => z[j],
                AngleSource::FeatureProduct(a, b) => z[a] * z[b],
            };
            let [q0, q1] = op.qubits;
            let gate = match op.kind {
                GateKind::Cz => Gate::Cz { a: q0, b: q1 },
                GateKind::Cnot => Gate::Cnot { control: q0, target: q1 },
                k => Gate::rotation(k, q0, angle).expect("rotation kind"),
            };
            gates.push(gate);
            partials.push(part);
        }
        Ok(ResolvedCircuit {
            n_qubits: self.spec.n_qubits,
            gates,
            partials,
            segments: self.ops.iter().map(|o| o.segment).collect(),
            layer_starts: self.layer_starts.clone(),
        })
    }
}

impl ResolvedCircuit {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn partials(&self, gate: usize) -> &Partials {
        &self.partials[gate]
    }

    pub fn segment(&self, gate: usize) -> Option<usize> {
        self.segments[gate]
    }

    /// Gate index range of each layer; a preamble before the first layer
    /// (QAOA's initial rotations) belongs to no layer.
    pub fn layer_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::with_capacity(self.layer_starts.len());
        for (i, &s) in self.layer_starts.iter().enumerate() {
            let e = self.layer_starts.get(i + 1).copied().unwrap_or(self.gates.len());
            out.push(s..e);
        }
        out
    }

    pub fn run(&self) -> Result<StateVector> {
        let mut psi = StateVector::zero_state(self.n_qubits)?;
        psi.apply_all(&self.gates)?;
        Ok(psi)
    }

    /// Applies `gates[range]` to `state`.
    pub fn run_range(&self, state: &mut StateVector, range: Range<usize>) -> Result<()> {
        state.apply_all(&self.gates[range])?;
        Ok(())
    }
}
