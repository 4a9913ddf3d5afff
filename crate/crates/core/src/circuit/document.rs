use super::{Activation, Architecture, CircuitError, CircuitSpec, ParameterVector, Result, Segment};
use serde::{Deserialize, Serialize};

/// JSON form of a circuit and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDocument {
    pub architecture: Architecture,
    pub n_qubits: usize,
    pub n_layers: usize,
    pub feature_dim: usize,
    pub activation: Activation,
    pub param_layout: Vec<Segment>,
    pub params: Vec<f64>,
}

impl CircuitDocument {
    pub fn new(spec: &CircuitSpec, params: &ParameterVector) -> Self {
        CircuitDocument {
            architecture: spec.architecture,
            n_qubits: spec.n_qubits,
            n_layers: spec.n_layers,
            feature_dim: spec.feature_dim,
            activation: spec.activation,
            param_layout: params.layout().to_vec(),
            params: params.values().to_vec(),
        }
    }

    pub fn spec(&self) -> CircuitSpec {
        CircuitSpec {
            architecture: self.architecture,
            n_qubits: self.n_qubits,
            n_layers: self.n_layers,
            feature_dim: self.feature_dim,
            activation: self.activation,
        }
    }

    /// Checks the document against the layout its spec implies.
    pub fn into_parts(self) -> Result<(CircuitSpec, ParameterVector)> {
        let spec = self.spec();
        spec.validate()?;
        if spec.layout() != self.param_layout {
            return Err(CircuitError::Layout);
        }
        let params = ParameterVector::from_values(&spec, self.params)?;
        Ok((spec, params))
    }
}
