use super::{check_qubits, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cz,
    Cnot,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

/// One gate of the fixed alphabet {RX, RY, RZ, CZ, CNOT}.
///
/// Rotations are `exp(-i angle P / 2)` for the Pauli `P` of their axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Cz { a: usize, b: usize },
    Cnot { control: usize, target: usize },
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl Gate {
    pub fn rotation(kind: GateKind, qubit: usize, angle: f64) -> Option<Gate> {
        match kind {
            GateKind::Rx => Some(Gate::Rx { qubit, angle }),
            GateKind::Ry => Some(Gate::Ry { qubit, angle }),
            GateKind::Rz => Some(Gate::Rz { qubit, angle }),
            _ => None,
        }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Cz { .. } => GateKind::Cz,
            Gate::Cnot { .. } => GateKind::Cnot,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// Target qubits; for CNOT the control comes first.
    pub fn qubits(&self) -> Qubits {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => {
                Qubits::one(qubit)
            }
            Gate::Cz { a, b } => Qubits::two(a, b),
            Gate::Cnot { control, target } => Qubits::two(control, target),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        !self.kind().is_rotation()
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: -angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
            g => g,
        }
    }

    /// The same gate with its angle moved by `delta`; fixed gates are
    /// returned unchanged.
    pub fn shifted(&self, delta: f64) -> Gate {
        match *self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit, angle: angle + delta },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: angle + delta },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: angle + delta },
            g => g,
        }
    }

    pub(crate) fn validate(&self, n_qubits: usize) -> Result<()> {
        check_qubits(&self.qubits(), n_qubits)
    }

    /// Row-major unitary on the gate's local qubits; only the first
    /// `4^k` entries are meaningful.
    pub(crate) fn matrix(&self) -> [Complex64; 16] {
        let mut m = [ZERO; 16];
        match *self {
            Gate::Rx { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                m[..4].copy_from_slice(&[
                    Complex64::new(c, 0.0),
                    Complex64::new(0.0, -s),
                    Complex64::new(0.0, -s),
                    Complex64::new(c, 0.0),
                ]);
            }
            Gate::Ry { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                m[..4].copy_from_slice(&[
                    Complex64::new(c, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(c, 0.0),
                ]);
            }
            Gate::Rz { angle, .. } => {
                let (s, c) = (angle / 2.0).sin_cos();
                m[0] = Complex64::new(c, -s);
                m[3] = Complex64::new(c, s);
            }
            Gate::Cz { .. } => {
                m[0] = ONE;
                m[5] = ONE;
                m[10] = ONE;
                m[15] = -ONE;
            }
            Gate::Cnot { .. } => {
                // local index = control + 2 * target
                m[0] = ONE;
                m[4 + 3] = ONE;
                m[2 * 4 + 2] = ONE;
                m[3 * 4 + 1] = ONE;
            }
        }
        m
    }
}

/// Up to two qubit indices, borrowed as a slice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Qubits {
    idx: [usize; 2],
    len: usize,
}

impl Qubits {
    fn one(q: usize) -> Self {
        Qubits { idx: [q, 0], len: 1 }
    }

    fn two(a: usize, b: usize) -> Self {
        Qubits { idx: [a, b], len: 2 }
    }
}

impl std::ops::Deref for Qubits {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.idx[..self.len]
    }
}
