//! Exact simulation of small qubit registers.
//!
//! Pure states are dense amplitude vectors, mixed states dense density
//! matrices. Registers are limited to [`MAX_QUBITS`] qubits, so every
//! operation works on at most 16 amplitudes (or a 16 x 16 matrix).
//!
//! Basis ordering is little-endian: qubit `q` is bit `q` of the basis index.

mod channel;
mod density;
mod gate;
mod state;

pub use channel::KrausChannel;
pub use density::DensityMatrix;
pub use gate::{Gate, GateKind, Qubits};
pub use state::{BlochVector, MeasurementCounts, StateVector};

use num_complex::Complex64;
use thiserror::Error;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unsupported register size {0} (supported: 1..={MAX_QUBITS})")]
    UnsupportedQubitCount(usize),
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    InvalidQubit { qubit: usize, n_qubits: usize },
    #[error("two-qubit gate needs distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("register size mismatch: {0} vs {1} qubits")]
    RegisterMismatch(usize, usize),
    #[error("amplitude vector of length {0} is not 2^n for a supported n")]
    BadLength(usize),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("Kraus operators violate completeness (max deviation {0:e})")]
    IncompleteKraus(f64),
    #[error("Kraus operator has {found} entries, expected {expected}")]
    KrausDimension { expected: usize, found: usize },
    #[error("channel acts on {channel} qubits but {given} were given")]
    ChannelArity { channel: usize, given: usize },
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn check_register(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(SimError::UnsupportedQubitCount(n_qubits))
    }
}

pub(crate) fn check_qubits(qubits: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(SimError::InvalidQubit { qubit: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(SimError::DuplicateQubit(q));
        }
    }
    Ok(())
}

/// Applies a `2^k x 2^k` row-major operator to the listed qubits of `amps`
/// (`amps` has stride 1). Local index bit `j` corresponds to `qubits[j]`.
/// Supports `k <= 2`.
pub(crate) fn apply_local(amps: &mut [Complex64], op: &[Complex64], qubits: &[usize]) {
    let k = qubits.len();
    debug_assert!(k == 1 || k == 2);
    let local = 1usize << k;
    let mask: usize = qubits.iter().map(|&q| 1usize << q).sum();
    let mut offsets = [0usize; 4];
    for (l, off) in offsets.iter_mut().enumerate().take(local) {
        *off = qubits
            .iter()
            .enumerate()
            .filter(|(j, _)| l >> j & 1 == 1)
            .map(|(_, &q)| 1usize << q)
            .sum();
    }
    let mut buf = [Complex64::new(0.0, 0.0); 4];
    for base in (0..amps.len()).filter(|b| b & mask == 0) {
        for l in 0..local {
            buf[l] = amps[base | offsets[l]];
        }
        for r in 0..local {
            let row = &op[r * local..(r + 1) * local];
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..local {
                acc += row[c] * buf[c];
            }
            amps[base | offsets[r]] = acc;
        }
    }
}
