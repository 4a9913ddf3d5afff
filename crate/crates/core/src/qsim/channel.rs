use super::{Result, SimError};
use num_complex::Complex64;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// Completely positive trace-preserving map given by Kraus operators acting
/// on one or two qubits. Operators are row-major `2^k x 2^k` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    n_qubits: usize,
    ops: Vec<Vec<Complex64>>,
}

impl KrausChannel {
    /// Validates shapes and completeness `sum K^dag K = I` (within 1e-10).
    pub fn new(n_qubits: usize, ops: Vec<Vec<Complex64>>) -> Result<Self> {
        if !(1..=2).contains(&n_qubits) {
            return Err(SimError::ChannelArity { channel: n_qubits, given: n_qubits });
        }
        let dim = 1usize << n_qubits;
        for op in &ops {
            if op.len() != dim * dim {
                return Err(SimError::KrausDimension { expected: dim * dim, found: op.len() });
            }
        }
        let dev = completeness_deviation(dim, &ops);
        if ops.is_empty() || dev > 1e-10 {
            return Err(SimError::IncompleteKraus(if ops.is_empty() { 1.0 } else { dev }));
        }
        Ok(KrausChannel { n_qubits, ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[Vec<Complex64>] {
        &self.ops
    }

    /// Largest entry of `|sum K^dag K - I|`.
    pub fn completeness_deviation(&self) -> f64 {
        completeness_deviation(1 << self.n_qubits, &self.ops)
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        let mut id = vec![C0; dim * dim];
        for i in 0..dim {
            id[i * dim + i] = C1;
        }
        Self::new(n_qubits, vec![id])
    }

    /// `rho -> (1 - p) rho + p Tr(rho) I / 2` on one qubit.
    pub fn depolarizing(p: f64) -> Result<Self> {
        check_prob(p)?;
        let a = (1.0 - 0.75 * p).sqrt();
        let b = (0.25 * p).sqrt();
        let i = Complex64::new(0.0, 1.0);
        let ops = vec![
            vec![C1 * a, C0, C0, C1 * a],
            vec![C0, C1 * b, C1 * b, C0],
            vec![C0, -i * b, i * b, C0],
            vec![C1 * b, C0, C0, -C1 * b],
        ];
        Self::new(1, ops)
    }

    /// Energy relaxation `|1> -> |0>` with probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_prob(gamma)?;
        let ops = vec![
            vec![C1, C0, C0, C1 * (1.0 - gamma).sqrt()],
            vec![C0, C1 * gamma.sqrt(), C0, C0],
        ];
        Self::new(1, ops)
    }

    /// Pure dephasing scaling the off-diagonal entries by `sqrt(1 - lambda)`.
    pub fn phase_damping(lambda: f64) -> Result<Self> {
        check_prob(lambda)?;
        let ops = vec![
            vec![C1, C0, C0, C1 * (1.0 - lambda).sqrt()],
            vec![C0, C0, C0, C1 * lambda.sqrt()],
        ];
        Self::new(1, ops)
    }

    /// Sequential composition: `self` first, then `next`. Products that
    /// vanish identically are dropped.
    pub fn then(&self, next: &KrausChannel) -> Result<Self> {
        if self.n_qubits != next.n_qubits {
            return Err(SimError::ChannelArity { channel: self.n_qubits, given: next.n_qubits });
        }
        let dim = 1usize << self.n_qubits;
        let mut ops = Vec::with_capacity(self.ops.len() * next.ops.len());
        for b in &next.ops {
            for a in &self.ops {
                let op = matmul(dim, b, a);
                if op.iter().any(|z| z.norm_sqr() > 0.0) {
                    ops.push(op);
                }
            }
        }
        Self::new(self.n_qubits, ops)
    }
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::InvalidProbability(p))
    }
}

fn matmul(dim: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            out[r * dim + c] = (0..dim).map(|k| a[r * dim + k] * b[k * dim + c]).sum();
        }
    }
    out
}

fn completeness_deviation(dim: usize, ops: &[Vec<Complex64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for r in 0..dim {
        for c in 0..dim {
            let s: Complex64 = ops
                .iter()
                .map(|k| (0..dim).map(|j| k[j * dim + r].conj() * k[j * dim + c]).sum::<Complex64>())
                .sum();
            let target = if r == c { C1 } else { C0 };
            worst = worst.max((s - target).norm());
        }
    }
    worst
}
