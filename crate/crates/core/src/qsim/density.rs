use super::{apply_local, check_qubits, check_register, BlochVector, Gate, KrausChannel, Result, SimError, StateVector};
use num_complex::Complex64;

/// Mixed state of an `n`-qubit register, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Ok(Self::from_pure(&StateVector::zero_state(n_qubits)?))
    }

    /// `|psi><psi|`.
    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        let dim = a.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                data.push(a[r] * a[c].conj());
            }
        }
        DensityMatrix { n_qubits: psi.n_qubits(), data }
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(DensityMatrix { n_qubits, data })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i]).sum()
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.data[r * d + c] - self.data[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// `U rho U^dag` for a gate of the simulator alphabet.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.conjugate(&gate.matrix()[..1 << (2 * gate.qubits().len())], &gate.qubits());
        Ok(())
    }

    /// `rho -> sum_k K rho K^dag` with the channel acting on `qubits`.
    pub fn apply_kraus(&mut self, channel: &KrausChannel, qubits: &[usize]) -> Result<()> {
        if channel.n_qubits() != qubits.len() {
            return Err(SimError::ChannelArity { channel: channel.n_qubits(), given: qubits.len() });
        }
        check_qubits(qubits, self.n_qubits)?;
        let mut acc = vec![Complex64::new(0.0, 0.0); self.data.len()];
        for op in channel.ops() {
            let mut term = self.clone();
            term.conjugate(op, qubits);
            for (a, t) in acc.iter_mut().zip(&term.data) {
                *a += t;
            }
        }
        self.data = acc;
        Ok(())
    }

    /// In-place `K rho K^dag`.
    fn conjugate(&mut self, op: &[Complex64], qubits: &[usize]) {
        let d = self.dim();
        let conj_op: Vec<Complex64> = op.iter().map(|z| z.conj()).collect();
        // rows of X times K^dag == conj(K) applied to each row vector
        for row in self.data.chunks_mut(d) {
            apply_local(row, &conj_op, qubits);
        }
        self.adjoint_in_place();
        for row in self.data.chunks_mut(d) {
            apply_local(row, &conj_op, qubits);
        }
        self.adjoint_in_place();
    }

    fn adjoint_in_place(&mut self) {
        let d = self.dim();
        for r in 0..d {
            self.data[r * d + r] = self.data[r * d + r].conj();
            for c in r + 1..d {
                let a = self.data[r * d + c];
                self.data[r * d + c] = self.data[c * d + r].conj();
                self.data[c * d + r] = a.conj();
            }
        }
    }

    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        check_qubits(&[qubit], self.n_qubits)?;
        let d = self.dim();
        let bit = 1usize << qubit;
        let p: f64 = (0..d).filter(|i| i & bit != 0).map(|i| self.data[i * d + i].re).sum();
        Ok(p.clamp(0.0, 1.0))
    }

    pub fn reduced_bloch(&self, qubit: usize) -> Result<BlochVector> {
        check_qubits(&[qubit], self.n_qubits)?;
        let d = self.dim();
        let bit = 1usize << qubit;
        let (mut r00, mut r11, mut r10) = (0.0, 0.0, Complex64::new(0.0, 0.0));
        for i0 in (0..d).filter(|i| i & bit == 0) {
            let i1 = i0 | bit;
            r00 += self.data[i0 * d + i0].re;
            r11 += self.data[i1 * d + i1].re;
            r10 += self.data[i1 * d + i0];
        }
        Ok(BlochVector { x: 2.0 * r10.re, y: 2.0 * r10.im, z: r00 - r11 })
    }

    /// `|1><1|` on `qubit` (identity elsewhere). Not a state: its trace is
    /// `dim / 2`. Evolving it with inverse gates gives Heisenberg-picture
    /// observables.
    pub fn projector_one(n_qubits: usize, qubit: usize) -> Result<Self> {
        check_register(n_qubits)?;
        check_qubits(&[qubit], n_qubits)?;
        let dim = 1usize << n_qubits;
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in (0..dim).filter(|i| i >> qubit & 1 == 1) {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(DensityMatrix { n_qubits, data })
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> Result<f64> {
        self.expectation(psi)
    }

    /// `Re <psi| A |psi>` with `A` this matrix.
    pub fn expectation(&self, psi: &StateVector) -> Result<f64> {
        if psi.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch(self.n_qubits, psi.n_qubits()));
        }
        let a = psi.amplitudes();
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += a[r].conj() * self.data[r * d + c] * a[c];
            }
        }
        Ok(acc.re)
    }

    /// `Tr(self * other)`, real for Hermitian arguments.
    pub fn overlap(&self, other: &DensityMatrix) -> Result<f64> {
        if other.n_qubits != self.n_qubits {
            return Err(SimError::RegisterMismatch(self.n_qubits, other.n_qubits));
        }
        let d = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..d {
            for c in 0..d {
                acc += self.data[r * d + c] * other.data[c * d + r];
            }
        }
        Ok(acc.re)
    }

    /// Convex mixture `sum w_i rho_i` of equally sized states; weights are
    /// used as given.
    pub fn mixture<'a>(parts: impl IntoIterator<Item = (f64, &'a DensityMatrix)>) -> Option<DensityMatrix> {
        let mut out: Option<DensityMatrix> = None;
        for (w, rho) in parts {
            match out.as_mut() {
                None => {
                    let mut first = rho.clone();
                    first.data.iter_mut().for_each(|z| *z *= w);
                    out = Some(first);
                }
                Some(acc) => {
                    if acc.n_qubits != rho.n_qubits {
                        return None;
                    }
                    for (a, b) in acc.data.iter_mut().zip(&rho.data) {
                        *a += b * w;
                    }
                }
            }
        }
        out
    }
}
