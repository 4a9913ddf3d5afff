use super::{apply_local, check_qubits, check_register, Gate, Result, SimError};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Pure state of an `n`-qubit register.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// Polar and azimuthal angles `(theta, phi)` of the direction.
    pub fn angles(&self) -> (f64, f64) {
        let r = self.norm();
        if r == 0.0 {
            return (0.0, 0.0);
        }
        ((self.z / r).clamp(-1.0, 1.0).acos(), self.y.atan2(self.x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementCounts {
    pub zeros: u64,
    pub ones: u64,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Computational basis state with the given index.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero_state(n_qubits)?;
        if index >= s.amps.len() {
            return Err(SimError::BadLength(index));
        }
        s.amps[0] = Complex64::new(0.0, 0.0);
        s.amps[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Builds a state from raw amplitudes, which must already be normalized
    /// to within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(SimError::BadLength(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_register(n_qubits)?;
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SimError::NotNormalized(norm));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        apply_local(&mut self.amps, &gate.matrix(), &gate.qubits());
        Ok(())
    }

    pub fn apply_all<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        check_qubits(&[qubit], self.n_qubits)
    }

    /// Probability of reading `|1>` on `qubit` in the computational basis.
    pub fn prob_one(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let p: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(p.clamp(0.0, 1.0))
    }

    /// Simulates `shots` independent Z-basis readouts of `qubit`.
    pub fn sample_measurements(&self, qubit: usize, shots: u64, seed: u64) -> Result<MeasurementCounts> {
        if shots == 0 {
            return Err(SimError::ZeroShots);
        }
        let p = self.prob_one(qubit)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ones = Binomial::new(shots, p)
            .map_err(|_| SimError::InvalidProbability(p))?
            .sample(&mut rng);
        Ok(MeasurementCounts { zeros: shots - ones, ones })
    }

    /// Single-qubit marginal `[[r00, r01], [r10, r11]]` of `qubit`.
    pub fn reduced_density(&self, qubit: usize) -> Result<[Complex64; 4]> {
        self.check_qubit(qubit)?;
        let bit = 1usize << qubit;
        let mut rho = [Complex64::new(0.0, 0.0); 4];
        for i0 in (0..self.amps.len()).filter(|i| i & bit == 0) {
            let a0 = self.amps[i0];
            let a1 = self.amps[i0 | bit];
            rho[0] += a0 * a0.conj();
            rho[1] += a0 * a1.conj();
            rho[2] += a1 * a0.conj();
            rho[3] += a1 * a1.conj();
        }
        Ok(rho)
    }

    pub fn reduced_bloch(&self, qubit: usize) -> Result<BlochVector> {
        let rho = self.reduced_density(qubit)?;
        Ok(BlochVector { x: 2.0 * rho[1].re, y: 2.0 * rho[2].im, z: rho[0].re - rho[3].re })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(SimError::RegisterMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }
}
