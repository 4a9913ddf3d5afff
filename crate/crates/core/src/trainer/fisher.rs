use super::gradient::forward_states;
use super::{Result, TrainError};
use crate::circuit::{CircuitSpec, FeatureVector, Segment};
use crate::qsim::StateVector;
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{FRAC_PI_2, PI};

/// One diagonal block, covering parameters `start..start + matrix.nrows()`.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherBlock {
    pub start: usize,
    pub matrix: DMatrix<f64>,
}

/// Block-diagonal Fisher information; entries between blocks are zero by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFisher {
    dim: usize,
    blocks: Vec<FisherBlock>,
}

impl BlockFisher {
    /// Blocks must be square, in order, non-overlapping and inside `dim`.
    pub fn from_blocks(dim: usize, blocks: Vec<FisherBlock>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if !b.matrix.is_square() || b.start < next || b.start + b.matrix.nrows() > dim {
                return Err(TrainError::Shape("fisher blocks must be square, ordered and in range".into()));
            }
            next = b.start + b.matrix.nrows();
        }
        Ok(BlockFisher { dim, blocks })
    }

    /// Identity with one block per layout segment.
    pub fn identity(layout: &[Segment]) -> Self {
        let blocks: Vec<FisherBlock> = layout
            .iter()
            .map(|s| FisherBlock { start: s.start, matrix: DMatrix::identity(s.len, s.len) })
            .collect();
        BlockFisher { dim: layout.iter().map(|s| s.len).sum(), blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[FisherBlock] {
        &self.blocks
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for b in &self.blocks {
            let n = b.matrix.nrows();
            m.view_mut((b.start, b.start), (n, n)).copy_from(&b.matrix);
        }
        m
    }

    /// `(F + lambda I)^-1 grad`, block by block. Coordinates outside every
    /// block see `F = 0`. With `lambda = 0` a rank-deficient block is an
    /// error.
    pub fn solve(&self, grad: &[f64], lambda: f64) -> Result<Vec<f64>> {
        if grad.len() != self.dim {
            return Err(TrainError::Shape(format!("gradient has {} entries, fisher is {}", grad.len(), self.dim)));
        }
        if !(lambda >= 0.0) {
            return Err(TrainError::Config(format!("fisher damping {lambda} must be >= 0")));
        }
        let mut out: Vec<f64> = if lambda > 0.0 {
            grad.iter().map(|g| g / lambda).collect()
        } else {
            grad.to_vec()
        };
        let mut covered = vec![false; self.dim];
        for b in &self.blocks {
            let n = b.matrix.nrows();
            let damped = &b.matrix + DMatrix::identity(n, n) * lambda;
            if lambda == 0.0 {
                let eig = damped.clone().symmetric_eigen();
                let top = eig.eigenvalues.amax().max(1.0);
                if eig.eigenvalues.min() <= 1e-12 * top {
                    return Err(TrainError::SingularFisher { start: b.start });
                }
            }
            let chol = damped.cholesky().ok_or(TrainError::SingularFisher { start: b.start })?;
            let rhs = DVector::from_column_slice(&grad[b.start..b.start + n]);
            let x = chol.solve(&rhs);
            out[b.start..b.start + n].copy_from_slice(x.as_slice());
            covered[b.start..b.start + n].iter_mut().for_each(|c| *c = true);
        }
        if lambda == 0.0 && covered.iter().any(|c| !c) {
            return Err(TrainError::SingularFisher { start: covered.iter().position(|c| !c).unwrap_or(0) });
        }
        Ok(out)
    }
}

/// Quantum Fisher information `4 Re g` (Fubini-Study metric `g`) in the
/// block-diagonal approximation, one block per layout segment.
///
/// Metric entries come from fidelity second differences with respect to the
/// rotation angles of the block: `g_aa = (1 - f(pi e_a)) / 4` and
/// `g_ab = -[f(++) - f(+-) - f(-+) + f(--)] / 8` with `pi/2` shifts, where
/// `f` is the fidelity to the unshifted state. Angle-space entries are then
/// pulled back to parameters through the chain-rule factors of each angle.
pub fn fisher_matrix(spec: &CircuitSpec, params: &[f64], features: &FeatureVector) -> Result<BlockFisher> {
    let rc = spec.tape()?.resolve(params, features)?;
    let states = forward_states(&rc)?;
    let gates = rc.gates();
    let layout = spec.layout();
    let mut blocks = Vec::with_capacity(layout.len());
    for (s, seg) in layout.iter().enumerate() {
        let members: Vec<usize> =
            (0..gates.len()).filter(|&i| rc.segment(i) == Some(s) && !rc.partials(i).is_empty()).collect();
        let mut matrix = DMatrix::zeros(seg.len, seg.len);
        if let (Some(&first), Some(&last)) = (members.first(), members.last()) {
            let reference = &states[last + 1];
            // gates after the block act identically on both states, so the
            // fidelity only needs the block itself
            let fid = |shifts: &[(usize, f64)]| -> Result<f64> {
                let mut psi: StateVector = states[first].clone();
                for (i, g) in gates.iter().enumerate().take(last + 1).skip(first) {
                    let d: f64 = shifts.iter().filter(|(j, _)| *j == i).map(|(_, d)| d).sum();
                    psi.apply_gate(&if d != 0.0 { g.shifted(d) } else { *g })?;
                }
                Ok(reference.fidelity(&psi)?)
            };
            let na = members.len();
            let mut metric = DMatrix::<f64>::zeros(na, na);
            for (a, &ia) in members.iter().enumerate() {
                metric[(a, a)] = 0.25 * (1.0 - fid(&[(ia, PI)])?);
                for (b, &ib) in members.iter().enumerate().skip(a + 1) {
                    let h = FRAC_PI_2;
                    let v = -0.125
                        * (fid(&[(ia, h), (ib, h)])? - fid(&[(ia, h), (ib, -h)])? - fid(&[(ia, -h), (ib, h)])?
                            + fid(&[(ia, -h), (ib, -h)])?);
                    metric[(a, b)] = v;
                    metric[(b, a)] = v;
                }
            }
            let mut jac = DMatrix::<f64>::zeros(na, seg.len);
            for (a, &ia) in members.iter().enumerate() {
                for (k, factor) in rc.partials(ia).iter() {
                    if k < seg.start || k >= seg.start + seg.len {
                        return Err(TrainError::Shape(format!("gate {ia} depends on parameter {k} outside its block")));
                    }
                    jac[(a, k - seg.start)] += factor;
                }
            }
            let f = jac.transpose() * (metric * 4.0) * jac;
            matrix = (&f + f.transpose()) * 0.5;
        }
        blocks.push(FisherBlock { start: seg.start, matrix });
    }
    BlockFisher::from_blocks(spec.param_count(), blocks)
}
