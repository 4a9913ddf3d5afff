use super::config::{LineConfig, LoadConfig};
use super::{PowerError, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Bus-level network with machines attached through transient reactances.
#[derive(Clone, Debug, PartialEq)]
pub struct BusNetwork {
    lines: Vec<LineConfig>,
    loads: Vec<LoadConfig>,
    /// `(terminal bus, transient reactance)` per machine.
    gens: Vec<(usize, f64)>,
}

impl BusNetwork {
    pub fn new(lines: Vec<LineConfig>, loads: Vec<LoadConfig>, gens: Vec<(usize, f64)>) -> Result<Self> {
        for l in &lines {
            if l.from == l.to || (l.r == 0.0 && l.x == 0.0) {
                return Err(PowerError::Config(format!("line {} is degenerate", l.id)));
            }
            if lines.iter().filter(|o| o.id == l.id).count() > 1 {
                return Err(PowerError::Config(format!("duplicate line id {}", l.id)));
            }
        }
        let net = BusNetwork { lines, loads, gens };
        let buses = net.buses();
        for b in net.loads.iter().map(|l| l.bus).chain(net.gens.iter().map(|g| g.0)) {
            if !buses.contains_key(&b) {
                return Err(PowerError::Config(format!("bus {b} is not connected to any line")));
            }
        }
        Ok(net)
    }

    /// Bus id -> dense index.
    fn buses(&self) -> BTreeMap<usize, usize> {
        let mut ids: Vec<usize> = self.lines.iter().flat_map(|l| [l.from, l.to]).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter().enumerate().map(|(i, b)| (b, i)).collect()
    }

    /// Admittance matrix reduced onto the internal machine nodes, with
    /// `grounded` shorted to ground and the `tripped` lines open.
    pub fn reduced(&self, grounded: Option<usize>, tripped: &[String]) -> Result<DMatrix<Complex64>> {
        for t in tripped {
            if !self.lines.iter().any(|l| &l.id == t) {
                return Err(PowerError::Config(format!("unknown line `{t}`")));
            }
        }
        let buses = self.buses();
        if let Some(g) = grounded {
            if !buses.contains_key(&g) {
                return Err(PowerError::Config(format!("fault bus {g} does not exist")));
            }
        }
        let m = self.gens.len();
        let n = m + buses.len();
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        let node = |bus: usize| m + buses[&bus];
        let mut add_branch = |a: usize, b: usize, ys: Complex64, half_shunt: Complex64| {
            y[(a, a)] += ys + half_shunt;
            y[(b, b)] += ys + half_shunt;
            y[(a, b)] -= ys;
            y[(b, a)] -= ys;
        };
        for l in self.lines.iter().filter(|l| !tripped.contains(&l.id)) {
            let ys = Complex64::new(1.0, 0.0) / Complex64::new(l.r, l.x);
            add_branch(node(l.from), node(l.to), ys, Complex64::new(0.0, l.b / 2.0));
        }
        for (i, &(bus, x)) in self.gens.iter().enumerate() {
            add_branch(i, node(bus), Complex64::new(0.0, -1.0 / x), Complex64::new(0.0, 0.0));
        }
        for load in &self.loads {
            let k = node(load.bus);
            y[(k, k)] += Complex64::new(load.p, -load.q);
        }
        if let Some(g) = grounded {
            y = y.remove_row(node(g)).remove_column(node(g));
        }
        kron_reduce(&y, m)
    }
}

/// Eliminates every node after the first `keep`:
/// `Y_red = Y_kk - Y_ke Y_ee^-1 Y_ek`.
pub fn kron_reduce(y: &DMatrix<Complex64>, keep: usize) -> Result<DMatrix<Complex64>> {
    let n = y.nrows();
    if y.ncols() != n || keep == 0 || keep > n {
        return Err(PowerError::InvalidModel("kron reduction needs a square matrix and 0 < keep <= n".into()));
    }
    if keep == n {
        return Ok(y.clone());
    }
    let e = n - keep;
    let ykk = y.view((0, 0), (keep, keep));
    let yke = y.view((0, keep), (keep, e));
    let yek = y.view((keep, 0), (e, keep)).clone_owned();
    let yee = y.view((keep, keep), (e, e)).clone_owned();
    let x = yee
        .lu()
        .solve(&yek)
        .ok_or_else(|| PowerError::InvalidModel("eliminated network block is singular".into()))?;
    Ok(ykk - yke * x)
}

/// Rotor angles where every machine except the first is in power balance,
/// with the first machine's angle fixed at 0.
pub(crate) fn newton_equilibrium(y: &DMatrix<Complex64>, emf: &[f64], p_mech: &[f64]) -> Result<Vec<f64>> {
    let m = emf.len();
    let mut delta = vec![0.0; m];
    let pe = |delta: &[f64], i: usize| -> f64 {
        let mut p = emf[i] * emf[i] * y[(i, i)].re;
        for j in (0..m).filter(|&j| j != i) {
            let (s, c) = (delta[i] - delta[j]).sin_cos();
            p += emf[i] * emf[j] * (y[(i, j)].im * s + y[(i, j)].re * c);
        }
        p
    };
    for _ in 0..100 {
        let r = DVector::from_iterator(m - 1, (1..m).map(|i| p_mech[i] - pe(&delta, i)));
        if r.amax() < 1e-12 {
            return Ok(delta);
        }
        let mut jac = DMatrix::<f64>::zeros(m - 1, m - 1);
        for i in 1..m {
            for k in 1..m {
                jac[(i - 1, k - 1)] = if i == k {
                    (0..m)
                        .filter(|&j| j != i)
                        .map(|j| {
                            let (s, c) = (delta[i] - delta[j]).sin_cos();
                            emf[i] * emf[j] * (y[(i, j)].im * c - y[(i, j)].re * s)
                        })
                        .sum()
                } else {
                    let (s, c) = (delta[i] - delta[k]).sin_cos();
                    emf[i] * emf[k] * (-y[(i, k)].im * c + y[(i, k)].re * s)
                };
            }
        }
        // r = P_m - P_e, so the Newton step solves J dx = r
        let dx = jac.lu().solve(&r).ok_or_else(|| PowerError::NoEquilibrium("singular load-flow jacobian".into()))?;
        for i in 1..m {
            delta[i] += dx[i - 1];
        }
        if delta.iter().any(|d| !d.is_finite() || d.abs() > 10.0) {
            break;
        }
    }
    Err(PowerError::NoEquilibrium("Newton iteration did not converge".into()))
}
