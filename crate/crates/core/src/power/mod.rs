//! Swing-equation models of transient stability.
//!
//! Machines follow the classical model `d delta/dt = omega`,
//! `M d omega/dt = P_m - P_e(delta) - D omega`. The single-machine
//! infinite-bus (SMIB) case uses a transfer reactance per network phase;
//! the multi-machine case Kron-reduces a bus network onto the machines'
//! internal nodes, once per phase and fault location.

mod config;
mod network;
mod scenario;
mod simulate;
mod smib;

pub use config::{GridConfig, LineConfig, LoadConfig, MachineConfig, FaultConfig, ScenarioConfig, SmibConfig};
pub use network::{kron_reduce, BusNetwork};
pub use scenario::{
    critical_clearing_time, extract_features, feature_names, generate_dataset, Scenario, ScenarioDistribution,
};
pub use simulate::{label_stability, simulate, simulate_post_fault, MachineState, SimOptions, Trajectory};
pub use smib::{smib_energy_label, SmibEnergy};

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("invalid grid model: {0}")]
    InvalidModel(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no stable equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("instant {0} s lies outside the trajectory")]
    OutsideTrajectory(f64),
    #[error("{0} requires an SMIB model")]
    NotSmib(&'static str),
    #[error("all {n} generated samples have label {label}")]
    SingleClass { n: usize, label: u8 },
}

pub type Result<T> = std::result::Result<T, PowerError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GridKind {
    Smib,
    Multimachine,
}

/// Classical machine in system per-unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Machine {
    pub name: String,
    /// `M = 2H / omega_s`, s^2/rad.
    pub inertia: f64,
    pub damping: f64,
    pub p_mech: f64,
    pub emf: f64,
}

/// Electrical side of one network phase.
#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    /// `P_e = p_max sin(delta)` against an infinite bus at angle 0.
    Smib { p_max: f64 },
    /// Reduced admittance matrix between internal machine nodes.
    Reduced { y: DMatrix<Complex64> },
}

impl Network {
    /// Electrical power of every machine.
    pub fn electrical_power(&self, emf: &[f64], delta: &[f64], out: &mut [f64]) {
        match self {
            Network::Smib { p_max } => out[0] = p_max * delta[0].sin(),
            Network::Reduced { y } => {
                let m = emf.len();
                for i in 0..m {
                    let mut p = emf[i] * emf[i] * y[(i, i)].re;
                    for j in 0..m {
                        if j != i {
                            let (s, c) = (delta[i] - delta[j]).sin_cos();
                            let yij = y[(i, j)];
                            p += emf[i] * emf[j] * (yij.im * s + yij.re * c);
                        }
                    }
                    out[i] = p;
                }
            }
        }
    }

    /// Coupling term `E_i E_j (B_ij sin(delta_i - delta_j) + G_ij cos(...))`
    /// of machine `i`'s electrical power that comes from machine `j`.
    pub fn transfer_flow(&self, emf: &[f64], delta: &[f64], i: usize, j: usize) -> f64 {
        match self {
            Network::Smib { p_max } => p_max * delta[0].sin(),
            Network::Reduced { y } => {
                let (s, c) = (delta[i] - delta[j]).sin_cos();
                let yij = y[(i, j)];
                emf[i] * emf[j] * (yij.im * s + yij.re * c)
            }
        }
    }
}

/// A fault location: the fault-on network and the network after clearing.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultCase {
    pub name: String,
    pub fault_on: Network,
    pub post_fault: Network,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridModel {
    pub kind: GridKind,
    pub name: String,
    pub machines: Vec<Machine>,
    pub pre_fault: Network,
    pub faults: Vec<FaultCase>,
    /// Machine pairs whose transfer flow is part of the feature vector.
    pub flows: Vec<(usize, usize)>,
    /// Pre-fault stable equilibrium angles.
    pub sep: Vec<f64>,
    /// Out-of-step bound on pairwise angle separation, rad.
    pub out_of_step: f64,
    pub scenarios: ScenarioDistribution,
}

impl GridModel {
    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    pub fn emf(&self) -> Vec<f64> {
        self.machines.iter().map(|m| m.emf).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PowerError::InvalidModel(m));
        if self.machines.is_empty() {
            return bad("no machines".into());
        }
        for m in &self.machines {
            if !(m.inertia > 0.0) || !(m.damping >= 0.0) || !m.p_mech.is_finite() || !(m.emf > 0.0) {
                return bad(format!("machine {} needs M > 0, D >= 0, E > 0", m.name));
            }
        }
        let n = self.machines.len();
        let check = |net: &Network| match net {
            Network::Smib { p_max } => self.kind == GridKind::Smib && n == 1 && *p_max > 0.0,
            Network::Reduced { y } => self.kind == GridKind::Multimachine && y.nrows() == n && y.ncols() == n,
        };
        if !check(&self.pre_fault) || self.faults.iter().any(|f| !check(&f.fault_on) || !check(&f.post_fault)) {
            return bad("network kind or dimension does not match the machines".into());
        }
        if self.faults.is_empty() {
            return bad("no fault locations".into());
        }
        if self.sep.len() != n || self.flows.iter().any(|&(i, j)| i >= n || j >= n || i == j) {
            return bad("equilibrium or flow pairs inconsistent with the machines".into());
        }
        if !(self.out_of_step > 0.0) {
            return bad("out-of-step bound must be positive".into());
        }
        self.scenarios.validate(self.faults.len())
    }

    /// Bundled SMIB model.
    pub fn smib_default() -> Self {
        GridConfig::from_toml(include_str!("../../data/smib.toml")).and_then(|c| c.build()).expect("bundled SMIB config")
    }

    /// Bundled 4-machine two-area model.
    pub fn two_area_default() -> Self {
        GridConfig::from_toml(include_str!("../../data/two_area.toml"))
            .and_then(|c| c.build())
            .expect("bundled two-area config")
    }

    /// Reads and builds a TOML grid configuration.
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PowerError::Config(format!("{}: {e}", path.display())))?;
        GridConfig::from_toml(&text)?.build()
    }
}
