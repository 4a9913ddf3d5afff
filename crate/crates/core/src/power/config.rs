use super::network::{newton_equilibrium, BusNetwork};
use super::{FaultCase, GridKind, GridModel, Machine, Network, PowerError, Result, ScenarioDistribution};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// TOML description of a grid model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub kind: GridKind,
    pub name: String,
    /// Out-of-step bound, rad.
    #[serde(default = "default_out_of_step")]
    pub out_of_step: f64,
    pub machines: Vec<MachineConfig>,
    #[serde(default)]
    pub smib: Option<SmibConfig>,
    #[serde(default)]
    pub lines: Vec<LineConfig>,
    #[serde(default)]
    pub loads: Vec<LoadConfig>,
    #[serde(default)]
    pub faults: Vec<FaultConfig>,
    /// Machine-name pairs whose transfer flow becomes a feature.
    #[serde(default)]
    pub flows: Vec<[String; 2]>,
    pub scenarios: ScenarioConfig,
}

fn default_out_of_step() -> f64 {
    PI
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineConfig {
    pub name: String,
    pub inertia: f64,
    pub damping: f64,
    /// Omitted for the multi-machine slack (first) machine.
    #[serde(default)]
    pub p_mech: Option<f64>,
    pub emf: f64,
    /// Terminal bus (multi-machine only).
    #[serde(default)]
    pub bus: Option<usize>,
    /// Transient reactance to the terminal bus (multi-machine only).
    #[serde(default)]
    pub x_transient: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmibConfig {
    pub v_bus: f64,
    pub x_pre: f64,
    pub x_fault: f64,
    pub x_post: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub id: String,
    pub from: usize,
    pub to: usize,
    #[serde(default)]
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance.
    #[serde(default)]
    pub b: f64,
}

/// Constant-impedance load sized at 1 pu voltage; `q` includes shunt
/// compensation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadConfig {
    pub bus: usize,
    pub p: f64,
    pub q: f64,
}

/// A solid three-phase fault at `bus`, cleared by opening the `trip`
/// lines. SMIB faults only carry a name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub name: String,
    #[serde(default)]
    pub bus: Option<usize>,
    #[serde(default)]
    pub trip: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub fault_start: f64,
    pub clearing_time: [f64; 2],
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    /// Absolute rotor-angle box for the initial state (machine 1 for
    /// multi-machine models); the pre-fault equilibrium when omitted.
    #[serde(default)]
    pub initial_delta: Option<[f64; 2]>,
    #[serde(default)]
    pub initial_omega: Option<[f64; 2]>,
}

fn default_horizon() -> f64 {
    10.0
}

fn default_step() -> f64 {
    1e-3
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PowerError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("grid config serializes")
    }

    pub fn build(&self) -> Result<GridModel> {
        let s = &self.scenarios;
        let scenarios = ScenarioDistribution {
            fault_start: s.fault_start,
            clearing_time: (s.clearing_time[0], s.clearing_time[1]),
            horizon: s.horizon,
            step: s.step,
            initial_delta: s.initial_delta.map(|[a, b]| (a, b)),
            initial_omega: s.initial_omega.map(|[a, b]| (a, b)),
        };
        let model = match self.kind {
            GridKind::Smib => self.build_smib(scenarios)?,
            GridKind::Multimachine => self.build_multi(scenarios)?,
        };
        model.validate()?;
        Ok(model)
    }

    fn build_smib(&self, scenarios: ScenarioDistribution) -> Result<GridModel> {
        let cfg = || PowerError::Config("SMIB models need one machine with p_mech and an [smib] table".into());
        let [mc] = self.machines.as_slice() else { return Err(cfg()) };
        let net = self.smib.as_ref().ok_or_else(cfg)?;
        let p_mech = mc.p_mech.ok_or_else(cfg)?;
        let p_max = |x: f64| -> Result<f64> {
            if x > 0.0 {
                Ok(mc.emf * net.v_bus / x)
            } else {
                Err(PowerError::Config(format!("reactance {x} must be positive")))
            }
        };
        let (pre, fault, post) = (p_max(net.x_pre)?, p_max(net.x_fault)?, p_max(net.x_post)?);
        if p_mech.abs() >= pre {
            return Err(PowerError::NoEquilibrium(format!("P_m = {p_mech} >= P_max = {pre}")));
        }
        let names: Vec<String> =
            if self.faults.is_empty() { vec!["line".into()] } else { self.faults.iter().map(|f| f.name.clone()).collect() };
        Ok(GridModel {
            kind: GridKind::Smib,
            name: self.name.clone(),
            machines: vec![Machine {
                name: mc.name.clone(),
                inertia: mc.inertia,
                damping: mc.damping,
                p_mech,
                emf: mc.emf,
            }],
            pre_fault: Network::Smib { p_max: pre },
            faults: names
                .into_iter()
                .map(|name| FaultCase {
                    name,
                    fault_on: Network::Smib { p_max: fault },
                    post_fault: Network::Smib { p_max: post },
                })
                .collect(),
            flows: Vec::new(),
            sep: vec![(p_mech / pre).asin()],
            out_of_step: self.out_of_step,
            scenarios,
        })
    }

    fn build_multi(&self, scenarios: ScenarioDistribution) -> Result<GridModel> {
        let mut gens = Vec::with_capacity(self.machines.len());
        for m in &self.machines {
            match (m.bus, m.x_transient) {
                (Some(bus), Some(x)) if x > 0.0 => gens.push((bus, x)),
                _ => return Err(PowerError::Config(format!("machine {} needs a bus and x_transient > 0", m.name))),
            }
        }
        if self.machines.len() < 2 {
            return Err(PowerError::Config("multi-machine models need at least two machines".into()));
        }
        let network = BusNetwork::new(self.lines.clone(), self.loads.clone(), gens)?;
        let pre = network.reduced(None, &[])?;
        let mut faults = Vec::with_capacity(self.faults.len());
        for f in &self.faults {
            let bus = f.bus.ok_or_else(|| PowerError::Config(format!("fault {} needs a bus", f.name)))?;
            faults.push(FaultCase {
                name: f.name.clone(),
                fault_on: Network::Reduced { y: network.reduced(Some(bus), &[])? },
                post_fault: Network::Reduced { y: network.reduced(None, &f.trip)? },
            });
        }
        let emf: Vec<f64> = self.machines.iter().map(|m| m.emf).collect();
        let mut p_mech = Vec::with_capacity(emf.len());
        for (i, m) in self.machines.iter().enumerate() {
            match (i, m.p_mech) {
                (0, _) => p_mech.push(0.0),
                (_, Some(p)) => p_mech.push(p),
                (_, None) => return Err(PowerError::Config(format!("machine {} needs p_mech", m.name))),
            }
        }
        let sep = newton_equilibrium(&pre, &emf, &p_mech)?;
        let mut pe = vec![0.0; emf.len()];
        let pre_net = Network::Reduced { y: pre };
        pre_net.electrical_power(&emf, &sep, &mut pe);
        let machines = self
            .machines
            .iter()
            .enumerate()
            .map(|(i, m)| Machine {
                name: m.name.clone(),
                inertia: m.inertia,
                damping: m.damping,
                // the first machine balances the network at the equilibrium
                p_mech: if i == 0 { pe[0] } else { p_mech[i] },
                emf: m.emf,
            })
            .collect::<Vec<_>>();
        let index = |name: &str| {
            machines
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| PowerError::Config(format!("unknown machine `{name}` in flows")))
        };
        let flows = self.flows.iter().map(|[a, b]| Ok((index(a)?, index(b)?))).collect::<Result<Vec<_>>>()?;
        Ok(GridModel {
            kind: GridKind::Multimachine,
            name: self.name.clone(),
            machines,
            pre_fault: pre_net,
            faults,
            flows,
            sep,
            out_of_step: self.out_of_step,
            scenarios,
        })
    }
}
