use super::{GridKind, GridModel, Network, PowerError, Result, Scenario};

/// Rotor angles (rad) and speed deviations (rad/s), one entry per machine.
#[derive(Clone, Debug, PartialEq)]
pub struct MachineState {
    pub delta: Vec<f64>,
    pub omega: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimOptions {
    pub step: f64,
    /// Stop integrating once the post-clearing window shows loss of
    /// synchronism; the label is settled at that point.
    pub halt_on_out_of_step: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { step: 1e-3, halt_on_out_of_step: false }
    }
}

/// Fixed-step states `t_k = k * step`, plus what labeling needs: the
/// reference angles, the bound, and the first step of the labeled window.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    step: f64,
    n_machines: usize,
    delta: Vec<f64>,
    omega: Vec<f64>,
    reference: Vec<f64>,
    bound: f64,
    window_start: usize,
    clearing_index: Option<usize>,
    diverged: bool,
    halted: bool,
}

impl Trajectory {
    /// Builds a trajectory from explicit samples; used for constructed
    /// test cases and external data.
    pub fn from_samples(
        step: f64,
        states: &[MachineState],
        reference: Vec<f64>,
        bound: f64,
        diverged: bool,
    ) -> Result<Self> {
        let n_machines = reference.len();
        if states.iter().any(|s| s.delta.len() != n_machines || s.omega.len() != n_machines) || !(step > 0.0) {
            return Err(PowerError::InvalidModel("trajectory samples inconsistent with reference".into()));
        }
        Ok(Trajectory {
            step,
            n_machines,
            delta: states.iter().flat_map(|s| s.delta.iter().copied()).collect(),
            omega: states.iter().flat_map(|s| s.omega.iter().copied()).collect(),
            reference,
            bound,
            window_start: 0,
            clearing_index: None,
            diverged,
            halted: false,
        })
    }

    pub fn len(&self) -> usize {
        self.delta.len().checked_div(self.n_machines).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    pub fn delta(&self, k: usize) -> &[f64] {
        &self.delta[k * self.n_machines..(k + 1) * self.n_machines]
    }

    pub fn omega(&self, k: usize) -> &[f64] {
        &self.omega[k * self.n_machines..(k + 1) * self.n_machines]
    }

    pub fn state(&self, k: usize) -> MachineState {
        MachineState { delta: self.delta(k).to_vec(), omega: self.omega(k).to_vec() }
    }

    /// Index of the sample at `time`, if it lies on the grid within half a step.
    pub fn index_at(&self, time: f64) -> Result<usize> {
        let k = (time / self.step).round();
        if !(k >= 0.0) || k as usize >= self.len() {
            return Err(PowerError::OutsideTrajectory(time));
        }
        Ok(k as usize)
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn window_start(&self) -> usize {
        self.window_start
    }

    pub fn clearing_index(&self) -> Option<usize> {
        self.clearing_index
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Integration stopped early on loss of synchronism.
    pub fn halted(&self) -> bool {
        self.halted
    }

    /// Largest pairwise separation from the reference at sample `k`; for a
    /// single machine the partner is the infinite bus.
    pub fn separation(&self, k: usize) -> f64 {
        separation(self.delta(k), &self.reference)
    }
}

fn separation(delta: &[f64], reference: &[f64]) -> f64 {
    let n = delta.len();
    if n == 1 {
        return (delta[0] - reference[0]).abs();
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max(((delta[i] - delta[j]) - (reference[i] - reference[j])).abs());
        }
    }
    worst
}

/// 1 (stable) unless the trajectory diverged or some pairwise angle
/// separation, measured from the reference, exceeds the out-of-step bound
/// inside the labeled window.
pub fn label_stability(traj: &Trajectory) -> Result<u8> {
    if traj.is_empty() {
        return Err(PowerError::EmptyTrajectory);
    }
    if traj.diverged || traj.halted {
        return Ok(0);
    }
    let out = (traj.window_start..traj.len()).any(|k| traj.separation(k) > traj.bound);
    Ok((!out) as u8)
}

/// Angles the out-of-step test measures from: the post-fault equilibrium
/// for SMIB (or the pre-fault one without a fault), the pre-fault
/// equilibrium for multi-machine models.
pub(crate) fn label_reference(model: &GridModel, fault: Option<usize>) -> Vec<f64> {
    match (model.kind, fault.map(|f| &model.faults[f].post_fault)) {
        (GridKind::Smib, Some(Network::Smib { p_max })) => {
            let p = model.machines[0].p_mech;
            if p.abs() < *p_max {
                vec![(p / p_max).asin()]
            } else {
                // no post-fault equilibrium: every trajectory slips
                vec![model.sep[0]]
            }
        }
        _ => model.sep.clone(),
    }
}

struct Rhs<'a> {
    inv_m: Vec<f64>,
    damping: Vec<f64>,
    p_mech: Vec<f64>,
    emf: Vec<f64>,
    pe: Vec<f64>,
    net: &'a Network,
}

impl Rhs<'_> {
    fn eval(&mut self, delta: &[f64], omega: &[f64], d_delta: &mut [f64], d_omega: &mut [f64]) {
        self.net.electrical_power(&self.emf, delta, &mut self.pe);
        for i in 0..delta.len() {
            d_delta[i] = omega[i];
            d_omega[i] = (self.p_mech[i] - self.pe[i] - self.damping[i] * omega[i]) * self.inv_m[i];
        }
    }
}

/// Fixed-step RK4 through the scenario's network phases. Phase switches
/// are placed on the nearest grid instant.
pub fn simulate(
    model: &GridModel,
    scenario: &Scenario,
    initial: Option<&MachineState>,
    opts: &SimOptions,
) -> Result<Trajectory> {
    scenario.validate(model.faults.len())?;
    let h = check_step(opts)?;
    let steps = (scenario.horizon / h).round() as usize;
    let (k_fault, k_clear) = match scenario.fault {
        Some(_) => {
            let ks = (scenario.fault_start / h).round() as usize;
            let kc = ks + ((scenario.clearing_time / h).round() as usize).max(1);
            (ks, kc.min(steps))
        }
        None => (steps, steps),
    };
    integrate(model, scenario.fault, k_fault, k_clear, steps, initial, opts)
}

/// Integrates the post-fault network of `fault` from `t = 0`, i.e. from a
/// state reached at the clearing instant.
pub fn simulate_post_fault(
    model: &GridModel,
    fault: usize,
    initial: &MachineState,
    horizon: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    Scenario { fault: Some(fault), fault_start: 0.0, clearing_time: horizon / 2.0, horizon }.validate(model.faults.len())?;
    let h = check_step(opts)?;
    let steps = (horizon / h).round() as usize;
    integrate(model, Some(fault), 0, 0, steps, Some(initial), opts)
}

fn check_step(opts: &SimOptions) -> Result<f64> {
    if opts.step > 0.0 && opts.step.is_finite() {
        Ok(opts.step)
    } else {
        Err(PowerError::Scenario("step must be positive".into()))
    }
}

fn integrate(
    model: &GridModel,
    fault: Option<usize>,
    k_fault: usize,
    k_clear: usize,
    steps: usize,
    initial: Option<&MachineState>,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let h = opts.step;
    let n = model.n_machines();
    let init = match initial {
        Some(s) => {
            if s.delta.len() != n || s.omega.len() != n {
                return Err(PowerError::Scenario(format!("initial state needs {n} machines")));
            }
            s.clone()
        }
        None => MachineState { delta: model.sep.clone(), omega: vec![0.0; n] },
    };
    let window_start = if fault.is_some() { k_clear } else { 0 };
    let reference = label_reference(model, fault);
    let mut traj = Trajectory {
        step: h,
        n_machines: n,
        delta: Vec::with_capacity((steps + 1) * n),
        omega: Vec::with_capacity((steps + 1) * n),
        reference,
        bound: model.out_of_step,
        window_start,
        clearing_index: fault.map(|_| k_clear),
        diverged: false,
        halted: false,
    };
    traj.delta.extend_from_slice(&init.delta);
    traj.omega.extend_from_slice(&init.omega);

    let networks: [&Network; 3] = match fault {
        Some(f) => [&model.pre_fault, &model.faults[f].fault_on, &model.faults[f].post_fault],
        None => [&model.pre_fault; 3],
    };
    let mut rhs = Rhs {
        inv_m: model.machines.iter().map(|m| 1.0 / m.inertia).collect(),
        damping: model.machines.iter().map(|m| m.damping).collect(),
        p_mech: model.machines.iter().map(|m| m.p_mech).collect(),
        emf: model.emf(),
        pe: vec![0.0; n],
        net: networks[0],
    };
    let (mut d, mut w) = (init.delta, init.omega);
    let mut k1 = (vec![0.0; n], vec![0.0; n]);
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    for k in 0..steps {
        rhs.net = networks[if k < k_fault { 0 } else if k < k_clear { 1 } else { 2 }];
        rhs.eval(&d, &w, &mut k1.0, &mut k1.1);
        for i in 0..n {
            tmp.0[i] = d[i] + 0.5 * h * k1.0[i];
            tmp.1[i] = w[i] + 0.5 * h * k1.1[i];
        }
        rhs.eval(&tmp.0, &tmp.1, &mut k2.0, &mut k2.1);
        for i in 0..n {
            tmp.0[i] = d[i] + 0.5 * h * k2.0[i];
            tmp.1[i] = w[i] + 0.5 * h * k2.1[i];
        }
        rhs.eval(&tmp.0, &tmp.1, &mut k3.0, &mut k3.1);
        for i in 0..n {
            tmp.0[i] = d[i] + h * k3.0[i];
            tmp.1[i] = w[i] + h * k3.1[i];
        }
        rhs.eval(&tmp.0, &tmp.1, &mut k4.0, &mut k4.1);
        for i in 0..n {
            d[i] += h / 6.0 * (k1.0[i] + 2.0 * k2.0[i] + 2.0 * k3.0[i] + k4.0[i]);
            w[i] += h / 6.0 * (k1.1[i] + 2.0 * k2.1[i] + 2.0 * k3.1[i] + k4.1[i]);
        }
        if d.iter().chain(&w).any(|x| !x.is_finite()) {
            traj.diverged = true;
            break;
        }
        traj.delta.extend_from_slice(&d);
        traj.omega.extend_from_slice(&w);
        if opts.halt_on_out_of_step && k + 1 >= window_start && separation(&d, &traj.reference) > traj.bound {
            traj.halted = true;
            break;
        }
    }
    Ok(traj)
}
