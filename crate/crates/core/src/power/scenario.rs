use super::{label_stability, simulate, GridKind, GridModel, MachineState, PowerError, Result, SimOptions, Trajectory};
use crate::dataset::{Sample, SampleSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scenario {
    /// Index into the model's fault list; `None` runs the pre-fault network.
    pub fault: Option<usize>,
    pub fault_start: f64,
    pub clearing_time: f64,
    pub horizon: f64,
}

impl Scenario {
    pub fn no_fault(horizon: f64) -> Self {
        Scenario { fault: None, fault_start: 0.0, clearing_time: 0.0, horizon }
    }

    pub fn validate(&self, n_faults: usize) -> Result<()> {
        if !(self.horizon > 0.0) {
            return Err(PowerError::Scenario("horizon must be positive".into()));
        }
        if let Some(f) = self.fault {
            if f >= n_faults {
                return Err(PowerError::Scenario(format!("fault {f} out of range ({n_faults} locations)")));
            }
            if !(self.fault_start >= 0.0 && self.clearing_time > 0.0 && self.fault_start + self.clearing_time < self.horizon) {
                return Err(PowerError::Scenario("need 0 <= fault_start < fault_start + clearing_time < horizon".into()));
            }
        }
        Ok(())
    }
}

/// Random scenario generator: uniform fault location, uniform clearing
/// time, optional uniform initial-state box.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDistribution {
    pub fault_start: f64,
    pub clearing_time: (f64, f64),
    pub horizon: f64,
    pub step: f64,
    pub initial_delta: Option<(f64, f64)>,
    pub initial_omega: Option<(f64, f64)>,
}

impl ScenarioDistribution {
    pub fn validate(&self, n_faults: usize) -> Result<()> {
        let (lo, hi) = self.clearing_time;
        let ok_box = |b: Option<(f64, f64)>| b.is_none_or(|(a, c)| a.is_finite() && c.is_finite() && a <= c);
        if !(lo > 0.0 && lo <= hi && self.fault_start >= 0.0 && self.fault_start + hi < self.horizon) {
            return Err(PowerError::Scenario("clearing-time interval must satisfy 0 < lo <= hi < horizon - fault_start".into()));
        }
        if !(self.step > 0.0 && self.step < self.horizon) || !ok_box(self.initial_delta) || !ok_box(self.initial_omega) {
            return Err(PowerError::Scenario("invalid step or initial-state box".into()));
        }
        if n_faults == 0 {
            return Err(PowerError::Scenario("no fault locations".into()));
        }
        Ok(())
    }

    /// Draws a scenario and its initial state (`None` = pre-fault equilibrium).
    pub fn sample(&self, model: &GridModel, rng: &mut impl Rng) -> (Scenario, Option<MachineState>) {
        let fault = rng.gen_range(0..model.faults.len());
        let (lo, hi) = self.clearing_time;
        let clearing_time = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let scenario = Scenario { fault: Some(fault), fault_start: self.fault_start, clearing_time, horizon: self.horizon };
        let initial = if self.initial_delta.is_some() || self.initial_omega.is_some() {
            let mut s = MachineState { delta: model.sep.clone(), omega: vec![0.0; model.n_machines()] };
            let mut draw = |b: Option<(f64, f64)>, default: f64| match b {
                Some((a, c)) if c > a => rng.gen_range(a..c),
                Some((a, _)) => a,
                None => default,
            };
            // the box moves the first machine; the others keep their
            // offsets from it
            let d0 = draw(self.initial_delta, s.delta[0]);
            let w0 = draw(self.initial_omega, 0.0);
            let shift = d0 - s.delta[0];
            s.delta.iter_mut().for_each(|d| *d += shift);
            s.omega[0] = w0;
            Some(s)
        } else {
            None
        };
        (scenario, initial)
    }
}

/// Human-readable names of the feature columns, in order.
pub fn feature_names(model: &GridModel) -> Vec<String> {
    let names: Vec<&str> = model.machines.iter().map(|m| m.name.as_str()).collect();
    match model.kind {
        GridKind::Smib => vec!["delta".into(), "omega".into()],
        GridKind::Multimachine => {
            let mut out = Vec::new();
            out.extend(names[1..].iter().map(|n| format!("delta_{n}-{}", names[0])));
            out.extend(names.iter().map(|n| format!("omega_{n}")));
            out.extend(names.iter().map(|n| format!("pe_{n}")));
            out.extend(model.flows.iter().map(|&(i, j)| format!("flow_{}-{}", names[i], names[j])));
            out
        }
    }
}

/// Feature source vector at `time`: `(delta, omega)` for SMIB; for
/// multi-machine models the angles relative to machine 1, all speeds, the
/// electrical powers and the configured transfer flows, powers evaluated in
/// the post-fault network of `fault` (pre-fault without one).
pub fn extract_features(model: &GridModel, fault: Option<usize>, traj: &Trajectory, time: f64) -> Result<Vec<f64>> {
    let k = traj.index_at(time)?;
    let (d, w) = (traj.delta(k), traj.omega(k));
    match model.kind {
        GridKind::Smib => Ok(vec![d[0], w[0]]),
        GridKind::Multimachine => {
            let net = fault.map(|f| &model.faults[f].post_fault).unwrap_or(&model.pre_fault);
            let emf = model.emf();
            let mut pe = vec![0.0; model.n_machines()];
            net.electrical_power(&emf, d, &mut pe);
            let mut out = Vec::with_capacity(3 * d.len() - 1 + model.flows.len());
            out.extend(d[1..].iter().map(|x| x - d[0]));
            out.extend_from_slice(w);
            out.extend_from_slice(&pe);
            out.extend(model.flows.iter().map(|&(i, j)| net.transfer_flow(&emf, d, i, j)));
            Ok(out)
        }
    }
}

/// Simulates `n_samples` scenarios drawn from `dist`. Sample `i` uses its
/// own random stream, so the set depends only on `seed`.
pub fn generate_dataset(model: &GridModel, n_samples: usize, dist: &ScenarioDistribution, seed: u64) -> Result<SampleSet> {
    model.validate()?;
    dist.validate(model.faults.len())?;
    if n_samples < 2 {
        return Err(PowerError::Scenario("need at least two samples".into()));
    }
    let opts = SimOptions { step: dist.step, halt_on_out_of_step: true };
    let samples = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (scenario, initial) = dist.sample(model, &mut rng);
            let traj = simulate(model, &scenario, initial.as_ref(), &opts)?;
            let clear = scenario.fault_start + scenario.clearing_time;
            let t = traj.time(traj.clearing_index().unwrap_or_else(|| traj.index_at(clear).unwrap_or(0)));
            let features = extract_features(model, scenario.fault, &traj, t)?;
            Ok(Sample { features, label: label_stability(&traj)?, scenario: i })
        })
        .collect::<Result<Vec<_>>>()?;
    let stable = samples.iter().filter(|s| s.label == 1).count();
    if stable == 0 || stable == n_samples {
        return Err(PowerError::SingleClass { n: n_samples, label: (stable > 0) as u8 });
    }
    SampleSet::new(samples).map_err(|e| PowerError::InvalidModel(e.to_string()))
}

/// Longest clearing time in `(0, t_max]` that keeps the system stable from
/// `initial` (the pre-fault equilibrium if `None`), located by bisection to
/// `tol`. `None` if even the shortest fault is unstable; `t_max` if the
/// longest is stable.
pub fn critical_clearing_time(
    model: &GridModel,
    fault: usize,
    initial: Option<&MachineState>,
    t_max: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let dist = &model.scenarios;
    let opts = SimOptions { step: dist.step, halt_on_out_of_step: true };
    let stable = |tc: f64| -> Result<bool> {
        let scenario =
            Scenario { fault: Some(fault), fault_start: dist.fault_start, clearing_time: tc, horizon: dist.horizon };
        Ok(label_stability(&simulate(model, &scenario, initial, &opts)?)? == 1)
    };
    let mut lo = dist.step;
    if !stable(lo)? {
        return Ok(None);
    }
    let mut hi = t_max;
    if stable(hi)? {
        return Ok(Some(hi));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if stable(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(lo))
}
