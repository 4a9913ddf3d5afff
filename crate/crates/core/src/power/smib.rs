use super::{GridKind, GridModel, Network, PowerError, Result};
use std::f64::consts::PI;

/// Closed-form energy criterion of the post-fault SMIB system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmibEnergy {
    pub inertia: f64,
    pub p_mech: f64,
    pub p_max: f64,
    /// Stable equilibrium `asin(P_m / P_max)`.
    pub delta_s: f64,
    /// Energy of the unstable equilibrium `pi - delta_s`.
    pub v_cr: f64,
    /// Left edge of the potential well, where the potential climbs back to
    /// `v_cr`.
    pub delta_left: f64,
}

impl SmibEnergy {
    pub fn new(inertia: f64, p_mech: f64, p_max: f64) -> Result<Self> {
        if !(p_max > 0.0) || p_mech.abs() >= p_max {
            return Err(PowerError::NoEquilibrium(format!("P_m = {p_mech} needs |P_m| < P_max = {p_max}")));
        }
        let delta_s = (p_mech / p_max).asin();
        let mut e = SmibEnergy { inertia, p_mech, p_max, delta_s, v_cr: 0.0, delta_left: 0.0 };
        e.v_cr = e.potential(PI - delta_s);
        // the potential falls monotonically from the left unstable
        // equilibrium -pi - delta_s down to delta_s
        let (mut lo, mut hi) = (-PI - delta_s, delta_s);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if e.potential(mid) > e.v_cr {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        e.delta_left = hi;
        Ok(e)
    }

    /// Post-fault system of `model` (the first fault location).
    pub fn from_model(model: &GridModel) -> Result<Self> {
        if model.kind != GridKind::Smib {
            return Err(PowerError::NotSmib("the energy criterion"));
        }
        let net = model.faults.first().map(|f| &f.post_fault).unwrap_or(&model.pre_fault);
        let Network::Smib { p_max } = net else { return Err(PowerError::NotSmib("the energy criterion")) };
        let m = &model.machines[0];
        SmibEnergy::new(m.inertia, m.p_mech, *p_max)
    }

    pub fn potential(&self, delta: f64) -> f64 {
        -self.p_mech * (delta - self.delta_s) - self.p_max * (delta.cos() - self.delta_s.cos())
    }

    /// `V = M omega^2 / 2 - P_m (delta - delta_s) - P_max (cos delta - cos delta_s)`.
    pub fn energy(&self, delta: f64, omega: f64) -> f64 {
        0.5 * self.inertia * omega * omega + self.potential(delta)
    }

    /// 1 iff `V < V_cr` and `delta` lies inside the well.
    pub fn label(&self, delta: f64, omega: f64) -> u8 {
        (self.energy(delta, omega) < self.v_cr && delta > self.delta_left && delta < PI - self.delta_s) as u8
    }
}

/// Energy-criterion label of `(delta, omega)` for an SMIB model.
pub fn smib_energy_label(delta: f64, omega: f64, model: &GridModel) -> Result<u8> {
    Ok(SmibEnergy::from_model(model)?.label(delta, omega))
}
