use anyhow::{bail, Context, Result};
use qtsa_core::circuit::{build_baseline, Activation, Architecture, CircuitSpec};
use qtsa_core::noise::NoiseModel;
use qtsa_core::power::GridModel;
use qtsa_core::trainer::TrainConfig;
use serde::Deserialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

/// Run configuration; every table and field is optional.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Drives scenario sampling, the train/test split and parameter init.
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    /// `seed` here is ignored in favour of the run seed.
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub region: RegionConfig,
    pub compare: CompareConfig,
    pub noise: NoiseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            data: DataConfig::default(),
            model: ModelConfig { architecture: Architecture::Qtsa, n_qubits: 2, n_layers: 6, activation: None },
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            region: RegionConfig::default(),
            compare: CompareConfig::default(),
            noise: NoiseConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// `smib`, `two-area`, or a path to a grid TOML file.
    pub grid: String,
    pub n_samples: usize,
    pub train_fraction: f64,
    /// Existing dataset CSV used instead of simulation.
    pub path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { grid: "smib".into(), n_samples: 2000, train_fraction: 0.75, path: None }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub architecture: Architecture,
    pub n_qubits: usize,
    pub n_layers: usize,
    /// Defaults to TANH for QTSA and IDENTITY for the baselines.
    #[serde(default)]
    pub activation: Option<Activation>,
}

impl ModelConfig {
    pub fn spec(&self, feature_dim: usize) -> Result<CircuitSpec> {
        let spec = match self.architecture {
            Architecture::Qtsa => CircuitSpec::qtsa(self.n_qubits, self.n_layers, feature_dim)?,
            kind => build_baseline(kind, self.n_qubits, self.n_layers, feature_dim)?,
        };
        let spec = self.activation.map_or(spec, |a| spec.with_activation(a));
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { threshold: 0.5 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionConfig {
    /// Feature indices of the scanned plane.
    pub axes: [usize; 2],
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    /// Cells per axis.
    pub resolution: usize,
    pub thresholds: Vec<f64>,
    /// Values of the non-scanned features; required above two features.
    pub fixed: Vec<f64>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            axes: [0, 1],
            x_range: [-PI, 2.0 * PI],
            y_range: [-8.0, 8.0],
            resolution: 200,
            thresholds: vec![0.5, 0.7, 0.9, 0.95],
            fixed: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub circuits: Vec<ModelConfig>,
}

impl Default for CompareConfig {
    fn default() -> Self {
        let m = |architecture, n_qubits, n_layers| ModelConfig { architecture, n_qubits, n_layers, activation: None };
        use Architecture::*;
        CompareConfig {
            circuits: vec![
                m(Qtsa, 2, 1),
                m(Qtsa, 2, 2),
                m(Qtsa, 2, 4),
                m(Qtsa, 2, 6),
                m(Qtsa, 1, 6),
                m(Iqp, 3, 10),
                m(Qaoa, 3, 10),
                m(Reupload, 2, 10),
            ],
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Depolarizing settings, relaxation off.
    pub p_dep: Vec<f64>,
    /// Relaxation settings in seconds (`T2 = T1`), depolarizing off.
    pub t1_s: Vec<f64>,
    pub gate_time_1q: f64,
    pub gate_time_2q: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        let g = NoiseModel::default();
        NoiseConfig {
            p_dep: vec![0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 0.3, 1.0],
            t1_s: vec![1e-3, 1e-4, 1e-5, 1e-6, 1e-7],
            gate_time_1q: g.gate_time_1q,
            gate_time_2q: g.gate_time_2q,
        }
    }
}

impl NoiseConfig {
    pub fn settings(&self) -> Vec<NoiseModel> {
        let base = NoiseModel { gate_time_1q: self.gate_time_1q, gate_time_2q: self.gate_time_2q, ..NoiseModel::default() };
        let dep = self.p_dep.iter().map(|&p_dep| NoiseModel { p_dep, ..base });
        let relax = self.t1_s.iter().map(|&t1| NoiseModel { t1, t2: t1, ..base });
        dep.chain(relax).collect()
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let cfg: RunConfig = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if !(self.data.train_fraction > 0.0 && self.data.train_fraction < 1.0) {
            bail!("data.train_fraction must lie in (0, 1)");
        }
        if self.data.n_samples == 0 {
            bail!("data.n_samples must be positive");
        }
        if self.region.resolution == 0 {
            bail!("region.resolution must be positive");
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<GridModel> {
        Ok(match self.data.grid.as_str() {
            "smib" => GridModel::smib_default(),
            "two-area" => GridModel::two_area_default(),
            path => GridModel::load(Path::new(path))?,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }
}
