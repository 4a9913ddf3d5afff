//! Classification metrics, class separation in Hilbert space, region scans
//! and architecture comparisons.

use crate::circuit::{execute, CircuitSpec};
use crate::dataset::SampleSet;
use crate::power::SmibEnergy;
use crate::qsim::DensityMatrix;
use crate::trainer::{classify_prob, train, TrainConfig, TrainError, TrainedModel};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{0} predictions for {1} labels")]
    LengthMismatch(usize, usize),
    #[error("nothing to evaluate")]
    Empty,
    #[error("class separation needs both classes")]
    SingleClass,
    #[error("invalid region grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

/// Confusion counts with stable (label 1) as the positive class. Ratios
/// with a zero denominator are `None` (JSON `null`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Metrics {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Result<Self> {
        let total = tp + tn + fp + fn_;
        if total == 0 {
            return Err(AnalysisError::Empty);
        }
        let ratio = |a: usize, b: usize| if b == 0 { None } else { Some(a as f64 / b as f64) };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if p > 0.0 && r > 0.0 => Some(2.0 / (1.0 / p + 1.0 / r)),
            // no true positives but some positives exist: harmonic mean is 0
            (Some(_), Some(_)) => Some(0.0),
            _ => None,
        };
        Ok(Metrics { accuracy: (tp + tn) as f64 / total as f64, precision, recall, f1, tp, tn, fp, fn_ })
    }
}

pub fn confusion_metrics(predictions: &[u8], truth: &[u8]) -> Result<Metrics> {
    if predictions.len() != truth.len() {
        return Err(AnalysisError::LengthMismatch(predictions.len(), truth.len()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (&p, &t) in predictions.iter().zip(truth) {
        match (p == 1, t == 1) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    Metrics::from_counts(tp, tn, fp, fn_)
}

/// `Tr(sigma_0 sigma_1)` of the class-mean density matrices.
pub fn class_overlap(class0: &[DensityMatrix], class1: &[DensityMatrix]) -> Result<f64> {
    if class0.is_empty() || class1.is_empty() {
        return Err(AnalysisError::SingleClass);
    }
    let mean = |c: &[DensityMatrix]| {
        let w = 1.0 / c.len() as f64;
        DensityMatrix::mixture(c.iter().map(|r| (w, r))).ok_or(AnalysisError::Grid("register sizes differ".into()))
    };
    let (s0, s1) = (mean(class0)?, mean(class1)?);
    s0.overlap(&s1).map_err(|e| AnalysisError::Train(TrainError::from(e)))
}

/// [`class_overlap`] of the embedded states of `data` under `model`.
pub fn class_separation(model: &TrainedModel, data: &SampleSet) -> Result<f64> {
    let states = data
        .samples()
        .par_iter()
        .map(|s| {
            let z = model.features(&s.features)?;
            let psi = execute(&model.spec, model.params.values(), &z).map_err(TrainError::from)?;
            Ok((s.label, DensityMatrix::from_pure(&psi)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (c1, c0): (Vec<_>, Vec<_>) = states.into_iter().partition(|(l, _)| *l == 1);
    let strip = |v: Vec<(u8, DensityMatrix)>| v.into_iter().map(|(_, r)| r).collect::<Vec<_>>();
    class_overlap(&strip(c0), &strip(c1))
}

/// Metrics plus class separation, the content of `metrics.json`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(flatten)]
    pub metrics: Metrics,
    pub tr_sigma: f64,
}

pub fn evaluate(model: &TrainedModel, data: &SampleSet, threshold: f64) -> Result<Evaluation> {
    let probs = predict_all(model, data)?;
    let pred: Vec<u8> = probs.iter().map(|&p| classify_prob(p, threshold).label).collect();
    let truth: Vec<u8> = data.labels().collect();
    Ok(Evaluation { metrics: confusion_metrics(&pred, &truth)?, tr_sigma: class_separation(model, data)? })
}

/// `p1` of every sample.
pub fn predict_all(model: &TrainedModel, data: &SampleSet) -> Result<Vec<f64>> {
    Ok(data.samples().par_iter().map(|s| model.predict(&s.features)).collect::<std::result::Result<Vec<_>, _>>()?)
}

/// Two-dimensional grid over features `axes`, other features held at `fixed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: (usize, usize),
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub nx: usize,
    pub ny: usize,
    /// Full-length feature vector supplying the non-scanned values; empty
    /// for two-feature models.
    #[serde(default)]
    pub fixed: Vec<f64>,
}

impl GridSpec {
    /// `(delta, omega)` plane of an SMIB model.
    pub fn smib(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Self {
        GridSpec { axes: (0, 1), x_range, y_range, nx, ny, fixed: Vec::new() }
    }

    fn coord(range: (f64, f64), n: usize, i: usize) -> f64 {
        if n == 1 {
            0.5 * (range.0 + range.1)
        } else {
            range.0 + (range.1 - range.0) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        Self::coord(self.x_range, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        Self::coord(self.y_range, self.ny, j)
    }

    fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(AnalysisError::Grid(m.into()));
        let (a, b) = self.axes;
        if a == b || a >= dim || b >= dim {
            return bad("axes must be two distinct feature indices");
        }
        if dim > 2 && self.fixed.len() != dim {
            return bad("slices of models with more than two features need a full fixed vector");
        }
        if !self.fixed.is_empty() && self.fixed.len() != dim {
            return bad("fixed vector length differs from the feature dimension");
        }
        if self.nx == 0 || self.ny == 0 {
            return bad("grid needs at least one cell per axis");
        }
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.0 <= r.1;
        if !ok(self.x_range) || !ok(self.y_range) {
            return bad("ranges must be finite with lo <= hi");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCell {
    pub x: f64,
    pub y: f64,
    pub p1: f64,
    /// One label per threshold.
    pub labels: Vec<u8>,
    pub oracle: Option<u8>,
}

/// Cells in row-major order (`x` outer, `y` inner).
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub grid: GridSpec,
    pub thresholds: Vec<f64>,
    pub cells: Vec<RegionCell>,
}

impl RegionMap {
    /// Fraction of cells where the label at `thresholds[t]` matches the oracle.
    pub fn agreement(&self, t: usize) -> Option<f64> {
        let mut n = 0usize;
        let mut hit = 0usize;
        for c in &self.cells {
            let o = c.oracle?;
            n += 1;
            hit += (c.labels[t] == o) as usize;
        }
        (n > 0).then(|| hit as f64 / n as f64)
    }

    pub fn stable_count(&self, t: usize) -> usize {
        self.cells.iter().filter(|c| c.labels[t] == 1).count()
    }

    /// Header `delta,omega,p1,label@t...,oracle_label` (axis names given).
    pub fn write_csv<W: Write>(&self, names: (&str, &str), out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![names.0.to_string(), names.1.to_string(), "p1".to_string()];
        header.extend(self.thresholds.iter().map(|t| format!("label@{t}")));
        header.push("oracle_label".into());
        w.write_record(&header)?;
        for c in &self.cells {
            let mut row = vec![c.x.to_string(), c.y.to_string(), c.p1.to_string()];
            row.extend(c.labels.iter().map(|l| l.to_string()));
            row.push(c.oracle.map(|o| o.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        w.flush()
    }
}

/// Evaluates `model` on every grid cell at each threshold, with the SMIB
/// energy oracle per cell when given.
pub fn scan_region(
    model: &TrainedModel,
    grid: &GridSpec,
    thresholds: &[f64],
    oracle: Option<&SmibEnergy>,
) -> Result<RegionMap> {
    grid.validate(model.spec.feature_dim)?;
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(AnalysisError::Grid("thresholds must lie in (0, 1)".into()));
    }
    let base = if grid.fixed.is_empty() { vec![0.0; model.spec.feature_dim] } else { grid.fixed.clone() };
    let cells = (0..grid.nx * grid.ny)
        .into_par_iter()
        .map(|k| {
            let (x, y) = (grid.x(k / grid.ny), grid.y(k % grid.ny));
            let mut raw = base.clone();
            raw[grid.axes.0] = x;
            raw[grid.axes.1] = y;
            let p1 = model.predict(&raw)?;
            Ok(RegionCell {
                x,
                y,
                p1,
                labels: thresholds.iter().map(|&t| classify_prob(p1, t).label).collect(),
                oracle: oracle.map(|e| e.label(x, y)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionMap { grid: grid.clone(), thresholds: thresholds.to_vec(), cells })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub spec: CircuitSpec,
    /// Test-split evaluation, or the training error.
    pub outcome: std::result::Result<Evaluation, String>,
}

/// Trains every spec with the same configuration and evaluates it on
/// `test`. A failing spec is reported in its row, not propagated.
pub fn compare_circuits(train_set: &SampleSet, test: &SampleSet, specs: &[CircuitSpec], cfg: &TrainConfig) -> Result<Vec<ComparisonRow>> {
    if specs.is_empty() {
        return Err(AnalysisError::Empty);
    }
    Ok(specs
        .iter()
        .map(|spec| {
            let outcome = train(spec, train_set, cfg)
                .map_err(AnalysisError::from)
                .and_then(|m| evaluate(&m, test, 0.5))
                .map_err(|e| e.to_string());
            ComparisonRow { spec: *spec, outcome }
        })
        .collect())
}

/// `architecture,n_qubits,n_layers,n_params,accuracy,f1,tr_sigma,error`.
pub fn write_comparison_csv<W: Write>(rows: &[ComparisonRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["architecture", "n_qubits", "n_layers", "n_params", "accuracy", "f1", "tr_sigma", "error"])?;
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for r in rows {
        let s = &r.spec;
        let mut row = vec![s.architecture.name().to_string(), s.n_qubits.to_string(), s.n_layers.to_string(), s.param_count().to_string()];
        match &r.outcome {
            Ok(e) => row.extend([e.metrics.accuracy.to_string(), opt(e.metrics.f1), e.tr_sigma.to_string(), String::new()]),
            Err(msg) => row.extend([String::new(), String::new(), String::new(), msg.clone()]),
        }
        w.write_record(&row)?;
    }
    w.flush()
}
