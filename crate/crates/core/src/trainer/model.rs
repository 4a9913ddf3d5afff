use super::{Result, TrainError};
use crate::circuit::{predict_prob_one, CircuitDocument, CircuitSpec, FeatureVector, ParameterVector, FEATURE_CLIP};
use serde::{Deserialize, Serialize};

/// Per-feature affine map `z = scale * x + offset` fitted to send the
/// training range onto `[-1, 1]`; transformed values are clipped to
/// `[-FEATURE_CLIP, FEATURE_CLIP]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub scale: Vec<f64>,
    pub offset: Vec<f64>,
}

impl FeatureScaler {
    /// Min/max fit over `rows`; a constant feature maps to 0.
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let mut lo: Vec<f64> = Vec::new();
        let mut hi: Vec<f64> = Vec::new();
        for row in rows {
            if lo.is_empty() {
                lo = row.to_vec();
                hi = row.to_vec();
            } else if row.len() != lo.len() {
                return Err(TrainError::Shape("rows of different length".into()));
            }
            for (j, &x) in row.iter().enumerate() {
                lo[j] = lo[j].min(x);
                hi[j] = hi[j].max(x);
            }
        }
        if lo.is_empty() {
            return Err(TrainError::EmptyBatch);
        }
        let (scale, offset) = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| if b > a { let s = 2.0 / (b - a); (s, -1.0 - a * s) } else { (0.0, 0.0) })
            .unzip();
        Ok(FeatureScaler { scale, offset })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn transform(&self, raw: &[f64]) -> Result<FeatureVector> {
        if raw.len() != self.dim() {
            return Err(TrainError::Shape(format!("{} raw features, scaler expects {}", raw.len(), self.dim())));
        }
        let z = raw
            .iter()
            .zip(self.scale.iter().zip(&self.offset))
            .map(|(x, (s, o))| (s * x + o).clamp(-FEATURE_CLIP, FEATURE_CLIP))
            .collect();
        Ok(FeatureVector::new(z)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification {
    pub label: u8,
    pub p1: f64,
}

/// Label 1 (stable) iff `p1 >= threshold`.
pub fn classify_prob(p1: f64, threshold: f64) -> Classification {
    Classification { label: (p1 >= threshold) as u8, p1 }
}

/// A fitted circuit with the scaler that produced its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelDocument", into = "ModelDocument")]
pub struct TrainedModel {
    pub spec: CircuitSpec,
    pub params: ParameterVector,
    pub scaler: FeatureScaler,
    pub history: Vec<EpochRecord>,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    #[serde(flatten)]
    circuit: CircuitDocument,
    scaler: FeatureScaler,
    history: Vec<EpochRecord>,
}

impl From<TrainedModel> for ModelDocument {
    fn from(m: TrainedModel) -> Self {
        ModelDocument { circuit: CircuitDocument::new(&m.spec, &m.params), scaler: m.scaler, history: m.history }
    }
}

impl TryFrom<ModelDocument> for TrainedModel {
    type Error = String;

    fn try_from(d: ModelDocument) -> std::result::Result<Self, String> {
        let (spec, params) = d.circuit.into_parts().map_err(|e| e.to_string())?;
        TrainedModel::new(spec, params, d.scaler, d.history).map_err(|e| e.to_string())
    }
}

impl TrainedModel {
    pub fn new(
        spec: CircuitSpec,
        params: ParameterVector,
        scaler: FeatureScaler,
        history: Vec<EpochRecord>,
    ) -> Result<Self> {
        if scaler.dim() != spec.feature_dim || scaler.offset.len() != spec.feature_dim {
            return Err(TrainError::Shape(format!(
                "scaler has {} entries for {} features",
                scaler.dim(),
                spec.feature_dim
            )));
        }
        if history.windows(2).any(|w| w[1].epoch <= w[0].epoch) {
            return Err(TrainError::Shape("history epochs must increase".into()));
        }
        if params.len() != spec.param_count() {
            return Err(TrainError::Shape("parameter count does not match the circuit".into()));
        }
        Ok(TrainedModel { spec, params, scaler, history })
    }

    pub fn features(&self, raw: &[f64]) -> Result<FeatureVector> {
        self.scaler.transform(raw)
    }

    /// `p1` for physical-unit features.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        Ok(predict_prob_one(&self.spec, self.params.values(), &self.features(raw)?)?)
    }

    pub fn classify(&self, raw: &[f64], threshold: f64) -> Result<Classification> {
        check_threshold(threshold)?;
        Ok(classify_prob(self.predict(raw)?, threshold))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| TrainError::Shape(format!("model document: {e}")))
    }
}

pub(crate) fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(TrainError::Config(format!("threshold {threshold} outside (0, 1)")))
    }
}

/// [`TrainedModel::classify`] as a free function.
pub fn classify(model: &TrainedModel, raw: &[f64], threshold: f64) -> Result<Classification> {
    model.classify(raw, threshold)
}
