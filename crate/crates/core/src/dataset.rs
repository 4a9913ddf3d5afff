//! Labeled samples in physical units and their CSV form.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("sample {index} has {found} features, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("sample {index} has label {label}, expected 0 or 1")]
    Label { index: usize, label: u8 },
    #[error("sample {index} has a non-finite feature")]
    NonFinite { index: usize },
    #[error("dataset is empty")]
    Empty,
    #[error("malformed dataset csv: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DatasetError>;

/// Stable outcome.
pub const STABLE: u8 = 1;
/// Out-of-step outcome.
pub const UNSTABLE: u8 = 0;

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: u8,
    /// Index of the scenario the sample was drawn from.
    pub scenario: usize,
}

/// Samples sharing one feature dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    dim: usize,
    samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let dim = samples.first().ok_or(DatasetError::Empty)?.features.len();
        for (index, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(DatasetError::Dimension { index, expected: dim, found: s.features.len() });
            }
            if s.label > 1 {
                return Err(DatasetError::Label { index, label: s.label });
            }
            if s.features.iter().any(|x| !x.is_finite()) {
                return Err(DatasetError::NonFinite { index });
            }
        }
        Ok(SampleSet { dim, samples })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.samples.iter().map(|s| s.label)
    }

    /// `(unstable, stable)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let stable = self.labels().filter(|&l| l == STABLE).count();
        (self.len() - stable, stable)
    }

    /// Stratified split: within each class a seeded shuffle, the first
    /// `round(train_fraction * class_size)` samples go to the training set.
    /// Both parts keep the original sample order.
    pub fn stratified_split(&self, train_fraction: f64, seed: u64) -> Result<(SampleSet, SampleSet)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut in_train = vec![false; self.len()];
        for class in [UNSTABLE, STABLE] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.samples[i].label == class).collect();
            idx.shuffle(&mut rng);
            let k = (train_fraction.clamp(0.0, 1.0) * idx.len() as f64).round() as usize;
            for &i in &idx[..k] {
                in_train[i] = true;
            }
        }
        let pick = |want: bool| -> Vec<Sample> {
            self.samples.iter().zip(&in_train).filter(|(_, &t)| t == want).map(|(s, _)| s.clone()).collect()
        };
        Ok((SampleSet::new(pick(true))?, SampleSet::new(pick(false))?))
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("f{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for s in &self.samples {
            let mut row: Vec<String> = s.features.iter().map(|x| x.to_string()).collect();
            row.push(s.label.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `f0,...,f{d-1},label` format; `scenario` becomes the row index.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let d = header.len().checked_sub(1).ok_or_else(|| DatasetError::Format("empty header".into()))?;
        let expected_ok = header.iter().take(d).enumerate().all(|(j, h)| h == format!("f{j}"))
            && header.get(d) == Some("label");
        if !expected_ok {
            return Err(DatasetError::Format(format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(","))));
        }
        let mut samples = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| DatasetError::Format(format!("row {}: bad number `{s}`", row + 1)))
            };
            let features = rec.iter().take(d).map(parse).collect::<Result<Vec<_>>>()?;
            let label = match rec.get(d).map(str::trim) {
                Some("0") => UNSTABLE,
                Some("1") => STABLE,
                other => return Err(DatasetError::Format(format!("row {}: bad label {other:?}", row + 1))),
            };
            samples.push(Sample { features, label, scenario: row });
        }
        SampleSet::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize) -> SampleSet {
        SampleSet::new(
            (0..n)
                .map(|i| Sample { features: vec![i as f64 * 0.1, -(i as f64) / 3.0], label: (i % 3 == 0) as u8, scenario: i })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let s = set(20);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f0,f1,label\n"));
        let back = SampleSet::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let s = set(40);
        let (tr, te) = s.stratified_split(0.75, 9).unwrap();
        assert_eq!(tr.len() + te.len(), 40);
        let (u, st) = s.class_counts();
        assert_eq!(tr.class_counts(), (((u as f64) * 0.75).round() as usize, ((st as f64) * 0.75).round() as usize));
        for x in te.samples() {
            assert!(!tr.samples().contains(x));
        }
        assert_eq!(s.stratified_split(0.75, 9).unwrap().0, tr);
    }

    #[test]
    fn rejects_malformed() {
        assert!(SampleSet::new(vec![]).is_err());
        let bad = vec![
            Sample { features: vec![0.0], label: 0, scenario: 0 },
            Sample { features: vec![0.0, 1.0], label: 1, scenario: 1 },
        ];
        assert!(matches!(SampleSet::new(bad), Err(DatasetError::Dimension { .. })));
        assert!(SampleSet::read_csv("a,label\n1,0\n".as_bytes()).is_err());
        assert!(SampleSet::read_csv("f0,label\n1,2\n".as_bytes()).is_err());
    }
}
