//! Normalized flow datasets and the preprocessing pipeline.
//!
//! `preprocess` turns a raw table into an N×76 matrix in \[0,1\] coordinates:
//! one-hot encoding, min-max normalization (ranges fitted here or frozen from
//! a training schema), label mapping, and a final canonicalization pass that
//! recomputes every related feature from the modified features. The stored
//! rows are therefore exact fixed points of constraint application, which
//! makes zero-perturbation attacks reproduce the clean predictions bit for
//! bit.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::constraint::ConstraintEngine;
use crate::error::{Error, Result};
use crate::ingest::RawTable;
use crate::profiles::{CsvSource, DatasetProfile};
use crate::schema::{FeatureSchema, FEATURE_COUNT};
use crate::seeds;

/// Where normalization ranges come from.
pub enum RangeFit<'a> {
    /// Fit min/max from the table being preprocessed (training data only).
    FitFromData,
    /// Reuse the ranges frozen in an existing schema (test/attack data).
    Frozen(&'a FeatureSchema),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    /// Values outside the frozen range that were clamped into \[0,1\].
    pub values_clamped: usize,
    /// Related-feature values clamped during canonicalization.
    pub rf_clamped: u64,
}

/// A normalized dataset: N rows of 76 features in \[0,1\] plus binary labels,
/// carrying the schema that defines its coordinate system.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowDataset {
    pub schema: FeatureSchema,
    data: Vec<f64>,
    labels: Vec<u8>,
}

impl FlowDataset {
    pub fn new(schema: FeatureSchema, data: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        schema.validate()?;
        if data.len() != labels.len() * FEATURE_COUNT {
            return Err(Error::ShapeMismatch {
                expected: format!("{} values", labels.len() * FEATURE_COUNT),
                got: format!("{}", data.len()),
            });
        }
        if labels.iter().any(|l| *l > 1) {
            return Err(Error::Invalid("labels must be 0 or 1".into()));
        }
        if data.iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return Err(Error::Invalid("feature values must lie in [0,1]".into()));
        }
        Ok(FlowDataset {
            schema,
            data,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * FEATURE_COUNT..(i + 1) * FEATURE_COUNT]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(FEATURE_COUNT)
    }

    /// (benign, attack) row counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let attack = self.labels.iter().filter(|l| **l == 1).count();
        (self.labels.len() - attack, attack)
    }

    pub fn indices_of_class(&self, label: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> FlowDataset {
        let mut data = Vec::with_capacity(indices.len() * FEATURE_COUNT);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            data.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        FlowDataset {
            schema: self.schema.clone(),
            data,
            labels,
        }
    }

    /// Class-stratified split preserving label proportions.
    pub fn stratified_split(&self, train_fraction: f64, seed: u64) -> Result<(FlowDataset, FlowDataset)> {
        let (train_idx, test_idx) = stratified_split_indices(&self.labels, train_fraction, seed)?;
        Ok((self.subset(&train_idx), self.subset(&test_idx)))
    }

    /// Randomly reduce benign rows (without replacement) to the attack count.
    /// Attack rows are untouched; original row order is preserved.
    pub fn undersample(&self, seed: u64) -> Result<FlowDataset> {
        let benign = self.indices_of_class(0);
        let attack = self.indices_of_class(1);
        if benign.len() < attack.len() {
            return Err(Error::Invalid(format!(
                "undersampling reduces the benign majority: benign={} < attack={}",
                benign.len(),
                attack.len()
            )));
        }
        let mut rng = seeds::rng(seed, "undersample", 0);
        let mut pool = benign;
        pool.shuffle(&mut rng);
        pool.truncate(attack.len());
        let mut keep: Vec<usize> = pool.into_iter().chain(attack).collect();
        keep.sort_unstable();
        Ok(self.subset(&keep))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = DatasetFile {
            format: DATASET_FORMAT.into(),
            version: DATASET_VERSION,
            schema: self.schema.clone(),
            labels: self.labels.clone(),
            features: self.data.clone(),
        };
        std::fs::write(path, serde_json::to_vec(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<FlowDataset> {
        let bytes = std::fs::read(path)?;
        let file: DatasetFile = serde_json::from_slice(&bytes)?;
        if file.format != DATASET_FORMAT || file.version != DATASET_VERSION {
            return Err(Error::FileVersion {
                kind: "dataset",
                found: file.version,
                expected: DATASET_VERSION,
            });
        }
        FlowDataset::new(file.schema, file.features, file.labels)
    }
}

const DATASET_FORMAT: &str = "uapflow.dataset";
const DATASET_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    version: u32,
    schema: FeatureSchema,
    labels: Vec<u8>,
    features: Vec<f64>,
}

/// Core stratified splitting on labels alone, shared by the dataset and the
/// raw-table pipeline (which must split before fitting ranges).
pub fn stratified_split_indices(
    labels: &[u8],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::Config(format!(
            "train fraction {train_fraction} outside [0,1]"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [0u8, 1u8] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::Invalid(format!(
                "class {class} has {} samples; need at least 2 to split",
                idx.len()
            )));
        }
        let mut rng = seeds::rng(seed, "stratified-split", class as u64);
        idx.shuffle(&mut rng);
        let n_train = ((train_fraction * idx.len() as f64).round() as usize)
            .clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Map a label token to its binary class.
pub fn map_label(token: &str, benign_label: &str) -> u8 {
    u8::from(!token.trim().eq_ignore_ascii_case(benign_label))
}

/// One-hot encode, normalize, map labels, and canonicalize related features.
pub fn preprocess(
    raw: &RawTable,
    profile: &DatasetProfile,
    fit: RangeFit,
) -> Result<(FlowDataset, PreprocessStats)> {
    // Resolve each feature to its raw-table source.
    enum Src {
        Numeric(usize),
        OneHot(usize, String),
    }
    let srcs: Vec<Src> = profile
        .features
        .iter()
        .map(|f| match &f.source {
            CsvSource::Numeric { column, .. } => raw
                .numeric_names
                .iter()
                .position(|n| n == column)
                .map(Src::Numeric)
                .ok_or_else(|| Error::MissingColumn(column.clone())),
            CsvSource::OneHot { column, category } => raw
                .categorical_names
                .iter()
                .position(|n| n == column)
                .map(|i| Src::OneHot(i, category.clone()))
                .ok_or_else(|| Error::MissingColumn(column.clone())),
        })
        .collect::<Result<_>>()?;

    let raw_value = |row: usize, k: usize| -> f64 {
        match &srcs[k] {
            Src::Numeric(c) => raw.numeric[row][*c],
            Src::OneHot(c, category) => f64::from(raw.categorical[row][*c] == *category),
        }
    };

    let ranges: Vec<(f64, f64)> = match fit {
        RangeFit::Frozen(schema) => {
            if schema.features.len() != profile.features.len() {
                return Err(Error::Schema(
                    "frozen schema does not match the profile's feature count".into(),
                ));
            }
            schema.features.iter().map(|d| (d.raw_min, d.raw_max)).collect()
        }
        RangeFit::FitFromData => {
            let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); profile.features.len()];
            for row in 0..raw.len() {
                for (k, r) in ranges.iter_mut().enumerate() {
                    let v = raw_value(row, k);
                    r.0 = r.0.min(v);
                    r.1 = r.1.max(v);
                }
            }
            for r in ranges.iter_mut() {
                if !r.0.is_finite() || !r.1.is_finite() {
                    *r = (0.0, 0.0);
                }
            }
            ranges
        }
    };
    let schema = profile.schema_with_ranges(&ranges)?;
    let engine = ConstraintEngine::new(&schema)?;

    let mut stats = PreprocessStats::default();
    let mut data = Vec::with_capacity(raw.len() * FEATURE_COUNT);
    let mut labels = Vec::with_capacity(raw.len());
    for row in 0..raw.len() {
        let mut x = vec![0.0f64; FEATURE_COUNT];
        for (k, v) in x.iter_mut().enumerate() {
            let norm = schema.normalize(k, raw_value(row, k));
            if !(0.0..=1.0).contains(&norm) {
                stats.values_clamped += 1;
            }
            *v = norm.clamp(0.0, 1.0);
        }
        let (canonical, rf_clamped) = engine.apply_constraints_counted(&x, &x);
        stats.rf_clamped += u64::from(rf_clamped);
        data.extend_from_slice(&canonical);
        labels.push(map_label(&raw.labels[row], &profile.benign_label));
    }
    let ds = FlowDataset::new(schema, data, labels)?;
    Ok((ds, stats))
}
