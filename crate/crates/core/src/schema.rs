//! Feature schema: the ordered list of feature descriptors shared by the
//! whole pipeline.
//!
//! The schema is the single source of truth for feature order, group
//! membership (modified / related / unmodified), raw value ranges, and the
//! raw↔normalized coordinate transforms. Datasets embed their schema so that
//! attacks run in exactly the coordinate system the detector was trained in.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds::content_hash;

/// Number of input features after encoding (the label is carried separately).
pub const FEATURE_COUNT: usize = 76;
/// Number of modified (freely perturbable) features.
pub const MF_COUNT: usize = 5;
/// Number of related (recalculated) features.
pub const RF_COUNT: usize = 8;

/// The five modified features, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MfRole {
    TotFwdPkts,
    TotBwdPkts,
    TotLenFwdPkts,
    TotLenBwdPkts,
    FlowDuration,
}

impl MfRole {
    pub const ALL: [MfRole; MF_COUNT] = [
        MfRole::TotFwdPkts,
        MfRole::TotBwdPkts,
        MfRole::TotLenFwdPkts,
        MfRole::TotLenBwdPkts,
        MfRole::FlowDuration,
    ];

    /// Canonical CICFlowMeter column name.
    pub fn column_name(self) -> &'static str {
        match self {
            MfRole::TotFwdPkts => "Tot Fwd Pkts",
            MfRole::TotBwdPkts => "Tot Bwd Pkts",
            MfRole::TotLenFwdPkts => "TotLen Fwd Pkts",
            MfRole::TotLenBwdPkts => "TotLen Bwd Pkts",
            MfRole::FlowDuration => "Flow Duration",
        }
    }
}

/// The fixed catalogue of recalculation formulas for related features.
///
/// Each related feature is a deterministic function of the modified features,
/// evaluated in raw units (packets, bytes, microseconds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RfFormula {
    FwdPktsPerSec,
    BwdPktsPerSec,
    FlowPktsPerSec,
    FlowBytsPerSec,
    PktSizeAvg,
    FwdSegSizeAvg,
    BwdSegSizeAvg,
    DownUpRatio,
}

impl RfFormula {
    pub const ALL: [RfFormula; RF_COUNT] = [
        RfFormula::FwdPktsPerSec,
        RfFormula::BwdPktsPerSec,
        RfFormula::FlowPktsPerSec,
        RfFormula::FlowBytsPerSec,
        RfFormula::PktSizeAvg,
        RfFormula::FwdSegSizeAvg,
        RfFormula::BwdSegSizeAvg,
        RfFormula::DownUpRatio,
    ];

    pub fn column_name(self) -> &'static str {
        match self {
            RfFormula::FwdPktsPerSec => "Fwd Pkts/s",
            RfFormula::BwdPktsPerSec => "Bwd Pkts/s",
            RfFormula::FlowPktsPerSec => "Flow Pkts/s",
            RfFormula::FlowBytsPerSec => "Flow Byts/s",
            RfFormula::PktSizeAvg => "Pkt Size Avg",
            RfFormula::FwdSegSizeAvg => "Fwd Seg Size Avg",
            RfFormula::BwdSegSizeAvg => "Bwd Seg Size Avg",
            RfFormula::DownUpRatio => "Down/Up Ratio",
        }
    }
}

/// Group membership of one feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureGroup {
    /// Freely perturbable, clamped to the valid range.
    Modified(MfRole),
    /// Recalculated from the modified features.
    Related(RfFormula),
    /// Restored to the original value after any perturbation.
    Unmodified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureKind {
    Numeric,
    /// A 0/1 column produced by one-hot encoding a categorical raw column.
    /// One-hot bits are never perturbed, so they must be `Unmodified`.
    OneHotDerived,
}

/// Descriptor of one feature column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDesc {
    pub name: String,
    pub group: FeatureGroup,
    pub raw_min: f64,
    pub raw_max: f64,
    pub kind: FeatureKind,
}

/// Ordered feature descriptors plus the label column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub features: Vec<FeatureDesc>,
    pub label_name: String,
}

impl FeatureSchema {
    pub fn new(features: Vec<FeatureDesc>, label_name: impl Into<String>) -> Result<Self> {
        let schema = FeatureSchema {
            features,
            label_name: label_name.into(),
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Check the structural invariants: 76 columns, each modified role and
    /// each related formula bound exactly once, sane ranges, one-hot bits
    /// unmodified.
    pub fn validate(&self) -> Result<()> {
        if self.features.len() != FEATURE_COUNT {
            return Err(Error::Schema(format!(
                "expected {} feature columns, got {}",
                FEATURE_COUNT,
                self.features.len()
            )));
        }
        let mut mf_seen = [false; MF_COUNT];
        let mut rf_seen = [false; RF_COUNT];
        for desc in &self.features {
            if !desc.raw_min.is_finite() || !desc.raw_max.is_finite() {
                return Err(Error::Schema(format!(
                    "feature '{}' has non-finite raw range",
                    desc.name
                )));
            }
            if desc.raw_min > desc.raw_max {
                return Err(Error::Schema(format!(
                    "feature '{}' has raw_min > raw_max",
                    desc.name
                )));
            }
            match desc.group {
                FeatureGroup::Modified(role) => {
                    let i = MfRole::ALL.iter().position(|r| *r == role).unwrap();
                    if mf_seen[i] {
                        return Err(Error::Schema(format!(
                            "modified role {:?} bound more than once",
                            role
                        )));
                    }
                    mf_seen[i] = true;
                    if desc.raw_min < 0.0 {
                        return Err(Error::Schema(format!(
                            "modified feature '{}' must have a nonnegative raw range",
                            desc.name
                        )));
                    }
                    if desc.kind == FeatureKind::OneHotDerived {
                        return Err(Error::Schema(format!(
                            "one-hot feature '{}' cannot be in the modified group",
                            desc.name
                        )));
                    }
                }
                FeatureGroup::Related(f) => {
                    let i = RfFormula::ALL.iter().position(|r| *r == f).unwrap();
                    if rf_seen[i] {
                        return Err(Error::Schema(format!(
                            "related formula {:?} bound more than once",
                            f
                        )));
                    }
                    rf_seen[i] = true;
                    if desc.kind == FeatureKind::OneHotDerived {
                        return Err(Error::Schema(format!(
                            "one-hot feature '{}' cannot be in the related group",
                            desc.name
                        )));
                    }
                }
                FeatureGroup::Unmodified => {}
            }
        }
        if mf_seen.iter().any(|s| !s) {
            return Err(Error::Schema(
                "schema must bind all five modified feature roles".into(),
            ));
        }
        if rf_seen.iter().any(|s| !s) {
            return Err(Error::Schema(
                "schema must bind all eight related feature formulas".into(),
            ));
        }
        Ok(())
    }

    /// Index of the feature bound to the given modified role.
    pub fn mf_index(&self, role: MfRole) -> usize {
        self.features
            .iter()
            .position(|d| d.group == FeatureGroup::Modified(role))
            .expect("validated schema binds every modified role")
    }

    /// Indices of the modified features in canonical role order.
    pub fn mf_indices(&self) -> [usize; MF_COUNT] {
        let mut out = [0usize; MF_COUNT];
        for (k, role) in MfRole::ALL.iter().enumerate() {
            out[k] = self.mf_index(*role);
        }
        out
    }

    /// Index of the feature bound to the given related formula.
    pub fn rf_index(&self, formula: RfFormula) -> usize {
        self.features
            .iter()
            .position(|d| d.group == FeatureGroup::Related(formula))
            .expect("validated schema binds every related formula")
    }

    /// Indices of the related features in catalogue order.
    pub fn rf_indices(&self) -> [usize; RF_COUNT] {
        let mut out = [0usize; RF_COUNT];
        for (k, f) in RfFormula::ALL.iter().enumerate() {
            out[k] = self.rf_index(*f);
        }
        out
    }

    /// Indices of unmodified features, ascending.
    pub fn uf_indices(&self) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, d)| d.group == FeatureGroup::Unmodified)
            .map(|(i, _)| i)
            .collect()
    }

    /// Min-max map of one raw value into \[0,1\]. Constant columns map to 0.
    pub fn normalize(&self, index: usize, raw: f64) -> f64 {
        let d = &self.features[index];
        let span = d.raw_max - d.raw_min;
        if span == 0.0 {
            0.0
        } else {
            (raw - d.raw_min) / span
        }
    }

    /// Inverse of `normalize`.
    pub fn denormalize(&self, index: usize, x: f64) -> f64 {
        let d = &self.features[index];
        d.raw_min + x * (d.raw_max - d.raw_min)
    }

    /// Fingerprint of the schema contents, for artifact cross-checks.
    pub fn schema_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        content_hash(&bytes)
    }
}
