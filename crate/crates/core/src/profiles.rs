//! Built-in dataset profiles.
//!
//! A profile fixes everything the pipeline needs to turn raw rows into the
//! 76-feature space: which raw columns are kept, which categorical column is
//! one-hot encoded (one-hot bits are always unmodified), the group of every
//! final feature, and (for the synthetic profile) preset raw ranges chosen
//! so that recalculated related features can never leave the normalization
//! range.
//!
//! Alternate datasets can supply their own profile as a JSON file with the
//! same structure instead of using the built-ins.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};
use crate::schema::{
    FeatureDesc, FeatureGroup, FeatureKind, FeatureSchema, MfRole, RfFormula, MF_COUNT,
};

/// Where one final feature's raw value comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CsvSource {
    /// A numeric raw column. `rate` marks columns where CICFlowMeter emits
    /// "Infinity"/"NaN" artifacts that are substituted rather than skipped.
    Numeric { column: String, rate: bool },
    /// One bit of a one-hot encoded categorical column.
    OneHot { column: String, category: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileFeature {
    pub name: String,
    pub group: FeatureGroup,
    pub source: CsvSource,
}

/// Mapping from raw tabular data to the final feature space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub name: String,
    pub label_column: String,
    /// Label token mapped to class 0; every other label is class 1.
    pub benign_label: String,
    pub features: Vec<ProfileFeature>,
    /// Raw ranges to freeze instead of fitting from data, when present.
    pub preset_ranges: Option<Vec<(f64, f64)>>,
}

impl DatasetProfile {
    /// Names of the numeric raw columns this profile reads, with rate flags.
    pub fn numeric_columns(&self) -> Vec<(String, bool)> {
        let mut out: Vec<(String, bool)> = Vec::new();
        for f in &self.features {
            if let CsvSource::Numeric { column, rate } = &f.source {
                if !out.iter().any(|(c, _)| c == column) {
                    out.push((column.clone(), *rate));
                }
            }
        }
        out
    }

    /// Names of the categorical raw columns this profile one-hot encodes.
    pub fn categorical_columns(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for f in &self.features {
            if let CsvSource::OneHot { column, .. } = &f.source {
                if !out.iter().any(|c| c == column) {
                    out.push(column.clone());
                }
            }
        }
        out
    }

    /// Build the feature schema with the given raw ranges (same order as
    /// `features`). One-hot bits always get the range \[0,1\].
    pub fn schema_with_ranges(&self, ranges: &[(f64, f64)]) -> Result<FeatureSchema> {
        if ranges.len() != self.features.len() {
            return Err(Error::Schema(format!(
                "profile '{}' has {} features but {} ranges supplied",
                self.name,
                self.features.len(),
                ranges.len()
            )));
        }
        let features = self
            .features
            .iter()
            .zip(ranges)
            .map(|(f, &(lo, hi))| {
                let one_hot = matches!(f.source, CsvSource::OneHot { .. });
                FeatureDesc {
                    name: f.name.clone(),
                    group: f.group,
                    raw_min: if one_hot { 0.0 } else { lo },
                    raw_max: if one_hot { 1.0 } else { hi },
                    kind: if one_hot {
                        FeatureKind::OneHotDerived
                    } else {
                        FeatureKind::Numeric
                    },
                }
            })
            .collect();
        FeatureSchema::new(features, self.label_column.clone())
    }

    pub fn load(path: &Path) -> Result<DatasetProfile> {
        let bytes = std::fs::read(path)?;
        let profile: DatasetProfile = serde_json::from_slice(&bytes)?;
        Ok(profile)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_vec_pretty(self)?)?;
        Ok(())
    }
}

/// Look up a built-in profile by name.
pub fn builtin(name: &str) -> Option<DatasetProfile> {
    match name {
        "cicids2018" => Some(cicids2018_profile()),
        "synthetic" => Some(synthetic_profile()),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Synthetic profile
// ---------------------------------------------------------------------------

/// Raw boxes for the five modified features: forward/backward packet counts,
/// forward/backward byte totals, flow duration in microseconds. Lower bounds
/// keep every recalculation denominator at least 1.
pub fn synthetic_mf_ranges() -> [(f64, f64); MF_COUNT] {
    [
        (1.0, 1000.0),      // Tot Fwd Pkts
        (1.0, 1000.0),      // Tot Bwd Pkts
        (40.0, 2_000_000.0), // TotLen Fwd Pkts
        (40.0, 2_000_000.0), // TotLen Bwd Pkts
        (1.0, 100_000_000.0), // Flow Duration (µs)
    ]
}

pub const SYNTH_UF_NUMERIC: usize = 60;
pub const SYNTH_PROTO_CATEGORIES: [&str; 3] = ["tcp", "udp", "icmp"];

/// The synthetic profile: 5 modified + 8 related + 3 one-hot protocol bits
/// + 60 numeric unmodified features, with preset envelope ranges.
pub fn synthetic_profile() -> DatasetProfile {
    let mf_ranges = synthetic_mf_ranges();
    let mut features = Vec::new();
    let mut ranges: Vec<(f64, f64)> = Vec::new();

    for (k, role) in MfRole::ALL.iter().enumerate() {
        features.push(ProfileFeature {
            name: role.column_name().to_string(),
            group: FeatureGroup::Modified(*role),
            source: CsvSource::Numeric {
                column: role.column_name().to_string(),
                rate: false,
            },
        });
        ranges.push(mf_ranges[k]);
    }
    for formula in RfFormula::ALL {
        features.push(ProfileFeature {
            name: formula.column_name().to_string(),
            group: FeatureGroup::Related(formula),
            source: CsvSource::Numeric {
                column: formula.column_name().to_string(),
                rate: true,
            },
        });
        ranges.push(formula.envelope(&mf_ranges));
    }
    for cat in SYNTH_PROTO_CATEGORIES {
        features.push(ProfileFeature {
            name: format!("Protocol={cat}"),
            group: FeatureGroup::Unmodified,
            source: CsvSource::OneHot {
                column: "Protocol".into(),
                category: cat.into(),
            },
        });
        ranges.push((0.0, 1.0));
    }
    for i in 0..SYNTH_UF_NUMERIC {
        features.push(ProfileFeature {
            name: format!("Ctx {i:02}"),
            group: FeatureGroup::Unmodified,
            source: CsvSource::Numeric {
                column: format!("Ctx {i:02}"),
                rate: false,
            },
        });
        ranges.push((0.0, 1.0));
    }

    DatasetProfile {
        name: "synthetic".into(),
        label_column: "Label".into(),
        benign_label: "Benign".into(),
        features,
        preset_ranges: Some(ranges),
    }
}

/// Schema of the synthetic profile (preset ranges applied).
pub fn synthetic_schema() -> FeatureSchema {
    let profile = synthetic_profile();
    let ranges = profile.preset_ranges.clone().expect("synthetic presets");
    profile
        .schema_with_ranges(&ranges)
        .expect("synthetic profile is valid")
}

// ---------------------------------------------------------------------------
// CICIDS2018 profile
// ---------------------------------------------------------------------------

/// Raw CICFlowMeter columns kept as numeric unmodified features, in CSV
/// order. Dropped relative to the raw files: Dst Port and Timestamp
/// (identifiers, not flow behavior) and the three flag counters that are
/// constant zero in this dataset (Fwd/Bwd URG Flags, CWE Flag Count).
/// Protocol is one-hot encoded instead of kept numeric.
const CICIDS_UF_NUMERIC: [&str; 60] = [
    "Fwd Pkt Len Max",
    "Fwd Pkt Len Min",
    "Fwd Pkt Len Mean",
    "Fwd Pkt Len Std",
    "Bwd Pkt Len Max",
    "Bwd Pkt Len Min",
    "Bwd Pkt Len Mean",
    "Bwd Pkt Len Std",
    "Flow IAT Mean",
    "Flow IAT Std",
    "Flow IAT Max",
    "Flow IAT Min",
    "Fwd IAT Tot",
    "Fwd IAT Mean",
    "Fwd IAT Std",
    "Fwd IAT Max",
    "Fwd IAT Min",
    "Bwd IAT Tot",
    "Bwd IAT Mean",
    "Bwd IAT Std",
    "Bwd IAT Max",
    "Bwd IAT Min",
    "Fwd PSH Flags",
    "Bwd PSH Flags",
    "Fwd Header Len",
    "Bwd Header Len",
    "Pkt Len Min",
    "Pkt Len Max",
    "Pkt Len Mean",
    "Pkt Len Std",
    "Pkt Len Var",
    "FIN Flag Cnt",
    "SYN Flag Cnt",
    "RST Flag Cnt",
    "PSH Flag Cnt",
    "ACK Flag Cnt",
    "URG Flag Cnt",
    "ECE Flag Cnt",
    "Fwd Byts/b Avg",
    "Fwd Pkts/b Avg",
    "Fwd Blk Rate Avg",
    "Bwd Byts/b Avg",
    "Bwd Pkts/b Avg",
    "Bwd Blk Rate Avg",
    "Subflow Fwd Pkts",
    "Subflow Fwd Byts",
    "Subflow Bwd Pkts",
    "Subflow Bwd Byts",
    "Init Fwd Win Byts",
    "Init Bwd Win Byts",
    "Fwd Act Data Pkts",
    "Fwd Seg Size Min",
    "Active Mean",
    "Active Std",
    "Active Max",
    "Active Min",
    "Idle Mean",
    "Idle Std",
    "Idle Max",
    "Idle Min",
];

const CICIDS_PROTOCOLS: [&str; 3] = ["0", "6", "17"];

pub fn cicids2018_profile() -> DatasetProfile {
    let mut features = Vec::new();
    for role in MfRole::ALL {
        features.push(ProfileFeature {
            name: role.column_name().to_string(),
            group: FeatureGroup::Modified(role),
            source: CsvSource::Numeric {
                column: role.column_name().to_string(),
                rate: false,
            },
        });
    }
    for formula in RfFormula::ALL {
        features.push(ProfileFeature {
            name: formula.column_name().to_string(),
            group: FeatureGroup::Related(formula),
            source: CsvSource::Numeric {
                column: formula.column_name().to_string(),
                rate: true,
            },
        });
    }
    for proto in CICIDS_PROTOCOLS {
        features.push(ProfileFeature {
            name: format!("Protocol={proto}"),
            group: FeatureGroup::Unmodified,
            source: CsvSource::OneHot {
                column: "Protocol".into(),
                category: proto.into(),
            },
        });
    }
    for col in CICIDS_UF_NUMERIC {
        features.push(ProfileFeature {
            name: col.to_string(),
            group: FeatureGroup::Unmodified,
            source: CsvSource::Numeric {
                column: col.to_string(),
                rate: false,
            },
        });
    }
    DatasetProfile {
        name: "cicids2018".into(),
        label_column: "Label".into(),
        benign_label: "Benign".into(),
        features,
        preset_ranges: None,
    }
}
