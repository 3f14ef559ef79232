//! Desk-scale synthetic flow generator.
//!
//! Benign traffic is moderate; attack traffic looks flood-like: more packets
//! and bytes in both directions at comparable durations, a different protocol
//! mix, and a mild shift on a handful of context features. The separation
//! parameter scales every class-mean gap, so 0 produces indistinguishable
//! classes. Related-feature columns are computed exactly from the modified
//! features, so every generated row satisfies the recalculation identities.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::constraint::recalc_related;
use crate::error::{Error, Result};
use crate::ingest::RawTable;
use crate::profiles::{synthetic_mf_ranges, synthetic_profile, SYNTH_PROTO_CATEGORIES, SYNTH_UF_NUMERIC};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_benign: usize,
    pub n_attack: usize,
    /// Class-mean gap in feature-noise units; 0 = indistinguishable classes.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_benign: 1500,
            n_attack: 1000,
            separation: 3.0,
            seed: 42,
        }
    }
}

/// Number of context features that carry class signal (the rest are noise).
const INFORMATIVE_UF: usize = 8;

/// Per-class modified-feature distributions: (benign mean, per-separation
/// shift, standard deviation), in the canonical role order. The attack
/// signature is an asymmetric flood: many forward packets and bytes with a
/// starved backward direction, as in a SYN-flood-style campaign.
const MF_PARAMS: [(f64, f64, f64); 5] = [
    (120.0, 60.0, 60.0),             // Tot Fwd Pkts (more under attack)
    (100.0, -25.0, 40.0),            // Tot Bwd Pkts (fewer under attack)
    (60_000.0, 10_000.0, 30_000.0),  // TotLen Fwd Pkts (more under attack)
    (50_000.0, -12_000.0, 20_000.0), // TotLen Bwd Pkts (fewer under attack)
    (50_000_000.0, 0.0, 20_000_000.0), // Flow Duration (no class signal)
];

const PROTO_MIX_BENIGN: [f64; 3] = [0.70, 0.25, 0.05];
const PROTO_MIX_ATTACK: [f64; 3] = [0.30, 0.60, 0.10];

fn normal(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> f64 {
    // Box-Muller; one draw per call keeps the stream layout simple.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn categorical(rng: &mut ChaCha8Rng, weights: &[f64; 3]) -> usize {
    let u: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Generate a raw flow table in the synthetic profile's columns.
pub fn synth_generate(cfg: &SynthConfig) -> Result<RawTable> {
    if cfg.n_benign == 0 || cfg.n_attack == 0 {
        return Err(Error::Config(
            "synthetic generation needs at least one row of each class".into(),
        ));
    }
    if !cfg.separation.is_finite() || cfg.separation < 0.0 {
        return Err(Error::Config("separation must be finite and nonnegative".into()));
    }
    let profile = synthetic_profile();
    let mf_ranges = synthetic_mf_ranges();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut table = RawTable {
        numeric_names: profile.numeric_columns().into_iter().map(|(n, _)| n).collect(),
        categorical_names: vec!["Protocol".into()],
        numeric: Vec::with_capacity(cfg.n_benign + cfg.n_attack),
        categorical: Vec::with_capacity(cfg.n_benign + cfg.n_attack),
        labels: Vec::with_capacity(cfg.n_benign + cfg.n_attack),
    };

    for (count, is_attack) in [(cfg.n_benign, false), (cfg.n_attack, true)] {
        for _ in 0..count {
            let mut mf = [0.0f64; 5];
            for (k, (mean, shift, sd)) in MF_PARAMS.iter().enumerate() {
                let m = if is_attack { mean + shift * cfg.separation } else { *mean };
                let (lo, hi) = mf_ranges[k];
                mf[k] = normal(&mut rng, m, *sd).clamp(lo, hi).round();
            }
            let rf = recalc_related(&mf)?;

            let mut row = Vec::with_capacity(5 + 8 + SYNTH_UF_NUMERIC);
            row.extend_from_slice(&mf);
            row.extend_from_slice(&rf);
            for i in 0..SYNTH_UF_NUMERIC {
                let v = if i < INFORMATIVE_UF {
                    let mean = if is_attack { 0.45 + 0.04 * cfg.separation } else { 0.45 };
                    normal(&mut rng, mean, 0.12)
                } else {
                    normal(&mut rng, 0.5, 0.15)
                };
                row.push(v.clamp(0.0, 1.0));
            }
            table.numeric.push(row);

            let mix = if is_attack { &PROTO_MIX_ATTACK } else { &PROTO_MIX_BENIGN };
            let proto = SYNTH_PROTO_CATEGORIES[categorical(&mut rng, mix)];
            table.categorical.push(vec![proto.to_string()]);
            table.labels.push(if is_attack { "Attack".into() } else { "Benign".into() });
        }
    }
    Ok(table)
}
