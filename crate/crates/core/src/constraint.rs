//! Domain-constraint enforcement for adversarial candidates.
//!
//! A candidate adversarial example is made valid in three moves:
//! modified features are clamped to their valid range, related features are
//! recalculated from the (denormalized) modified features, and unmodified
//! features are restored byte-for-byte from the original row.
//!
//! Recalculation always happens in raw units (packets, bytes, microseconds);
//! composing the formulas with the affine normalization would silently change
//! them.

use crate::error::{Error, Result};
use crate::schema::{FeatureSchema, RfFormula, FEATURE_COUNT, MF_COUNT, RF_COUNT};

/// Raw modified-feature values in canonical role order:
/// `[tot_fwd_pkts, tot_bwd_pkts, totlen_fwd_pkts, totlen_bwd_pkts, flow_duration_us]`.
pub type RawMf = [f64; MF_COUNT];

/// Raw related-feature values in catalogue order (see [`RfFormula::ALL`]).
pub type RawRf = [f64; RF_COUNT];

impl RfFormula {
    /// Evaluate this formula on raw modified-feature values.
    ///
    /// Degenerate denominators: the flow duration is floored to 1 µs, and a
    /// zero packet count sends the corresponding average or ratio to 0.
    pub fn eval(self, mf: &RawMf) -> f64 {
        let [tot_fwd, tot_bwd, len_fwd, len_bwd, duration] = *mf;
        let dur = duration.max(1.0);
        match self {
            RfFormula::FwdPktsPerSec => tot_fwd * 1e6 / dur,
            RfFormula::BwdPktsPerSec => tot_bwd * 1e6 / dur,
            RfFormula::FlowPktsPerSec => tot_fwd * 1e6 / dur + tot_bwd * 1e6 / dur,
            RfFormula::FlowBytsPerSec => (len_fwd + len_bwd) * 1e6 / dur,
            RfFormula::PktSizeAvg => {
                if tot_fwd + tot_bwd > 0.0 {
                    (len_fwd + len_bwd) / (tot_fwd + tot_bwd)
                } else {
                    0.0
                }
            }
            RfFormula::FwdSegSizeAvg => {
                if tot_fwd > 0.0 {
                    len_fwd / tot_fwd
                } else {
                    0.0
                }
            }
            RfFormula::BwdSegSizeAvg => {
                if tot_bwd > 0.0 {
                    len_bwd / tot_bwd
                } else {
                    0.0
                }
            }
            RfFormula::DownUpRatio => {
                if tot_fwd > 0.0 {
                    (tot_bwd / tot_fwd).floor()
                } else {
                    0.0
                }
            }
        }
    }

    /// Interval image of this formula over a box of modified-feature ranges,
    /// honoring the same degenerate-denominator rules. Used to build preset
    /// schemas whose related-feature ranges can never clamp.
    pub fn envelope(self, mf_ranges: &[(f64, f64); MF_COUNT]) -> (f64, f64) {
        let lo: RawMf = [
            mf_ranges[0].0,
            mf_ranges[1].0,
            mf_ranges[2].0,
            mf_ranges[3].0,
            mf_ranges[4].1, // max duration minimizes rates
        ];
        let hi: RawMf = [
            mf_ranges[0].1,
            mf_ranges[1].1,
            mf_ranges[2].1,
            mf_ranges[3].1,
            mf_ranges[4].0, // min duration maximizes rates
        ];
        match self {
            RfFormula::FwdPktsPerSec
            | RfFormula::BwdPktsPerSec
            | RfFormula::FlowPktsPerSec
            | RfFormula::FlowBytsPerSec => (self.eval(&lo).min(0.0), self.eval(&hi)),
            RfFormula::PktSizeAvg => {
                // minimized by min lengths over max counts, maximized by the reverse
                let min = RfFormula::PktSizeAvg.eval(&[
                    mf_ranges[0].1,
                    mf_ranges[1].1,
                    mf_ranges[2].0,
                    mf_ranges[3].0,
                    1.0,
                ]);
                let max = RfFormula::PktSizeAvg.eval(&[
                    mf_ranges[0].0,
                    mf_ranges[1].0,
                    mf_ranges[2].1,
                    mf_ranges[3].1,
                    1.0,
                ]);
                (min.min(0.0), max)
            }
            RfFormula::FwdSegSizeAvg => {
                let min = RfFormula::FwdSegSizeAvg.eval(&[mf_ranges[0].1, 0.0, mf_ranges[2].0, 0.0, 1.0]);
                let max = RfFormula::FwdSegSizeAvg.eval(&[mf_ranges[0].0, 0.0, mf_ranges[2].1, 0.0, 1.0]);
                (min.min(0.0), max)
            }
            RfFormula::BwdSegSizeAvg => {
                let min = RfFormula::BwdSegSizeAvg.eval(&[0.0, mf_ranges[1].1, 0.0, mf_ranges[3].0, 1.0]);
                let max = RfFormula::BwdSegSizeAvg.eval(&[0.0, mf_ranges[1].0, 0.0, mf_ranges[3].1, 1.0]);
                (min.min(0.0), max)
            }
            RfFormula::DownUpRatio => {
                let max = if mf_ranges[0].0 > 0.0 {
                    (mf_ranges[1].1 / mf_ranges[0].0).floor()
                } else {
                    0.0
                };
                (0.0, max)
            }
        }
    }
}

/// Compute all eight related-feature values from the raw modified features.
pub fn recalc_related(raw_mf: &RawMf) -> Result<RawRf> {
    for v in raw_mf {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput);
        }
        if *v < 0.0 {
            return Err(Error::Invalid(format!(
                "negative raw modified-feature value {v}"
            )));
        }
    }
    let mut out = [0.0; RF_COUNT];
    for (k, f) in RfFormula::ALL.iter().enumerate() {
        out[k] = f.eval(raw_mf);
    }
    Ok(out)
}

/// Precomputed index sets and mask for one schema.
///
/// Pure functions over an immutable schema; free to share across threads.
#[derive(Debug, Clone)]
pub struct ConstraintEngine {
    schema: FeatureSchema,
    mf: [usize; MF_COUNT],
    rf: [usize; RF_COUNT],
    mask: Vec<f64>,
}

impl ConstraintEngine {
    pub fn new(schema: &FeatureSchema) -> Result<Self> {
        schema.validate()?;
        let mf = schema.mf_indices();
        let rf = schema.rf_indices();
        let mut mask = vec![0.0; FEATURE_COUNT];
        for &i in &mf {
            mask[i] = 1.0;
        }
        Ok(ConstraintEngine {
            schema: schema.clone(),
            mf,
            rf,
            mask,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn mf_indices(&self) -> &[usize; MF_COUNT] {
        &self.mf
    }

    pub fn rf_indices(&self) -> &[usize; RF_COUNT] {
        &self.rf
    }

    /// 0/1 vector with ones exactly at the modified-feature coordinates.
    pub fn perturbation_mask(&self) -> &[f64] {
        &self.mask
    }

    /// Enforce the domain constraints on a candidate adversarial example.
    ///
    /// Modified coordinates come from `x_cand` clamped to \[0,1\]; related
    /// coordinates are recalculated from the clamped modified values; every
    /// other coordinate is copied from `x_orig` unchanged. The returned
    /// counter reports related values that fell outside the schema's fitted
    /// range and had to be clamped.
    pub fn apply_constraints_counted(&self, x_orig: &[f64], x_cand: &[f64]) -> (Vec<f64>, u32) {
        debug_assert_eq!(x_orig.len(), FEATURE_COUNT);
        debug_assert_eq!(x_cand.len(), FEATURE_COUNT);
        let mut out = x_orig.to_vec();

        let mut raw_mf = [0.0; MF_COUNT];
        for (k, &i) in self.mf.iter().enumerate() {
            let clamped = x_cand[i].clamp(0.0, 1.0);
            out[i] = clamped;
            raw_mf[k] = self.schema.denormalize(i, clamped);
        }

        let mut rf_clamped = 0u32;
        for (k, f) in RfFormula::ALL.iter().enumerate() {
            let raw = f.eval(&raw_mf);
            let i = self.rf[k];
            let norm = self.schema.normalize(i, raw);
            if !(0.0..=1.0).contains(&norm) {
                rf_clamped += 1;
            }
            out[i] = norm.clamp(0.0, 1.0);
        }
        (out, rf_clamped)
    }

    /// `apply_constraints_counted` without the clamp counter.
    pub fn apply_constraints(&self, x_orig: &[f64], x_cand: &[f64]) -> Vec<f64> {
        self.apply_constraints_counted(x_orig, x_cand).0
    }
}
