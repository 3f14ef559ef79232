//! Evaluation metrics: confusion counts, accuracy, false-negative rate, and
//! the Pearson-correlation diagnostics between activations on clean inputs,
//! perturbed inputs, and the perturbation treated as a sample of its own.

use crate::constraint::ConstraintEngine;
use crate::dataset::FlowDataset;
use crate::error::{Error, Result};
use crate::loss::ActivationSite;
use crate::net::QNetwork;

/// Binary confusion counts; attack traffic is the positive class (label 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub true_neg: usize,
    pub false_pos: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.true_neg + self.false_pos + self.false_neg
    }
}

pub fn confusion(preds: &[u8], labels: &[u8]) -> Result<ConfusionCounts> {
    if preds.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} predictions", labels.len()),
            got: format!("{}", preds.len()),
        });
    }
    if preds.is_empty() {
        return Err(Error::Invalid("cannot build a confusion matrix from no samples".into()));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &l) in preds.iter().zip(labels) {
        if p > 1 || l > 1 {
            return Err(Error::Invalid("predictions and labels must be binary".into()));
        }
        match (p, l) {
            (1, 1) => c.true_pos += 1,
            (0, 0) => c.true_neg += 1,
            (1, 0) => c.false_pos += 1,
            (0, 1) => c.false_neg += 1,
            _ => unreachable!(),
        }
    }
    Ok(c)
}

/// Accuracy and false-negative rate. FNR is undefined (None) when there are
/// no positive samples; that is distinct from an FNR of 0.
pub fn accuracy_fnr(c: &ConfusionCounts) -> (f64, Option<f64>) {
    let total = c.total();
    let accuracy = (c.true_pos + c.true_neg) as f64 / total as f64;
    let positives = c.true_pos + c.false_neg;
    let fnr = if positives == 0 {
        None
    } else {
        Some(c.false_neg as f64 / positives as f64)
    };
    (accuracy, fnr)
}

/// Pearson correlation coefficient between two equal-length vectors.
///
/// Zero variance on either side is reported as `DegeneratePcc`; callers count
/// those instances and skip them rather than folding a fake 0 into means.
pub fn pcc(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} values", x.len()),
            got: format!("{}", y.len()),
        });
    }
    if x.len() < 2 {
        return Err(Error::Invalid("Pearson correlation needs at least 2 dimensions".into()));
    }
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::DegeneratePcc);
    }
    Ok((cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0))
}

/// Aggregated PCC diagnostics of one perturbation over a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PccSummary {
    /// Mean PCC(activation(x), activation(x+δ)) over rows where defined.
    pub mean_pcc_x: Option<f64>,
    /// Mean PCC(activation(δ), activation(x+δ)) over rows where defined.
    pub mean_pcc_pertu: Option<f64>,
    /// Count of undefined-PCC instances (row × metric) that were skipped.
    pub skipped: usize,
}

/// Per-row PCC diagnostics averaged over a dataset. The perturbation is
/// input-agnostic, so its activation is computed once; each row is compared
/// against its constrained adversarial version.
pub fn pcc_metrics(
    net: &QNetwork,
    dataset: &FlowDataset,
    delta: &[f64],
    site: ActivationSite,
    engine: &ConstraintEngine,
) -> Result<PccSummary> {
    // The perturbation is forwarded as-is ("as an independent sample"); its
    // coordinates may be negative.
    let delta_trace = net.forward(delta)?;
    let act_delta = site.activations(&delta_trace).to_vec();

    let mut sum_x = 0.0;
    let mut n_x = 0usize;
    let mut sum_p = 0.0;
    let mut n_p = 0usize;
    let mut skipped = 0usize;
    for i in 0..dataset.len() {
        let row = dataset.row(i);
        let cand: Vec<f64> = row.iter().zip(delta).map(|(a, d)| a + d).collect();
        let adv = engine.apply_constraints(row, &cand);
        let clean_trace = net.forward(row)?;
        let adv_trace = net.forward(&adv)?;
        let act_clean = site.activations(&clean_trace);
        let act_adv = site.activations(&adv_trace);
        match pcc(act_clean, act_adv) {
            Ok(v) => {
                sum_x += v;
                n_x += 1;
            }
            Err(Error::DegeneratePcc) => skipped += 1,
            Err(e) => return Err(e),
        }
        match pcc(&act_delta, act_adv) {
            Ok(v) => {
                sum_p += v;
                n_p += 1;
            }
            Err(Error::DegeneratePcc) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(PccSummary {
        mean_pcc_x: (n_x > 0).then(|| sum_x / n_x as f64),
        mean_pcc_pertu: (n_p > 0).then(|| sum_p / n_p as f64),
        skipped,
    })
}
