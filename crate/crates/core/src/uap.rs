//! Universal perturbation generation.
//!
//! A small seedset is sampled from the training set once. Each outer
//! iteration shuffles it and, for every seed the current perturbation does
//! not already fool, accumulates one full-budget targeted gradient-sign step
//! of the configured loss into the perturbation, projecting back onto the
//! L∞ ball after every update. The loop stops when the training-set fooling
//! rate reaches its target or the iteration cap.
//!
//! The accumulated vector lives on the modified features only; related
//! features move per applied row, through constraint enforcement.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::attack::Perturbation;
use crate::constraint::ConstraintEngine;
use crate::dataset::FlowDataset;
use crate::error::{Error, Result};
use crate::loss::{loss_and_input_grad, signed_step, LossConfig, LossKind};
use crate::net::QNetwork;
use crate::seeds;
use crate::trainer::predictions;

/// The attack drives predictions toward the benign label.
const BENIGN_TARGET: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UapConfig {
    /// Fraction of the training set sampled into the seedset.
    pub seed_fraction: f64,
    /// Complement of the target fooling rate: stop once fr >= 1 - delta_target.
    pub delta_target: f64,
    pub max_iter: u32,
    /// L∞ budget in normalized coordinates.
    pub epsilon: f64,
    pub loss: LossKind,
    pub seed: u64,
}

impl UapConfig {
    pub fn new(epsilon: f64, loss: LossKind, seed: u64) -> Self {
        UapConfig {
            seed_fraction: 0.001,
            delta_target: 0.2,
            max_iter: 10,
            epsilon,
            loss,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.seed_fraction > 0.0 && self.seed_fraction <= 1.0) {
            return Err(Error::Config("seed fraction must lie in (0,1]".into()));
        }
        if !(self.delta_target > 0.0 && self.delta_target <= 1.0) {
            return Err(Error::Config("delta target must lie in (0,1]".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config("epsilon must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

/// A generated universal perturbation with its generation trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UapResult {
    pub uap: Perturbation,
    /// Training-set fooling rate after each outer iteration.
    pub fooling_rate_history: Vec<f64>,
    pub iterations_used: u32,
    pub seedset: Vec<usize>,
    pub config: UapConfig,
}

/// Clamp every coordinate into \[-eps, +eps\].
pub fn project_linf(v: &[f64], eps: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    project_linf_inplace(&mut out, eps);
    out
}

pub fn project_linf_inplace(v: &mut [f64], eps: f64) {
    for x in v.iter_mut() {
        *x = x.clamp(-eps, eps);
    }
}

fn predict_perturbed(
    net: &QNetwork,
    engine: &ConstraintEngine,
    row: &[f64],
    uap: &[f64],
) -> Result<u8> {
    let cand: Vec<f64> = row.iter().zip(uap).map(|(a, d)| a + d).collect();
    let adv = engine.apply_constraints(row, &cand);
    Ok(net.forward(&adv)?.predicted() as u8)
}

fn fooling_rate_against(
    net: &QNetwork,
    dataset: &FlowDataset,
    uap: &[f64],
    engine: &ConstraintEngine,
    clean_preds: &[u8],
) -> Result<f64> {
    let mut flipped = 0usize;
    for (i, &clean) in clean_preds.iter().enumerate() {
        if predict_perturbed(net, engine, dataset.row(i), uap)? != clean {
            flipped += 1;
        }
    }
    Ok(flipped as f64 / dataset.len() as f64)
}

/// Fraction of rows whose prediction changes when the perturbation is applied
/// through constraint enforcement.
pub fn fooling_rate(
    net: &QNetwork,
    dataset: &FlowDataset,
    uap: &[f64],
    engine: &ConstraintEngine,
) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::Invalid("cannot compute a fooling rate over no rows".into()));
    }
    let clean = predictions(net, dataset)?;
    fooling_rate_against(net, dataset, uap, engine, &clean)
}

/// Apply a universal perturbation to every row, constraints enforced per row.
pub fn apply_uap(
    dataset: &FlowDataset,
    uap: &[f64],
    engine: &ConstraintEngine,
) -> Result<FlowDataset> {
    let mut data = Vec::with_capacity(dataset.len() * uap.len());
    for i in 0..dataset.len() {
        let row = dataset.row(i);
        let cand: Vec<f64> = row.iter().zip(uap).map(|(a, d)| a + d).collect();
        data.extend_from_slice(&engine.apply_constraints(row, &cand));
    }
    FlowDataset::new(dataset.schema.clone(), data, dataset.labels().to_vec())
}

/// Generate one universal perturbation.
pub fn generate_uap(
    net: &QNetwork,
    train: &FlowDataset,
    cfg: &UapConfig,
    loss_cfg: &LossConfig,
    engine: &ConstraintEngine,
) -> Result<UapResult> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("cannot seed a universal perturbation from an empty training set".into()));
    }
    let size = ((cfg.seed_fraction * train.len() as f64).round() as usize).max(1);
    let mut rng = seeds::rng(cfg.seed, "uap-generation", 0);
    let mut all: Vec<usize> = (0..train.len()).collect();
    all.shuffle(&mut rng);
    let mut seedset: Vec<usize> = all.into_iter().take(size).collect();
    let seedset_snapshot = seedset.clone();

    let clean_preds = predictions(net, train)?;
    let mask = engine.perturbation_mask().to_vec();
    let dim = train.row(0).len();
    let mut uap = vec![0.0f64; dim];
    let mut fr = 0.0f64;
    let mut iterations = 0u32;
    let mut history = Vec::new();

    while fr < 1.0 - cfg.delta_target && iterations < cfg.max_iter {
        seedset.shuffle(&mut rng);
        for &idx in &seedset {
            let row = train.row(idx);
            let perturbed_pred = predict_perturbed(net, engine, row, &uap)?;
            if perturbed_pred != clean_preds[idx] {
                continue; // already fooled by the deployable perturbation
            }
            match loss_and_input_grad(net, row, &uap, cfg.loss, loss_cfg, BENIGN_TARGET) {
                Ok((_, grad)) => {
                    let step = signed_step(&grad, cfg.loss.direction(), cfg.epsilon, Some(&mask));
                    for (u, s) in uap.iter_mut().zip(&step) {
                        *u += s;
                    }
                    project_linf_inplace(&mut uap, cfg.epsilon);
                }
                // degenerate seeds contribute nothing
                Err(Error::DegenerateGradient { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        iterations += 1;
        fr = fooling_rate_against(net, train, &uap, engine, &clean_preds)?;
        history.push(fr);
    }

    Ok(UapResult {
        uap: Perturbation {
            delta: uap,
            epsilon: cfg.epsilon,
            constrained: true,
        },
        fooling_rate_history: history,
        iterations_used: iterations,
        seedset: seedset_snapshot,
        config: cfg.clone(),
    })
}

const UAP_FORMAT: &str = "uapflow.uap";
const UAP_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct UapFile {
    format: String,
    version: u32,
    result: UapResult,
}

pub fn save_uap(path: &Path, result: &UapResult) -> Result<()> {
    let file = UapFile {
        format: UAP_FORMAT.into(),
        version: UAP_VERSION,
        result: result.clone(),
    };
    std::fs::write(path, serde_json::to_vec(&file)?)?;
    Ok(())
}

pub fn load_uap(path: &Path) -> Result<UapResult> {
    let bytes = std::fs::read(path)?;
    let file: UapFile = serde_json::from_slice(&bytes)?;
    if file.format != UAP_FORMAT || file.version != UAP_VERSION {
        return Err(Error::FileVersion {
            kind: "uap",
            found: file.version,
            expected: UAP_VERSION,
        });
    }
    Ok(file.result)
}
