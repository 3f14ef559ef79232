//! Per-input targeted attacks under an L∞ budget.
//!
//! Both attacks aim at the benign label on malicious rows. Constrained mode
//! masks the gradient step to the modified features and routes every
//! candidate through constraint enforcement; unconstrained mode perturbs all
//! coordinates freely and only clips into the unit box. The iterative attack
//! applies constraints inside the loop so that every gradient is taken at a
//! feasible point, and exits early once the model predicts the target label.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::constraint::ConstraintEngine;
use crate::error::{Error, Result};
use crate::loss::{loss_and_input_grad, signed_step, LossConfig, LossKind};
use crate::net::QNetwork;
use crate::uap::project_linf_inplace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    /// L∞ budget on normalized features.
    pub epsilon: f64,
    /// Label the attack drives predictions toward (benign).
    pub target_label: usize,
    /// Step divisor for the iterative attack: step size = epsilon / bim_steps.
    pub bim_steps: u32,
    /// Iteration cap for the iterative attack.
    pub bim_max_iter: u32,
    /// Mask + range clamp + related-feature recalculation when set.
    pub constrained: bool,
}

impl AttackConfig {
    pub fn new(epsilon: f64) -> Self {
        AttackConfig {
            epsilon,
            target_label: 0,
            bim_steps: 20,
            bim_max_iter: 100,
            constrained: true,
        }
    }

    pub fn unconstrained(epsilon: f64) -> Self {
        AttackConfig {
            constrained: false,
            ..AttackConfig::new(epsilon)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::Config("epsilon must be finite and nonnegative".into()));
        }
        if self.bim_steps == 0 {
            return Err(Error::Config("bim_steps must be positive".into()));
        }
        if self.target_label > 1 {
            return Err(Error::Config("target label must be 0 or 1".into()));
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        self.epsilon / self.bim_steps as f64
    }
}

/// A feature-space perturbation in normalized coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub delta: Vec<f64>,
    pub epsilon: f64,
    /// Whether the perturbation was generated under the modified-feature mask.
    pub constrained: bool,
}

impl Perturbation {
    pub fn linf_norm(&self) -> f64 {
        self.delta.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMethod {
    Fgsm,
    Bim,
}

impl fmt::Display for AttackMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackMethod::Fgsm => f.write_str("fgsm"),
            AttackMethod::Bim => f.write_str("bim"),
        }
    }
}

impl FromStr for AttackMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fgsm" => Ok(AttackMethod::Fgsm),
            "bim" => Ok(AttackMethod::Bim),
            other => Err(Error::Config(format!(
                "unknown attack method '{other}' (expected fgsm|bim)"
            ))),
        }
    }
}

fn clamp_unit(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        *x = x.clamp(0.0, 1.0);
    }
    v
}

/// Make a candidate feasible under the attack's constraint mode.
fn feasible(engine: &ConstraintEngine, cfg: &AttackConfig, x: &[f64], cand: Vec<f64>) -> Vec<f64> {
    if cfg.constrained {
        engine.apply_constraints(x, &cand)
    } else {
        clamp_unit(cand)
    }
}

/// One-step targeted gradient-sign attack with the full budget.
pub fn fgsm_targeted(
    net: &QNetwork,
    x: &[f64],
    cfg: &AttackConfig,
    engine: &ConstraintEngine,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    let zeros = vec![0.0; x.len()];
    let (_, grad) = loss_and_input_grad(
        net,
        x,
        &zeros,
        LossKind::CeTargeted,
        &LossConfig::default(),
        cfg.target_label,
    )?;
    let mask = cfg.constrained.then(|| engine.perturbation_mask());
    let step = signed_step(&grad, LossKind::CeTargeted.direction(), cfg.epsilon, mask);
    let cand: Vec<f64> = x.iter().zip(&step).map(|(a, d)| a + d).collect();
    Ok(feasible(engine, cfg, x, cand))
}

/// Iterative targeted attack: small clipped sign steps with constraints
/// enforced every iteration, stopping at the target label or the cap.
pub fn bim_targeted(
    net: &QNetwork,
    x: &[f64],
    cfg: &AttackConfig,
    engine: &ConstraintEngine,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if cfg.epsilon == 0.0 {
        // zero budget: constraint application alone
        return Ok(feasible(engine, cfg, x, x.to_vec()));
    }
    let alpha = cfg.step_size();
    let mask = cfg.constrained.then(|| engine.perturbation_mask());
    let mut delta = vec![0.0; x.len()];
    let mut current = feasible(engine, cfg, x, x.to_vec());
    let zeros = vec![0.0; x.len()];
    for _ in 0..cfg.bim_max_iter {
        if net.forward(&current)?.predicted() == cfg.target_label {
            break;
        }
        let (_, grad) = loss_and_input_grad(
            net,
            &current,
            &zeros,
            LossKind::CeTargeted,
            &LossConfig::default(),
            cfg.target_label,
        )?;
        let step = signed_step(&grad, LossKind::CeTargeted.direction(), alpha, mask);
        for (d, s) in delta.iter_mut().zip(&step) {
            *d += s;
        }
        project_linf_inplace(&mut delta, cfg.epsilon);
        let cand: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
        current = feasible(engine, cfg, x, cand);
    }
    Ok(current)
}

pub fn attack_row(
    net: &QNetwork,
    x: &[f64],
    method: AttackMethod,
    cfg: &AttackConfig,
    engine: &ConstraintEngine,
) -> Result<Vec<f64>> {
    match method {
        AttackMethod::Fgsm => fgsm_targeted(net, x, cfg, engine),
        AttackMethod::Bim => bim_targeted(net, x, cfg, engine),
    }
}
