//! The catalogue of generation losses and their input gradients.
//!
//! Every attack reduces to one signed gradient step: the targeted
//! cross-entropy loss is *descended* (toward the benign label), while the
//! five custom losses are *ascended*. The catalogue carries that direction so
//! the generation loop stays uniform across losses.
//!
//! All gradients are taken with respect to the adversarial point `x + δ`.
//! The clean activations (for the cosine losses) and the perturbation's own
//! activations (for the correlation loss) are context, not variables.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::net::{ForwardTrace, GradSeed, QNetwork, HIDDEN_DIM, HIDDEN_LAYERS, OUTPUT_DIM};

pub const PD_EPS: f64 = 1e-8;

/// Which activation vector a correlation/cosine objective reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActivationSite {
    /// Post-ReLU activations of hidden layer 1..=4.
    Hidden(usize),
    /// The 2-wide pre-softmax outputs.
    QValues,
}

impl ActivationSite {
    pub fn activations<'t>(&self, trace: &'t ForwardTrace) -> &'t [f64] {
        match self {
            ActivationSite::Hidden(k) => &trace.hidden[k - 1],
            ActivationSite::QValues => &trace.qvalues,
        }
    }

    fn dim(&self) -> usize {
        match self {
            ActivationSite::Hidden(_) => HIDDEN_DIM,
            ActivationSite::QValues => OUTPUT_DIM,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ActivationSite::Hidden(k) if !(1..=HIDDEN_LAYERS).contains(k) => Err(Error::Config(
                format!("hidden layer index {k} outside 1..={HIDDEN_LAYERS}"),
            )),
            _ => Ok(()),
        }
    }
}

/// Whether the generation step descends or ascends the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepDirection {
    Descend,
    Ascend,
}

impl StepDirection {
    pub fn signum(self) -> f64 {
        match self {
            StepDirection::Descend => -1.0,
            StepDirection::Ascend => 1.0,
        }
    }
}

/// The six generation losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Cross-entropy toward the target label (descended).
    CeTargeted,
    /// Pearson correlation between activation(δ) and activation(x+δ).
    PccPertu,
    /// Sum over layers of log(mean activation + eps).
    PdMean,
    /// Sum over layers of log(L2 norm of activation + eps).
    PdL2,
    /// Negative cosine similarity to the clean activation at layer 3.
    CossimL3,
    /// Negative cosine similarity to the clean activation at layer 4.
    CossimL4,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::CeTargeted,
        LossKind::PccPertu,
        LossKind::PdMean,
        LossKind::PdL2,
        LossKind::CossimL3,
        LossKind::CossimL4,
    ];

    pub fn direction(self) -> StepDirection {
        match self {
            LossKind::CeTargeted => StepDirection::Descend,
            _ => StepDirection::Ascend,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::CeTargeted => "ce",
            LossKind::PccPertu => "pcc_pertu",
            LossKind::PdMean => "pd_mean",
            LossKind::PdL2 => "pd_l2",
            LossKind::CossimL3 => "cossim_l3",
            LossKind::CossimL4 => "cossim_l4",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(LossKind::CeTargeted),
            "pcc_pertu" => Ok(LossKind::PccPertu),
            "pd_mean" => Ok(LossKind::PdMean),
            "pd_l2" => Ok(LossKind::PdL2),
            "cossim_l3" => Ok(LossKind::CossimL3),
            "cossim_l4" => Ok(LossKind::CossimL4),
            other => Err(Error::Config(format!(
                "unknown loss '{other}' (expected ce|pcc_pertu|pd_mean|pd_l2|cossim_l3|cossim_l4)"
            ))),
        }
    }
}

/// Tunable bindings of the loss catalogue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    /// Activation site read by the correlation loss (layer 4 by default; the
    /// Q-output variant is selectable but is piecewise constant in the input
    /// and therefore useless as a gradient source).
    pub pcc_site: ActivationSite,
    /// Hidden layers aggregated by the pd losses.
    pub pd_layers: Vec<usize>,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            pcc_site: ActivationSite::Hidden(4),
            pd_layers: vec![1, 2, 3, 4],
        }
    }
}

impl LossConfig {
    fn validate(&self) -> Result<()> {
        self.pcc_site.validate()?;
        if self.pd_layers.is_empty() {
            return Err(Error::Config("pd losses need at least one layer".into()));
        }
        for k in &self.pd_layers {
            if !(1..=HIDDEN_LAYERS).contains(k) {
                return Err(Error::Config(format!(
                    "pd layer index {k} outside 1..={HIDDEN_LAYERS}"
                )));
            }
        }
        Ok(())
    }
}

/// Evaluate one loss at the adversarial point `x + delta` and return its
/// value together with the gradient with respect to that point.
///
/// For the correlation loss the perturbation itself is forwarded as an
/// independent sample; a zero-variance activation on either side is a
/// degenerate gradient, reported as an error so callers can skip the sample.
pub fn loss_and_input_grad(
    net: &QNetwork,
    x: &[f64],
    delta: &[f64],
    kind: LossKind,
    cfg: &LossConfig,
    target: usize,
) -> Result<(f64, Vec<f64>)> {
    cfg.validate()?;
    if x.len() != delta.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} coordinates", x.len()),
            got: format!("{}", delta.len()),
        });
    }
    let x_adv: Vec<f64> = x.iter().zip(delta).map(|(a, d)| a + d).collect();
    let trace = net.forward(&x_adv)?;
    let mut seed = GradSeed::default();

    let loss = match kind {
        LossKind::CeTargeted => {
            if target >= OUTPUT_DIM {
                return Err(Error::Invalid(format!("target label {target} out of range")));
            }
            for (i, dq) in seed.dq.iter_mut().enumerate() {
                *dq = trace.probs[i] - f64::from(i == target);
            }
            -trace.probs[target].ln()
        }
        LossKind::PdMean => {
            let mut total = 0.0;
            for &k in &cfg.pd_layers {
                let h = &trace.hidden[k - 1];
                let mean = h.iter().sum::<f64>() / h.len() as f64;
                total += (mean + PD_EPS).ln();
                let coeff = 1.0 / ((mean + PD_EPS) * h.len() as f64);
                seed.dhidden[k - 1] = Some(vec![coeff; h.len()]);
            }
            total
        }
        LossKind::PdL2 => {
            let mut total = 0.0;
            for &k in &cfg.pd_layers {
                let h = &trace.hidden[k - 1];
                let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
                total += (norm + PD_EPS).ln();
                if norm > 0.0 {
                    let coeff = 1.0 / (norm * (norm + PD_EPS));
                    seed.dhidden[k - 1] = Some(h.iter().map(|v| v * coeff).collect());
                }
                // a fully dead layer is locally constant: no gradient term
            }
            total
        }
        LossKind::CossimL3 | LossKind::CossimL4 => {
            let layer = if kind == LossKind::CossimL3 { 3 } else { 4 };
            let clean_trace = net.forward(x)?;
            let a = &trace.hidden[layer - 1];
            let b = &clean_trace.hidden[layer - 1];
            let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na == 0.0 || nb == 0.0 {
                return Err(Error::DegenerateGradient {
                    loss: kind.name(),
                    reason: "zero-norm activation vector",
                });
            }
            let dot: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
            let cos = dot / (na * nb);
            // d(-cos)/da = -( b/(|a||b|) - cos * a/|a|^2 )
            let grad: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(ai, bi)| -(bi / (na * nb) - cos * ai / (na * na)))
                .collect();
            seed.dhidden[layer - 1] = Some(grad);
            -cos
        }
        LossKind::PccPertu => {
            let delta_trace = net.forward(delta)?;
            let a = cfg.pcc_site.activations(&trace);
            let d = cfg.pcc_site.activations(&delta_trace);
            let n = cfg.pcc_site.dim() as f64;
            let mean_a = a.iter().sum::<f64>() / n;
            let mean_d = d.iter().sum::<f64>() / n;
            let ca: Vec<f64> = a.iter().map(|v| v - mean_a).collect();
            let cd: Vec<f64> = d.iter().map(|v| v - mean_d).collect();
            let na = ca.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nd = cd.iter().map(|v| v * v).sum::<f64>().sqrt();
            // Centering a constant vector leaves rounding residue rather than
            // an exact zero, so the variance check is relative to the raw
            // magnitude.
            let ra = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let rd = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na <= 1e-12 * ra.max(1.0) || nd <= 1e-12 * rd.max(1.0) {
                return Err(Error::DegenerateGradient {
                    loss: kind.name(),
                    reason: "zero-variance activation vector",
                });
            }
            let rho = ca.iter().zip(&cd).map(|(p, q)| p * q).sum::<f64>() / (na * nd);
            // dPCC/da, then re-centered (the mean direction carries no signal)
            let raw: Vec<f64> = ca
                .iter()
                .zip(&cd)
                .map(|(cai, cdi)| cdi / (na * nd) - rho * cai / (na * na))
                .collect();
            let mean_g = raw.iter().sum::<f64>() / n;
            let grad: Vec<f64> = raw.iter().map(|g| g - mean_g).collect();
            match cfg.pcc_site {
                ActivationSite::Hidden(k) => seed.dhidden[k - 1] = Some(grad),
                ActivationSite::QValues => seed.dq = [grad[0], grad[1]],
            }
            rho
        }
    };

    let grad = net.input_gradient_from_seed(&trace, &seed);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::DegenerateGradient {
            loss: kind.name(),
            reason: "non-finite gradient",
        });
    }
    Ok((loss, grad))
}

/// One signed, masked gradient-sign step of magnitude `eps`.
///
/// `sign(0) = 0`, so coordinates with zero gradient do not move.
pub fn signed_step(grad: &[f64], direction: StepDirection, eps: f64, mask: Option<&[f64]>) -> Vec<f64> {
    let dir = direction.signum();
    grad.iter()
        .enumerate()
        .map(|(i, g)| {
            let m = mask.map_or(1.0, |m| m[i]);
            let s = if *g > 0.0 {
                1.0
            } else if *g < 0.0 {
                -1.0
            } else {
                0.0
            };
            dir * eps * s * m
        })
        .collect()
}
