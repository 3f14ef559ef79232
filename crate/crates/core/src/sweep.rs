//! The experiment grid: attack × epsilon × run.
//!
//! Per-input attacks perturb only the malicious test rows (the threat model
//! never touches benign traffic); universal perturbations are applied to the
//! whole test set, the way a deployed perturbation would land. Because the
//! two conventions disagree about what "accuracy under attack" means, both
//! are emitted as separate columns.
//!
//! Cells and runs execute in parallel; every unit of work owns a seed derived
//! from the master seed, and the output tables are sorted before writing, so
//! the emitted bytes do not depend on thread scheduling.

use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

use crate::attack::{attack_row, AttackConfig, AttackMethod};
use crate::constraint::ConstraintEngine;
use crate::dataset::FlowDataset;
use crate::error::{Error, Result};
use crate::loss::{ActivationSite, LossConfig, LossKind};
use crate::metrics::{accuracy_fnr, confusion, pcc, pcc_metrics};
use crate::net::QNetwork;
use crate::seeds;
use crate::trainer::predictions;
use crate::uap::{apply_uap, generate_uap, UapConfig};

/// One attack family in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AttackSelector {
    pub method: GridMethod,
    pub constrained: bool,
    /// Generation loss; only meaningful for the universal attack.
    pub loss: Option<LossKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMethod {
    Fgsm,
    Bim,
    Uap,
}

impl GridMethod {
    fn name(self) -> &'static str {
        match self {
            GridMethod::Fgsm => "fgsm",
            GridMethod::Bim => "bim",
            GridMethod::Uap => "uap",
        }
    }
}

impl AttackSelector {
    pub fn fgsm(constrained: bool) -> Self {
        AttackSelector {
            method: GridMethod::Fgsm,
            constrained,
            loss: None,
        }
    }

    pub fn bim(constrained: bool) -> Self {
        AttackSelector {
            method: GridMethod::Bim,
            constrained,
            loss: None,
        }
    }

    pub fn uap(loss: LossKind) -> Self {
        AttackSelector {
            method: GridMethod::Uap,
            constrained: true,
            loss: Some(loss),
        }
    }

    fn key(&self) -> (String, bool, String) {
        (
            self.method.name().to_string(),
            self.constrained,
            self.loss.map(|l| l.name().to_string()).unwrap_or_default(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    /// Ascending budget grid starting at 0.
    pub epsilon_grid: Vec<f64>,
    pub attacks: Vec<AttackSelector>,
    /// Independent generations per universal-attack cell.
    pub runs_per_cell: u32,
    pub master_seed: u64,
    /// Worker threads; 0 uses the default pool size.
    pub jobs: usize,
    pub uap_seed_fraction: f64,
    pub uap_delta_target: f64,
    pub uap_max_iter: u32,
    pub bim_steps: u32,
    pub bim_max_iter: u32,
    #[serde(skip)]
    pub loss_config: LossConfig,
    /// Activation site for the correlation diagnostics (the 2-wide output by
    /// default, matching how the diagnostics are defined).
    #[serde(skip)]
    pub metric_site: ActivationSite,
}

/// The default 17-point grid from 0 to 0.04.
pub fn default_epsilon_grid() -> Vec<f64> {
    (0..17).map(|i| 0.0025 * i as f64).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            epsilon_grid: default_epsilon_grid(),
            attacks: vec![
                AttackSelector::fgsm(true),
                AttackSelector::fgsm(false),
                AttackSelector::bim(true),
                AttackSelector::bim(false),
                AttackSelector::uap(LossKind::CeTargeted),
                AttackSelector::uap(LossKind::PccPertu),
                AttackSelector::uap(LossKind::PdMean),
                AttackSelector::uap(LossKind::PdL2),
                AttackSelector::uap(LossKind::CossimL3),
                AttackSelector::uap(LossKind::CossimL4),
            ],
            runs_per_cell: 80,
            master_seed: 42,
            jobs: 0,
            uap_seed_fraction: 0.001,
            uap_delta_target: 0.2,
            uap_max_iter: 10,
            bim_steps: 20,
            bim_max_iter: 100,
            loss_config: LossConfig::default(),
            metric_site: ActivationSite::QValues,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<()> {
        if self.epsilon_grid.is_empty() {
            return Err(Error::Config("epsilon grid is empty".into()));
        }
        if self.epsilon_grid[0] != 0.0 {
            return Err(Error::Config("epsilon grid must start at 0".into()));
        }
        if self.epsilon_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("epsilon grid must be strictly ascending".into()));
        }
        if self.runs_per_cell == 0 {
            return Err(Error::Config("runs per cell must be positive".into()));
        }
        if self.attacks.is_empty() {
            return Err(Error::Config("no attacks selected".into()));
        }
        Ok(())
    }
}

/// One row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub attack: String,
    pub constrained: bool,
    pub loss: String,
    pub epsilon: f64,
    /// Generation run index; None marks the per-cell mean row.
    pub run: Option<u32>,
    /// Accuracy under the attack's own convention (malicious rows perturbed
    /// for per-input attacks, all rows perturbed for universal ones).
    pub accuracy: f64,
    /// Accuracy when only malicious rows are perturbed, for both families.
    pub accuracy_malicious_only: f64,
    pub fnr: Option<f64>,
    /// Test-set label-change fraction over the rows the attack perturbs.
    pub fooling_rate: f64,
    /// Final training-set fooling rate from generation (universal only).
    pub fooling_rate_train: Option<f64>,
    pub pcc_x: Option<f64>,
    pub pcc_pertu: Option<f64>,
    pub pcc_skipped: usize,
}

/// Per-cell aggregate: mean and standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub attack: String,
    pub constrained: bool,
    pub loss: String,
    pub epsilon: f64,
    pub runs: u32,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_accuracy_malicious_only: f64,
    pub mean_fnr: Option<f64>,
    pub std_fnr: Option<f64>,
    pub mean_fooling_rate: f64,
    pub std_fooling_rate: f64,
    pub mean_pcc_x: Option<f64>,
    pub mean_pcc_pertu: Option<f64>,
    pub total_pcc_skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    /// Per-run records followed by per-cell mean rows, deterministically
    /// sorted by (attack, loss, constrained, epsilon, run).
    pub records: Vec<MetricsRecord>,
    pub summaries: Vec<CellSummary>,
}

struct EvalContext<'a> {
    net: &'a QNetwork,
    train: &'a FlowDataset,
    test: &'a FlowDataset,
    engine: &'a ConstraintEngine,
    cfg: &'a SweepConfig,
    clean_test_preds: Vec<u8>,
}

/// Evaluate one per-input attack cell (single deterministic evaluation).
#[allow(clippy::needless_range_loop)]
fn eval_per_input_cell(
    ctx: &EvalContext,
    selector: &AttackSelector,
    epsilon: f64,
) -> Result<MetricsRecord> {
    let method = match selector.method {
        GridMethod::Fgsm => AttackMethod::Fgsm,
        GridMethod::Bim => AttackMethod::Bim,
        GridMethod::Uap => unreachable!("per-input path"),
    };
    let attack_cfg = AttackConfig {
        epsilon,
        target_label: 0,
        bim_steps: ctx.cfg.bim_steps,
        bim_max_iter: ctx.cfg.bim_max_iter,
        constrained: selector.constrained,
    };
    let test = ctx.test;
    let mut preds = ctx.clean_test_preds.clone();
    let mut flipped = 0usize;
    let mut attacked = 0usize;
    let mut pcc_x_sum = 0.0;
    let mut pcc_x_n = 0usize;
    let mut pcc_p_sum = 0.0;
    let mut pcc_p_n = 0usize;
    let mut pcc_skipped = 0usize;
    for i in 0..test.len() {
        if test.label(i) != 1 {
            continue; // benign rows are never attacked
        }
        attacked += 1;
        let row = test.row(i);
        let adv = attack_row(ctx.net, row, method, &attack_cfg, ctx.engine)?;
        let adv_trace = ctx.net.forward(&adv)?;
        let adv_pred = adv_trace.predicted() as u8;
        if adv_pred != ctx.clean_test_preds[i] {
            flipped += 1;
        }
        preds[i] = adv_pred;

        let clean_trace = ctx.net.forward(row)?;
        let delta: Vec<f64> = adv.iter().zip(row).map(|(a, b)| a - b).collect();
        let delta_trace = ctx.net.forward(&delta)?;
        let site = ctx.cfg.metric_site;
        match pcc(site.activations(&clean_trace), site.activations(&adv_trace)) {
            Ok(v) => {
                pcc_x_sum += v;
                pcc_x_n += 1;
            }
            Err(Error::DegeneratePcc) => pcc_skipped += 1,
            Err(e) => return Err(e),
        }
        match pcc(site.activations(&delta_trace), site.activations(&adv_trace)) {
            Ok(v) => {
                pcc_p_sum += v;
                pcc_p_n += 1;
            }
            Err(Error::DegeneratePcc) => pcc_skipped += 1,
            Err(e) => return Err(e),
        }
    }
    let c = confusion(&preds, test.labels())?;
    let (accuracy, fnr) = accuracy_fnr(&c);
    let (attack, constrained, loss) = selector.key();
    Ok(MetricsRecord {
        attack,
        constrained,
        loss,
        epsilon,
        run: Some(0),
        accuracy,
        accuracy_malicious_only: accuracy,
        fnr,
        fooling_rate: if attacked == 0 {
            0.0
        } else {
            flipped as f64 / attacked as f64
        },
        fooling_rate_train: None,
        pcc_x: (pcc_x_n > 0).then(|| pcc_x_sum / pcc_x_n as f64),
        pcc_pertu: (pcc_p_n > 0).then(|| pcc_p_sum / pcc_p_n as f64),
        pcc_skipped,
    })
}

/// Evaluate one universal-attack generation run.
fn eval_uap_run(
    ctx: &EvalContext,
    selector: &AttackSelector,
    epsilon: f64,
    run: u32,
) -> Result<MetricsRecord> {
    let loss = selector.loss.expect("universal cell carries a loss");
    let cell_label = format!("uap:{}:{}", loss.name(), epsilon);
    let uap_cfg = UapConfig {
        seed_fraction: ctx.cfg.uap_seed_fraction,
        delta_target: ctx.cfg.uap_delta_target,
        max_iter: ctx.cfg.uap_max_iter,
        epsilon,
        loss,
        seed: seeds::derive(ctx.cfg.master_seed, &cell_label, run as u64),
    };
    let result = generate_uap(ctx.net, ctx.train, &uap_cfg, &ctx.cfg.loss_config, ctx.engine)?;
    let delta = &result.uap.delta;

    let adv_all = apply_uap(ctx.test, delta, ctx.engine)?;
    let adv_preds = predictions(ctx.net, &adv_all)?;
    let test = ctx.test;

    // deployed convention: every row perturbed
    let c_all = confusion(&adv_preds, test.labels())?;
    let (accuracy, fnr) = accuracy_fnr(&c_all);

    // malicious-only convention for the comparison column
    let mixed: Vec<u8> = (0..test.len())
        .map(|i| {
            if test.label(i) == 1 {
                adv_preds[i]
            } else {
                ctx.clean_test_preds[i]
            }
        })
        .collect();
    let c_mal = confusion(&mixed, test.labels())?;
    let (accuracy_malicious_only, _) = accuracy_fnr(&c_mal);

    let flipped = adv_preds
        .iter()
        .zip(&ctx.clean_test_preds)
        .filter(|(a, b)| a != b)
        .count();
    let fooling_rate = flipped as f64 / test.len() as f64;

    let summary = pcc_metrics(ctx.net, test, delta, ctx.cfg.metric_site, ctx.engine)?;

    let (attack, constrained, loss_name) = selector.key();
    Ok(MetricsRecord {
        attack,
        constrained,
        loss: loss_name,
        epsilon,
        run: Some(run),
        accuracy,
        accuracy_malicious_only,
        fnr,
        fooling_rate,
        fooling_rate_train: result.fooling_rate_history.last().copied(),
        pcc_x: summary.mean_pcc_x,
        pcc_pertu: summary.mean_pcc_pertu,
        pcc_skipped: summary.skipped,
    })
}

fn mean_of(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn std_of(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean_of(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let defined: Vec<f64> = values.flatten().collect();
    (!defined.is_empty()).then(|| mean_of(&defined))
}

fn summarize(cell: &[MetricsRecord]) -> (MetricsRecord, CellSummary) {
    let first = &cell[0];
    let acc: Vec<f64> = cell.iter().map(|r| r.accuracy).collect();
    let acc_mal: Vec<f64> = cell.iter().map(|r| r.accuracy_malicious_only).collect();
    let fooling: Vec<f64> = cell.iter().map(|r| r.fooling_rate).collect();
    let fnr_defined: Vec<f64> = cell.iter().filter_map(|r| r.fnr).collect();
    let mean_fnr = (!fnr_defined.is_empty()).then(|| mean_of(&fnr_defined));
    let skipped: usize = cell.iter().map(|r| r.pcc_skipped).sum();
    let mean = MetricsRecord {
        attack: first.attack.clone(),
        constrained: first.constrained,
        loss: first.loss.clone(),
        epsilon: first.epsilon,
        run: None,
        accuracy: mean_of(&acc),
        accuracy_malicious_only: mean_of(&acc_mal),
        fnr: mean_fnr,
        fooling_rate: mean_of(&fooling),
        fooling_rate_train: mean_opt(cell.iter().map(|r| r.fooling_rate_train)),
        pcc_x: mean_opt(cell.iter().map(|r| r.pcc_x)),
        pcc_pertu: mean_opt(cell.iter().map(|r| r.pcc_pertu)),
        pcc_skipped: skipped,
    };
    let summary = CellSummary {
        attack: first.attack.clone(),
        constrained: first.constrained,
        loss: first.loss.clone(),
        epsilon: first.epsilon,
        runs: cell.len() as u32,
        mean_accuracy: mean.accuracy,
        std_accuracy: std_of(&acc),
        mean_accuracy_malicious_only: mean.accuracy_malicious_only,
        mean_fnr,
        std_fnr: (!fnr_defined.is_empty()).then(|| std_of(&fnr_defined)),
        mean_fooling_rate: mean.fooling_rate,
        std_fooling_rate: std_of(&fooling),
        mean_pcc_x: mean.pcc_x,
        mean_pcc_pertu: mean.pcc_pertu,
        total_pcc_skipped: skipped,
    };
    (mean, summary)
}

/// Run the full grid. The returned table is deterministic for a fixed
/// configuration regardless of the worker count.
pub fn run_sweep(
    net: &QNetwork,
    train: &FlowDataset,
    test: &FlowDataset,
    cfg: &SweepConfig,
    engine: &ConstraintEngine,
) -> Result<SweepTable> {
    cfg.validate()?;
    if test.is_empty() || train.is_empty() {
        return Err(Error::Config("sweep needs non-empty train and test sets".into()));
    }
    let ctx = EvalContext {
        net,
        train,
        test,
        engine,
        cfg,
        clean_test_preds: predictions(net, test)?,
    };

    // (selector, epsilon, run) work units
    let mut tasks: Vec<(AttackSelector, f64, u32)> = Vec::new();
    for sel in &cfg.attacks {
        for &eps in &cfg.epsilon_grid {
            match sel.method {
                GridMethod::Uap => {
                    for run in 0..cfg.runs_per_cell {
                        tasks.push((*sel, eps, run));
                    }
                }
                _ => tasks.push((*sel, eps, 0)),
            }
        }
    }

    let run_tasks = || -> Result<Vec<MetricsRecord>> {
        tasks
            .par_iter()
            .map(|(sel, eps, run)| match sel.method {
                GridMethod::Uap => eval_uap_run(&ctx, sel, *eps, *run),
                _ => eval_per_input_cell(&ctx, sel, *eps),
            })
            .collect()
    };
    let mut records: Vec<MetricsRecord> = if cfg.jobs > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(run_tasks)?
    } else {
        run_tasks()?
    };

    sort_records(&mut records);

    // group per cell and append mean rows
    let mut means = Vec::new();
    let mut summaries = Vec::new();
    let mut start = 0usize;
    while start < records.len() {
        let mut end = start + 1;
        while end < records.len() && same_cell(&records[start], &records[end]) {
            end += 1;
        }
        let (mean, summary) = summarize(&records[start..end]);
        means.push(mean);
        summaries.push(summary);
        start = end;
    }
    records.extend(means);
    sort_records(&mut records);

    Ok(SweepTable { records, summaries })
}

fn same_cell(a: &MetricsRecord, b: &MetricsRecord) -> bool {
    a.attack == b.attack
        && a.constrained == b.constrained
        && a.loss == b.loss
        && a.epsilon == b.epsilon
}

fn sort_records(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| {
        (&a.attack, &a.loss, a.constrained, a.epsilon, a.run.is_none(), a.run)
            .partial_cmp(&(&b.attack, &b.loss, b.constrained, b.epsilon, b.run.is_none(), b.run))
            .expect("sweep keys are totally ordered")
    });
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Metrics table CSV: one row per (cell, run) plus one mean row per cell
/// (empty run column).
pub fn write_metrics_csv(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    let mut out = String::new();
    out.push_str(
        "attack,constrained,loss,epsilon,run,accuracy,accuracy_malicious_only,fnr,\
         fooling_rate,fooling_rate_train,pcc_x,pcc_pertu,pcc_skipped\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.attack,
            r.constrained,
            r.loss,
            r.epsilon,
            r.run.map(|x| x.to_string()).unwrap_or_default(),
            r.accuracy,
            r.accuracy_malicious_only,
            fmt_opt(r.fnr),
            r.fooling_rate,
            fmt_opt(r.fooling_rate_train),
            fmt_opt(r.pcc_x),
            fmt_opt(r.pcc_pertu),
            r.pcc_skipped,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// JSON summary keyed by cell.
pub fn write_summary_json(path: &Path, summaries: &[CellSummary]) -> Result<()> {
    let mut map = serde_json::Map::new();
    for s in summaries {
        let loss_part = if s.loss.is_empty() { "-" } else { s.loss.as_str() };
        let key = format!(
            "{}{}:{}:eps={}",
            s.attack,
            if s.constrained { "" } else { "_nc" },
            loss_part,
            s.epsilon
        );
        map.insert(key, serde_json::to_value(s)?);
    }
    let mut bytes = serde_json::to_vec_pretty(&serde_json::Value::Object(map))?;
    bytes.push(b'\n');
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Long-format CSV of per-cell means for external plotting.
pub fn write_long_csv(path: &Path, summaries: &[CellSummary]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "attack,constrained,loss,epsilon,metric,value")?;
    for s in summaries {
        let mut emit = |metric: &str, value: Option<f64>| -> std::io::Result<()> {
            if let Some(v) = value {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.attack, s.constrained, s.loss, s.epsilon, metric, v
                )?;
            }
            Ok(())
        };
        emit("accuracy", Some(s.mean_accuracy))?;
        emit("accuracy_malicious_only", Some(s.mean_accuracy_malicious_only))?;
        emit("fnr", s.mean_fnr)?;
        emit("fooling_rate", Some(s.mean_fooling_rate))?;
        emit("pcc_x", s.mean_pcc_x)?;
        emit("pcc_pertu", s.mean_pcc_pertu)?;
    }
    Ok(())
}
