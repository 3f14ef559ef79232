//! Operator-facing driver for the training and attack pipelines.
//!
//! Every flag can also come from a JSON config file (`--config`), keyed by
//! subcommand then flag name; command-line flags override the file. All
//! randomness flows from `--seed` through named substreams, so reruns with
//! the same seed produce byte-identical artifacts.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

mod manifest;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use manifest::RunManifest;
use uapflow_core::attack::{attack_row, AttackConfig, AttackMethod};
use uapflow_core::constraint::ConstraintEngine;
use uapflow_core::dataset::{
    preprocess, stratified_split_indices, FlowDataset, RangeFit,
};
use uapflow_core::ingest::load_csv;
use uapflow_core::loss::{LossConfig, LossKind};
use uapflow_core::metrics::{accuracy_fnr, confusion, pcc_metrics};
use uapflow_core::net::{load_checkpoint, save_checkpoint, CheckpointMeta, QNetwork};
use uapflow_core::profiles::{self, DatasetProfile};
use uapflow_core::seeds;
use uapflow_core::sweep::{
    run_sweep, write_long_csv, write_metrics_csv, write_summary_json, AttackSelector, SweepConfig,
};
use uapflow_core::synth::{synth_generate, SynthConfig};
use uapflow_core::trainer::{
    predictions, select_median_agent, train_protocol, write_run_ledger, TrainConfig,
};
use uapflow_core::uap::{apply_uap, generate_uap, save_uap, UapConfig};
use uapflow_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "uapflow",
    version,
    about = "Train a flow-based DQN intrusion detector and attack it with domain-constrained perturbations"
)]
struct Cli {
    /// JSON config file mirroring the flags, keyed by subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic flow dataset and emit train/test/balanced files.
    Synth(SynthArgs),
    /// Preprocess raw CSV flow captures into normalized dataset files.
    Preprocess(PreprocessArgs),
    /// Train DQN agents and select the median one.
    Train(TrainArgs),
    /// Run a per-input attack against a trained agent.
    Attack(AttackArgs),
    /// Generate universal perturbations and report their effect.
    Uap(UapArgs),
    /// Run the full attack × epsilon × run metrics grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Benign row count.
    #[arg(long)]
    benign: Option<usize>,
    /// Attack row count.
    #[arg(long)]
    attack: Option<usize>,
    /// Class separation (0 = indistinguishable).
    #[arg(long)]
    separation: Option<f64>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction of the stratified split.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Input CSV file(s).
    #[arg(long, num_args = 1..)]
    input: Vec<PathBuf>,
    /// Dataset profile: cicids2018, synthetic, or a profile JSON path.
    #[arg(long)]
    profile: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Train fraction of the stratified split.
    #[arg(long)]
    train_fraction: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset directory (from synth/preprocess).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for checkpoints and the run ledger.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of independent training runs.
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Episodes per run.
    #[arg(long)]
    episodes: Option<u32>,
    /// Discount factor.
    #[arg(long)]
    gamma: Option<f64>,
    /// Adam learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
}

#[derive(Args)]
struct AttackArgs {
    /// Trained agent checkpoint.
    #[arg(long)]
    agent: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// fgsm or bim.
    #[arg(long)]
    method: Option<String>,
    /// L∞ budget on normalized features.
    #[arg(long)]
    eps: Option<f64>,
    /// Drop the mask and recalculation (free perturbation).
    #[arg(long)]
    unconstrained: bool,
    /// Iterative attack step divisor.
    #[arg(long)]
    bim_steps: Option<u32>,
    /// Iterative attack iteration cap.
    #[arg(long)]
    bim_max_iter: Option<u32>,
    /// Per-row attack record CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct UapArgs {
    /// Trained agent checkpoint.
    #[arg(long)]
    agent: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Generation loss: ce|pcc_pertu|pd_mean|pd_l2|cossim_l3|cossim_l4.
    #[arg(long)]
    loss: Option<String>,
    /// L∞ budget on normalized features.
    #[arg(long)]
    eps: Option<f64>,
    /// Independent generations.
    #[arg(long)]
    runs: Option<u32>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Seedset fraction of the training set.
    #[arg(long)]
    seed_fraction: Option<f64>,
    /// Stop once fooling rate reaches 1 - delta_target.
    #[arg(long)]
    delta_target: Option<f64>,
    /// Outer iteration cap.
    #[arg(long)]
    max_iter: Option<u32>,
    /// Output directory for perturbation files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Trained agent checkpoint.
    #[arg(long)]
    agent: Option<PathBuf>,
    /// Dataset directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory for the metrics tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Epsilon grid as start:end:points (start must be 0).
    #[arg(long)]
    grid: Option<String>,
    /// Generation runs per universal-attack cell.
    #[arg(long)]
    runs: Option<u32>,
    /// Worker threads (0 = default pool).
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated attack list (fgsm, fgsm_nc, bim, bim_nc,
    /// uap_LOSS); defaults to all.
    #[arg(long)]
    attacks: Option<String>,
    /// Seedset fraction for universal generations.
    #[arg(long)]
    seed_fraction: Option<f64>,
    /// Outer iteration cap for universal generations.
    #[arg(long)]
    max_iter: Option<u32>,
}

fn main() {
    let cli = Cli::parse();
    let file_cfg = match load_config(cli.config.as_deref()) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    let outcome = match cli.command {
        Command::Synth(args) => cmd_synth(args, file_cfg.as_ref()),
        Command::Preprocess(args) => cmd_preprocess(args, file_cfg.as_ref()),
        Command::Train(args) => cmd_train(args, file_cfg.as_ref()),
        Command::Attack(args) => cmd_attack(args, file_cfg.as_ref()),
        Command::Uap(args) => cmd_uap(args, file_cfg.as_ref()),
        Command::Sweep(args) => cmd_sweep(args, file_cfg.as_ref()),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(e.exit_class());
    }
}

fn load_config(path: Option<&Path>) -> Result<Option<Value>> {
    match path {
        None => Ok(None),
        Some(p) => {
            let bytes = std::fs::read(p)?;
            let value: Value = serde_json::from_slice(&bytes)?;
            if !value.is_object() {
                return Err(Error::Config("config file must hold a JSON object".into()));
            }
            Ok(Some(value))
        }
    }
}

/// Config-file lookup: `section.key`, deserialized on demand.
fn cfg_get<T: serde::de::DeserializeOwned>(cfg: Option<&Value>, section: &str, key: &str) -> Option<T> {
    cfg?
        .get(section)?
        .get(key)
        .and_then(|v| serde_json::from_value(v.clone()).ok())
}

fn required<T>(value: Option<T>, section: &str, key: &str) -> Result<T> {
    value.ok_or_else(|| Error::Config(format!("missing --{key} (or config [{section}].{key})")))
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)?;
    Ok(())
}

fn print_class_counts(name: &str, ds: &FlowDataset) {
    let (benign, attack) = ds.class_counts();
    let total = benign + attack;
    let pct = |n: usize| 100.0 * n as f64 / total.max(1) as f64;
    println!(
        "{name}: benign {benign} ({:.0}%) | attack {attack} ({:.0}%) | total {total}",
        pct(benign),
        pct(attack)
    );
}

/// Write the three dataset files and register them in the manifest.
fn write_dataset_dir(
    out: &Path,
    train: &FlowDataset,
    balanced: &FlowDataset,
    test: &FlowDataset,
    man: &mut RunManifest,
) -> Result<()> {
    ensure_dir(out)?;
    for (file, ds) in [
        ("train.json", train),
        ("train_balanced.json", balanced),
        ("test.json", test),
    ] {
        let path = out.join(file);
        ds.save(&path)?;
        man.add_output(&path)?;
    }
    Ok(())
}

fn load_dataset_dir(data: &Path) -> Result<(FlowDataset, FlowDataset)> {
    let balanced = FlowDataset::load(&data.join("train_balanced.json"))?;
    let test = FlowDataset::load(&data.join("test.json"))?;
    if balanced.schema != test.schema {
        return Err(Error::Schema(
            "train and test files carry different schemas".into(),
        ));
    }
    Ok((balanced, test))
}

fn load_agent(path: &Path, schema_hash: u64) -> Result<QNetwork> {
    let (net, ckpt_hash, _) = load_checkpoint(path)?;
    if ckpt_hash != schema_hash {
        return Err(Error::Schema(format!(
            "agent was trained on a different schema (checkpoint hash {ckpt_hash:#x}, dataset hash {schema_hash:#x})"
        )));
    }
    Ok(net)
}

fn cmd_synth(args: SynthArgs, cfg: Option<&Value>) -> Result<()> {
    let out = required(args.out.or_else(|| cfg_get(cfg, "synth", "out")), "synth", "out")?;
    let synth_cfg = SynthConfig {
        n_benign: args.benign.or_else(|| cfg_get(cfg, "synth", "benign")).unwrap_or(1500),
        n_attack: args.attack.or_else(|| cfg_get(cfg, "synth", "attack")).unwrap_or(1000),
        separation: args.separation.or_else(|| cfg_get(cfg, "synth", "separation")).unwrap_or(3.0),
        seed: args.seed.or_else(|| cfg_get(cfg, "synth", "seed")).unwrap_or(42),
    };
    let train_fraction = args
        .train_fraction
        .or_else(|| cfg_get(cfg, "synth", "train_fraction"))
        .unwrap_or(0.8);

    let mut man = RunManifest::new("synth", Some(synth_cfg.seed), serde_json::json!({
        "benign": synth_cfg.n_benign,
        "attack": synth_cfg.n_attack,
        "separation": synth_cfg.separation,
        "train_fraction": train_fraction,
    }));

    let raw = synth_generate(&synth_cfg)?;
    let schema = profiles::synthetic_schema();
    let profile = profiles::synthetic_profile();
    let (ds, stats) = preprocess(&raw, &profile, RangeFit::Frozen(&schema))?;
    let (train, test) = ds.stratified_split(train_fraction, seeds::derive(synth_cfg.seed, "split", 0))?;
    let balanced = train.undersample(seeds::derive(synth_cfg.seed, "undersample", 0))?;

    write_dataset_dir(&out, &train, &balanced, &test, &mut man)?;
    man.write(&out)?;
    print_class_counts("train", &train);
    print_class_counts("train (balanced)", &balanced);
    print_class_counts("test", &test);
    println!(
        "values clamped: {} | related-feature clamps: {}",
        stats.values_clamped, stats.rf_clamped
    );
    Ok(())
}

fn resolve_profile(name: &str) -> Result<DatasetProfile> {
    if let Some(p) = profiles::builtin(name) {
        return Ok(p);
    }
    let path = Path::new(name);
    if path.exists() {
        return DatasetProfile::load(path);
    }
    Err(Error::Config(format!(
        "unknown profile '{name}' (expected cicids2018, synthetic, or a profile JSON path)"
    )))
}

fn cmd_preprocess(args: PreprocessArgs, cfg: Option<&Value>) -> Result<()> {
    let inputs: Vec<PathBuf> = if args.input.is_empty() {
        cfg_get(cfg, "preprocess", "input").unwrap_or_default()
    } else {
        args.input
    };
    if inputs.is_empty() {
        return Err(Error::Config("missing --input".into()));
    }
    for p in &inputs {
        if !p.exists() {
            return Err(Error::Config(format!("input file not found: {}", p.display())));
        }
    }
    let profile_name = args
        .profile
        .or_else(|| cfg_get(cfg, "preprocess", "profile"))
        .unwrap_or_else(|| "cicids2018".to_string());
    let out = required(args.out.or_else(|| cfg_get(cfg, "preprocess", "out")), "preprocess", "out")?;
    let seed = args.seed.or_else(|| cfg_get(cfg, "preprocess", "seed")).unwrap_or(42);
    let train_fraction = args
        .train_fraction
        .or_else(|| cfg_get(cfg, "preprocess", "train_fraction"))
        .unwrap_or(0.8);

    let profile = resolve_profile(&profile_name)?;
    let mut man = RunManifest::new("preprocess", Some(seed), serde_json::json!({
        "profile": profile_name,
        "train_fraction": train_fraction,
    }));
    for p in &inputs {
        man.add_input(p)?;
    }

    let (raw, load_stats) = load_csv(&inputs, &profile)?;
    if raw.is_empty() {
        return Err(Error::Invalid("no usable rows in the input files".into()));
    }
    let labels: Vec<u8> = raw
        .labels
        .iter()
        .map(|l| uapflow_core::dataset::map_label(l, &profile.benign_label))
        .collect();
    let (train_idx, test_idx) = stratified_split_indices(&labels, train_fraction, seeds::derive(seed, "split", 0))?;
    let train_raw = raw.subset(&train_idx);
    let test_raw = raw.subset(&test_idx);

    // ranges are fitted on the training split only, then frozen
    let (train_ds, train_stats) = match &profile.preset_ranges {
        Some(ranges) => {
            let schema = profile.schema_with_ranges(ranges)?;
            preprocess(&train_raw, &profile, RangeFit::Frozen(&schema))?
        }
        None => preprocess(&train_raw, &profile, RangeFit::FitFromData)?,
    };
    let (test_ds, test_stats) = preprocess(&test_raw, &profile, RangeFit::Frozen(&train_ds.schema))?;
    let balanced = train_ds.undersample(seeds::derive(seed, "undersample", 0))?;

    write_dataset_dir(&out, &train_ds, &balanced, &test_ds, &mut man)?;
    man.write(&out)?;

    println!(
        "rows read {} | skipped {} | infinity substituted {} | nan substituted {}",
        load_stats.rows_read,
        load_stats.rows_skipped(),
        load_stats.infinity_substituted,
        load_stats.nan_substituted
    );
    println!(
        "values clamped: train {} test {} | related-feature clamps: train {} test {}",
        train_stats.values_clamped, test_stats.values_clamped,
        train_stats.rf_clamped, test_stats.rf_clamped
    );
    print_class_counts("train", &train_ds);
    print_class_counts("train (balanced)", &balanced);
    print_class_counts("test", &test_ds);
    Ok(())
}

fn cmd_train(args: TrainArgs, cfg: Option<&Value>) -> Result<()> {
    let data = required(args.data.or_else(|| cfg_get(cfg, "train", "data")), "train", "data")?;
    let out = required(args.out.or_else(|| cfg_get(cfg, "train", "out")), "train", "out")?;
    let train_cfg = TrainConfig {
        runs: args.runs.or_else(|| cfg_get(cfg, "train", "runs")).unwrap_or(10),
        seed: args.seed.or_else(|| cfg_get(cfg, "train", "seed")).unwrap_or(42),
        episodes: args.episodes.or_else(|| cfg_get(cfg, "train", "episodes")).unwrap_or(10),
        gamma: args.gamma.or_else(|| cfg_get(cfg, "train", "gamma")).unwrap_or(0.001),
        learning_rate: args
            .learning_rate
            .or_else(|| cfg_get(cfg, "train", "learning_rate"))
            .unwrap_or(1e-4),
        ..TrainConfig::default()
    };

    let (balanced, test) = load_dataset_dir(&data)?;
    let schema_hash = balanced.schema.schema_hash();
    let mut man = RunManifest::new("train", Some(train_cfg.seed), serde_json::to_value(&train_cfg)?);
    man.add_input(&data.join("train_balanced.json"))?;
    man.add_input(&data.join("test.json"))?;

    let results = train_protocol(&balanced, &test, &train_cfg)?;
    let reports: Vec<_> = results.iter().map(|(_, r)| r.clone()).collect();
    ensure_dir(&out)?;
    for (net, report) in &results {
        let meta = CheckpointMeta {
            run_index: report.run_index,
            run_seed: report.run_seed,
            episodes: train_cfg.episodes,
            episode_train_accuracy: report.episode_train_accuracy.clone(),
            test_accuracy: report.test_accuracy,
        };
        let path = out.join(format!("agent_run{}.json", report.run_index));
        save_checkpoint(&path, net, schema_hash, &meta)?;
        man.add_output(&path)?;
        println!(
            "run {}: test accuracy {:.4}",
            report.run_index, report.test_accuracy
        );
    }
    let median = select_median_agent(&reports)?;
    let median_path = out.join("agent_median.json");
    let meta = CheckpointMeta {
        run_index: reports[median].run_index,
        run_seed: reports[median].run_seed,
        episodes: train_cfg.episodes,
        episode_train_accuracy: reports[median].episode_train_accuracy.clone(),
        test_accuracy: reports[median].test_accuracy,
    };
    save_checkpoint(&median_path, &results[median].0, schema_hash, &meta)?;
    man.add_output(&median_path)?;

    let ledger_path = out.join("run_ledger.csv");
    write_run_ledger(&ledger_path, &reports)?;
    man.add_output(&ledger_path)?;
    man.write(&out)?;
    println!(
        "median agent: run {} (test accuracy {:.4}) -> {}",
        reports[median].run_index,
        reports[median].test_accuracy,
        median_path.display()
    );
    Ok(())
}

fn cmd_attack(args: AttackArgs, cfg: Option<&Value>) -> Result<()> {
    let agent = required(args.agent.or_else(|| cfg_get(cfg, "attack", "agent")), "attack", "agent")?;
    let data = required(args.data.or_else(|| cfg_get(cfg, "attack", "data")), "attack", "data")?;
    let method: AttackMethod = required(
        args.method.or_else(|| cfg_get(cfg, "attack", "method")),
        "attack",
        "method",
    )?
    .parse()?;
    let eps = required(args.eps.or_else(|| cfg_get(cfg, "attack", "eps")), "attack", "eps")?;
    let unconstrained =
        args.unconstrained || cfg_get::<bool>(cfg, "attack", "unconstrained").unwrap_or(false);

    let (_, test) = load_dataset_dir(&data)?;
    let net = load_agent(&agent, test.schema.schema_hash())?;
    let engine = ConstraintEngine::new(&test.schema)?;
    let attack_cfg = AttackConfig {
        epsilon: eps,
        target_label: 0,
        bim_steps: args.bim_steps.or_else(|| cfg_get(cfg, "attack", "bim_steps")).unwrap_or(20),
        bim_max_iter: args
            .bim_max_iter
            .or_else(|| cfg_get(cfg, "attack", "bim_max_iter"))
            .unwrap_or(100),
        constrained: !unconstrained,
    };

    let clean_preds = predictions(&net, &test)?;
    let mut preds = clean_preds.clone();
    let mf = *engine.mf_indices();
    let mut rows_out = String::from(
        "sample,epsilon,attack,clean_pred,adv_pred,delta_tot_fwd_pkts,delta_tot_bwd_pkts,\
         delta_totlen_fwd_pkts,delta_totlen_bwd_pkts,delta_flow_duration\n",
    );
    let mut flipped = 0usize;
    let mut attacked = 0usize;
    for i in 0..test.len() {
        if test.label(i) != 1 {
            continue;
        }
        attacked += 1;
        let row = test.row(i);
        let adv = attack_row(&net, row, method, &attack_cfg, &engine)?;
        let adv_pred = net.forward(&adv)?.predicted() as u8;
        if adv_pred != clean_preds[i] {
            flipped += 1;
        }
        preds[i] = adv_pred;
        rows_out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            i,
            eps,
            method,
            clean_preds[i],
            adv_pred,
            adv[mf[0]] - row[mf[0]],
            adv[mf[1]] - row[mf[1]],
            adv[mf[2]] - row[mf[2]],
            adv[mf[3]] - row[mf[3]],
            adv[mf[4]] - row[mf[4]],
        ));
    }
    let c = confusion(&preds, test.labels())?;
    let (acc, fnr) = accuracy_fnr(&c);
    println!(
        "{method} eps={eps} constrained={}: accuracy {:.4} | fnr {} | flipped {}/{}",
        !unconstrained,
        acc,
        fnr.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into()),
        flipped,
        attacked
    );
    if let Some(out) = args.out.or_else(|| cfg_get(cfg, "attack", "out")) {
        std::fs::write(&out, rows_out)?;
        println!("attack rows -> {}", out.display());
    }
    Ok(())
}

fn cmd_uap(args: UapArgs, cfg: Option<&Value>) -> Result<()> {
    let agent = required(args.agent.or_else(|| cfg_get(cfg, "uap", "agent")), "uap", "agent")?;
    let data = required(args.data.or_else(|| cfg_get(cfg, "uap", "data")), "uap", "data")?;
    let loss: LossKind = LossKind::from_str(&required(
        args.loss.or_else(|| cfg_get(cfg, "uap", "loss")),
        "uap",
        "loss",
    )?)?;
    let eps = required(args.eps.or_else(|| cfg_get(cfg, "uap", "eps")), "uap", "eps")?;
    let runs = args.runs.or_else(|| cfg_get(cfg, "uap", "runs")).unwrap_or(80);
    let seed = args.seed.or_else(|| cfg_get(cfg, "uap", "seed")).unwrap_or(42);
    let out = required(args.out.or_else(|| cfg_get(cfg, "uap", "out")), "uap", "out")?;

    let (balanced, test) = load_dataset_dir(&data)?;
    let net = load_agent(&agent, test.schema.schema_hash())?;
    let engine = ConstraintEngine::new(&test.schema)?;
    let clean_preds = predictions(&net, &test)?;

    let template = UapConfig {
        seed_fraction: args
            .seed_fraction
            .or_else(|| cfg_get(cfg, "uap", "seed_fraction"))
            .unwrap_or(0.001),
        delta_target: args
            .delta_target
            .or_else(|| cfg_get(cfg, "uap", "delta_target"))
            .unwrap_or(0.2),
        max_iter: args.max_iter.or_else(|| cfg_get(cfg, "uap", "max_iter")).unwrap_or(10),
        ..UapConfig::new(eps, loss, seed)
    };
    let mut man = RunManifest::new("uap", Some(seed), serde_json::to_value(&template)?);
    man.add_input(&agent)?;
    ensure_dir(&out)?;

    let mut mean_fr = 0.0;
    let mut mean_fnr = 0.0;
    let mut mean_pcc_pertu = 0.0;
    let mut pcc_defined = 0usize;
    for run in 0..runs {
        let run_cfg = UapConfig {
            seed: seeds::derive(seed, &format!("uap:{loss}:{eps}"), run as u64),
            ..template.clone()
        };
        let result = generate_uap(&net, &balanced, &run_cfg, &LossConfig::default(), &engine)?;
        let adv = apply_uap(&test, &result.uap.delta, &engine)?;
        let preds = predictions(&net, &adv)?;
        let c = confusion(&preds, test.labels())?;
        let (_, fnr) = accuracy_fnr(&c);
        let flipped = preds.iter().zip(&clean_preds).filter(|(a, b)| a != b).count();
        mean_fr += flipped as f64 / test.len() as f64;
        mean_fnr += fnr.unwrap_or(0.0);
        let summary = pcc_metrics(
            &net,
            &test,
            &result.uap.delta,
            uapflow_core::loss::ActivationSite::QValues,
            &engine,
        )?;
        if let Some(p) = summary.mean_pcc_pertu {
            mean_pcc_pertu += p;
            pcc_defined += 1;
        }
        let path = out.join(format!("uap_run{run}.json"));
        save_uap(&path, &result)?;
        man.add_output(&path)?;
    }
    man.write(&out)?;
    let n = runs as f64;
    println!(
        "uap loss={loss} eps={eps} runs={runs}: mean fooling rate {:.4} | mean fnr {:.4} | mean pcc_pertu {}",
        mean_fr / n,
        mean_fnr / n,
        if pcc_defined > 0 {
            format!("{:.4}", mean_pcc_pertu / pcc_defined as f64)
        } else {
            "undefined".into()
        }
    );
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!(
            "grid '{spec}' must look like start:end:points"
        )));
    }
    let start: f64 = parts[0].parse().map_err(|_| Error::Config("bad grid start".into()))?;
    let end: f64 = parts[1].parse().map_err(|_| Error::Config("bad grid end".into()))?;
    let points: usize = parts[2].parse().map_err(|_| Error::Config("bad grid point count".into()))?;
    if points < 2 || end <= start {
        return Err(Error::Config("grid needs at least 2 ascending points".into()));
    }
    Ok((0..points)
        .map(|i| start + (end - start) * i as f64 / (points - 1) as f64)
        .collect())
}

fn parse_attacks(spec: &str) -> Result<Vec<AttackSelector>> {
    spec.split(',')
        .map(|tok| match tok.trim() {
            "fgsm" => Ok(AttackSelector::fgsm(true)),
            "fgsm_nc" => Ok(AttackSelector::fgsm(false)),
            "bim" => Ok(AttackSelector::bim(true)),
            "bim_nc" => Ok(AttackSelector::bim(false)),
            other => match other.strip_prefix("uap_") {
                Some(loss) => Ok(AttackSelector::uap(loss.parse()?)),
                None => Err(Error::Config(format!("unknown attack '{other}'"))),
            },
        })
        .collect()
}

fn cmd_sweep(args: SweepArgs, cfg: Option<&Value>) -> Result<()> {
    let agent = required(args.agent.or_else(|| cfg_get(cfg, "sweep", "agent")), "sweep", "agent")?;
    let data = required(args.data.or_else(|| cfg_get(cfg, "sweep", "data")), "sweep", "data")?;
    let out = required(args.out.or_else(|| cfg_get(cfg, "sweep", "out")), "sweep", "out")?;
    let grid_spec = args
        .grid
        .or_else(|| cfg_get(cfg, "sweep", "grid"))
        .unwrap_or_else(|| "0:0.04:17".to_string());
    let mut sweep_cfg = SweepConfig {
        epsilon_grid: parse_grid(&grid_spec)?,
        runs_per_cell: args.runs.or_else(|| cfg_get(cfg, "sweep", "runs")).unwrap_or(80),
        master_seed: args.seed.or_else(|| cfg_get(cfg, "sweep", "seed")).unwrap_or(42),
        jobs: args.jobs.or_else(|| cfg_get(cfg, "sweep", "jobs")).unwrap_or(0),
        uap_seed_fraction: args
            .seed_fraction
            .or_else(|| cfg_get(cfg, "sweep", "seed_fraction"))
            .unwrap_or(0.001),
        uap_max_iter: args.max_iter.or_else(|| cfg_get(cfg, "sweep", "max_iter")).unwrap_or(10),
        ..SweepConfig::default()
    };
    if let Some(spec) = args.attacks.or_else(|| cfg_get(cfg, "sweep", "attacks")) {
        sweep_cfg.attacks = parse_attacks(&spec)?;
    }

    let (balanced, test) = load_dataset_dir(&data)?;
    let net = load_agent(&agent, test.schema.schema_hash())?;
    let engine = ConstraintEngine::new(&test.schema)?;

    let mut man = RunManifest::new("sweep", Some(sweep_cfg.master_seed), serde_json::to_value(&sweep_cfg)?);
    man.add_input(&agent)?;
    man.add_input(&data.join("train_balanced.json"))?;
    man.add_input(&data.join("test.json"))?;

    let table = run_sweep(&net, &balanced, &test, &sweep_cfg, &engine)?;
    ensure_dir(&out)?;
    let metrics_path = out.join("metrics.csv");
    write_metrics_csv(&metrics_path, &table.records)?;
    let summary_path = out.join("summary.json");
    write_summary_json(&summary_path, &table.summaries)?;
    let long_path = out.join("plot_long.csv");
    write_long_csv(&long_path, &table.summaries)?;
    for p in [&metrics_path, &summary_path, &long_path] {
        man.add_output(p)?;
    }
    man.write(&out)?;
    println!(
        "sweep complete: {} records over {} cells -> {}",
        table.records.len(),
        table.summaries.len(),
        metrics_path.display()
    );
    Ok(())
}
