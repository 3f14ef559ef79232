//! Acceptance suite: one test per criterion, shared desk-scale artifacts.
//!
//! The heavy artifacts (synthetic datasets, the 10-run training protocol, and
//! the attack sweep) are built once behind OnceLocks; every criterion forces
//! them first so the per-criterion timing measurements run on otherwise idle
//! cores. Tolerances and thresholds are pinned in code, not configurable.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uapflow_core::constraint::ConstraintEngine;
use uapflow_core::dataset::{preprocess, FlowDataset, RangeFit};
use uapflow_core::loss::{loss_and_input_grad, LossConfig, LossKind};
use uapflow_core::metrics::{accuracy_fnr, confusion, pcc};
use uapflow_core::net::{QNetwork, INPUT_DIM, LAYER_COUNT};
use uapflow_core::profiles;
use uapflow_core::schema::{FeatureSchema, FEATURE_COUNT};
use uapflow_core::seeds;
use uapflow_core::sweep::{
    run_sweep, write_metrics_csv, AttackSelector, MetricsRecord, SweepConfig, SweepTable,
};
use uapflow_core::synth::{synth_generate, SynthConfig};
use uapflow_core::trainer::{
    predictions, select_median_agent, train_protocol, TrainConfig, TrainReport,
};

const MASTER_SEED: u64 = 42;
/// Acceptance epsilon grid (ascending, starts at 0; top two are 0.03, 0.04).
const GRID: [f64; 7] = [0.0, 0.002, 0.005, 0.01, 0.02, 0.03, 0.04];
const RUNS_PER_CELL: u32 = 40;
/// Desk-scale seedset fraction: the 0.001 default assumes a corpus of
/// hundreds of thousands of rows; 0.01 of the 1600-row desk corpus keeps the
/// seedset meaningfully sized.
const UAP_SEED_FRACTION: f64 = 0.01;

struct Artifacts {
    schema: FeatureSchema,
    engine: ConstraintEngine,
    train: FlowDataset,
    test: FlowDataset,
    net: QNetwork,
    reports: Vec<TrainReport>,
    median_index: usize,
    clean_accuracy: f64,
    clean_fnr: Option<f64>,
    train_seconds: f64,
}

static ARTIFACTS: OnceLock<Artifacts> = OnceLock::new();
static SWEEP: OnceLock<SweepTable> = OnceLock::new();

fn artifacts() -> &'static Artifacts {
    ARTIFACTS.get_or_init(|| {
        let raw = synth_generate(&SynthConfig::default()).expect("synthetic generation");
        let schema = profiles::synthetic_schema();
        let profile = profiles::synthetic_profile();
        let (ds, _) = preprocess(&raw, &profile, RangeFit::Frozen(&schema)).expect("preprocess");
        let (train_full, test) = ds
            .stratified_split(0.8, seeds::derive(MASTER_SEED, "split", 0))
            .expect("split");
        let train = train_full
            .undersample(seeds::derive(MASTER_SEED, "undersample", 0))
            .expect("undersample");

        let t0 = Instant::now();
        let results = train_protocol(&train, &test, &TrainConfig::default()).expect("training");
        let train_seconds = t0.elapsed().as_secs_f64();
        let reports: Vec<TrainReport> = results.iter().map(|(_, r)| r.clone()).collect();
        let median_index = select_median_agent(&reports).expect("median selection");
        let net = results[median_index].0.clone();

        let engine = ConstraintEngine::new(&schema).expect("engine");
        let clean_preds = predictions(&net, &test).expect("clean predictions");
        let c = confusion(&clean_preds, test.labels()).expect("confusion");
        let (clean_accuracy, clean_fnr) = accuracy_fnr(&c);

        Artifacts {
            schema,
            engine,
            train,
            test,
            net,
            reports,
            median_index,
            clean_accuracy,
            clean_fnr,
            train_seconds,
        }
    })
}

fn sweep_table() -> &'static SweepTable {
    SWEEP.get_or_init(|| {
        let a = artifacts();
        let cfg = SweepConfig {
            epsilon_grid: GRID.to_vec(),
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
            runs_per_cell: RUNS_PER_CELL,
            master_seed: MASTER_SEED,
            uap_seed_fraction: UAP_SEED_FRACTION,
            uap_max_iter: 10,
            ..SweepConfig::default()
        };
        run_sweep(&a.net, &a.train, &a.test, &cfg, &a.engine).expect("sweep")
    })
}

/// Per-cell mean row lookup.
fn mean_row<'t>(
    table: &'t SweepTable,
    attack: &str,
    constrained: bool,
    loss: &str,
    eps: f64,
) -> &'t MetricsRecord {
    table
        .records
        .iter()
        .find(|r| {
            r.attack == attack
                && r.constrained == constrained
                && r.loss == loss
                && r.epsilon == eps
                && r.run.is_none()
        })
        .unwrap_or_else(|| panic!("missing mean row {attack}/{constrained}/{loss}/{eps}"))
}

fn fnr_of(r: &MetricsRecord) -> f64 {
    r.fnr.expect("fnr defined on the acceptance test set")
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_gradient_correctness() {
    sweep_table();
    let t0 = Instant::now();
    let cfg = LossConfig::default();
    let h = 1e-4;
    let tol = 1e-4;

    let relu_pattern = |net: &QNetwork, v: &[f64]| -> Vec<bool> {
        let t = net.forward(v).unwrap();
        t.hidden
            .iter()
            .flat_map(|hl| hl.iter().map(|x| *x > 0.0))
            .collect()
    };

    for (k, kind) in LossKind::ALL.into_iter().enumerate() {
        let mut fixtures_checked = 0usize;
        let mut coords_checked = 0usize;
        for fixture in 0..100u64 {
            let seed = 9000 + k as u64 * 1000 + fixture;
            let net = QNetwork::seeded(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
            let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(0.05..0.95)).collect();
            let delta: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(-0.03..0.03)).collect();
            let (_, grad) = loss_and_input_grad(&net, &x, &delta, kind, &cfg, 0).unwrap();
            let x_adv: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + d).collect();
            fixtures_checked += 1;

            for i in 0..INPUT_DIM {
                let an = grad[i];
                if an.abs() < 1e-8 {
                    continue;
                }
                let mut adv_p = x_adv.clone();
                adv_p[i] += h;
                let mut adv_m = x_adv.clone();
                adv_m[i] -= h;
                if relu_pattern(&net, &adv_p) != relu_pattern(&net, &adv_m) {
                    continue; // central difference invalid across a ReLU kink
                }
                let fd = match kind {
                    LossKind::CossimL3 | LossKind::CossimL4 => {
                        let mut dp = delta.clone();
                        dp[i] += h;
                        let mut dm = delta.clone();
                        dm[i] -= h;
                        let lp = loss_and_input_grad(&net, &x, &dp, kind, &cfg, 0).unwrap().0;
                        let lm = loss_and_input_grad(&net, &x, &dm, kind, &cfg, 0).unwrap().0;
                        (lp - lm) / (2.0 * h)
                    }
                    _ => {
                        let mut xp = x.clone();
                        xp[i] += h;
                        let mut xm = x.clone();
                        xm[i] -= h;
                        let lp = loss_and_input_grad(&net, &xp, &delta, kind, &cfg, 0).unwrap().0;
                        let lm = loss_and_input_grad(&net, &xm, &delta, kind, &cfg, 0).unwrap().0;
                        (lp - lm) / (2.0 * h)
                    }
                };
                // the absolute floor sits at the h^2 truncation scale of a
                // central difference; below it the estimate is noise, not a
                // derivative
                let ok = (an - fd).abs() < 1e-8 || (an - fd).abs() / an.abs().max(fd.abs()) < tol;
                assert!(
                    ok,
                    "{kind}: fixture {fixture} coord {i}: analytic {an} vs fd {fd}"
                );
                coords_checked += 1;
            }
        }
        assert!(fixtures_checked >= 100, "{kind}: too few fixtures");
        assert!(coords_checked >= 1000, "{kind}: too few coordinates checked");
    }

    // temporal-difference loss against finite differences on sampled weights
    let mut rng = ChaCha8Rng::seed_from_u64(0x7d);
    for fixture in 0..100u64 {
        let net = QNetwork::seeded(20_000 + fixture);
        let x: Vec<f64> = (0..INPUT_DIM).map(|_| rng.gen_range(0.05..0.95)).collect();
        let action = (fixture % 2) as usize;
        let td = rng.gen_range(-1.2..1.2);
        let trace = net.forward(&x).unwrap();
        let (_, grads) = net.td_weight_gradients(&trace, action, td).unwrap();
        for _ in 0..20 {
            let l = rng.gen_range(0..LAYER_COUNT);
            let idx = rng.gen_range(0..net.layers[l].weights.len());
            let mut plus = net.clone();
            plus.layers[l].weights[idx] += h;
            let mut minus = net.clone();
            minus.layers[l].weights[idx] -= h;
            let f = |n: &QNetwork| {
                let t = n.forward(&x).unwrap();
                let r = td - t.qvalues[action];
                r * r
            };
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            let an = grads.layers[l].dw[idx];
            if an.abs() < 1e-8 && fd.abs() < 1e-8 {
                continue;
            }
            let ok = (an - fd).abs() < 1e-8 || (an - fd).abs() / an.abs().max(fd.abs()) < tol;
            assert!(ok, "td loss: layer {l} idx {idx}: {an} vs {fd}");
        }
    }

    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 30.0, "gradient suite took {secs:.1}s (limit 30s)");
    println!("[acceptance] criterion 01 gradient correctness: PASS ({secs:.1}s)");
}

// ---------------------------------------------------------------------------
// Criterion 2: constraint soundness
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_constraint_soundness() {
    sweep_table();
    let a = artifacts();
    let t0 = Instant::now();
    let schema = &a.schema;
    let engine = &a.engine;
    let mf = engine.mf_indices();
    let rf = engine.rf_indices();
    let uf = schema.uf_indices();

    let base_rows: Vec<Vec<f64>> = (0..a.train.len().min(500))
        .map(|i| a.train.row(i).to_vec())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xc2);
    for trial in 0..10_000usize {
        let x_orig = &base_rows[trial % base_rows.len()];
        let cand: Vec<f64> = if trial % 2 == 0 {
            x_orig
                .iter()
                .map(|v| v + rng.gen_range(-0.1..0.1))
                .collect()
        } else {
            (0..FEATURE_COUNT).map(|_| rng.gen_range(-0.2..1.2)).collect()
        };
        let out = engine.apply_constraints(x_orig, &cand);

        // unmodified coordinates bit-identical
        for &i in &uf {
            assert_eq!(out[i].to_bits(), x_orig[i].to_bits(), "trial {trial}: UF moved");
        }
        // unit box
        assert!(
            out.iter().all(|v| (0.0..=1.0).contains(v)),
            "trial {trial}: outside [0,1]"
        );
        // the eight identities in raw space, hand-inlined
        let d = |i: usize, v: f64| {
            let f = &schema.features[i];
            f.raw_min + v * (f.raw_max - f.raw_min)
        };
        let tot_fwd = d(mf[0], out[mf[0]]);
        let tot_bwd = d(mf[1], out[mf[1]]);
        let len_fwd = d(mf[2], out[mf[2]]);
        let len_bwd = d(mf[3], out[mf[3]]);
        let dur = d(mf[4], out[mf[4]]).max(1.0);
        let expected = [
            tot_fwd * 1e6 / dur,
            tot_bwd * 1e6 / dur,
            tot_fwd * 1e6 / dur + tot_bwd * 1e6 / dur,
            (len_fwd + len_bwd) * 1e6 / dur,
            if tot_fwd + tot_bwd > 0.0 { (len_fwd + len_bwd) / (tot_fwd + tot_bwd) } else { 0.0 },
            if tot_fwd > 0.0 { len_fwd / tot_fwd } else { 0.0 },
            if tot_bwd > 0.0 { len_bwd / tot_bwd } else { 0.0 },
            if tot_fwd > 0.0 { (tot_bwd / tot_fwd).floor() } else { 0.0 },
        ];
        for (k, want) in expected.iter().enumerate() {
            let got = d(rf[k], out[rf[k]]);
            let rel = (got - want).abs() / want.abs().max(1e-9);
            assert!(
                rel < 1e-6,
                "trial {trial}: identity {k}: got {got}, expected {want} (rel {rel})"
            );
        }
        // exact idempotence
        let again = engine.apply_constraints(x_orig, &out);
        for (p, q) in out.iter().zip(&again) {
            assert_eq!(p.to_bits(), q.to_bits(), "trial {trial}: not idempotent");
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    assert!(secs < 10.0, "constraint suite took {secs:.1}s (limit 10s)");
    println!("[acceptance] criterion 02 constraint soundness: PASS ({secs:.1}s)");
}

// ---------------------------------------------------------------------------
// Criterion 3: clean-model floor
// ---------------------------------------------------------------------------

/// Full-batch logistic regression, the independent learnability oracle.
fn logistic_regression_accuracy(train: &FlowDataset, test: &FlowDataset) -> f64 {
    let n = train.len() as f64;
    let mut w = vec![0.0f64; FEATURE_COUNT];
    let mut b = 0.0f64;
    let lr = 0.5;
    for _ in 0..300 {
        let mut gw = vec![0.0f64; FEATURE_COUNT];
        let mut gb = 0.0f64;
        for i in 0..train.len() {
            let row = train.row(i);
            let z: f64 = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            let err = p - train.label(i) as f64;
            for (g, xi) in gw.iter_mut().zip(row) {
                *g += err * xi;
            }
            gb += err;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g / n;
        }
        b -= lr * gb / n;
    }
    let correct = (0..test.len())
        .filter(|&i| {
            let z: f64 = w.iter().zip(test.row(i)).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            u8::from(z > 0.0) == test.label(i)
        })
        .count();
    correct as f64 / test.len() as f64
}

#[test]
fn criterion_03_clean_model_floor() {
    sweep_table();
    let a = artifacts();
    let oracle = logistic_regression_accuracy(&a.train, &a.test);
    assert!(
        oracle > 0.9,
        "logistic-regression oracle only reaches {oracle:.4}; the task is not learnable enough"
    );
    let median_acc = a.reports[a.median_index].test_accuracy;
    assert!(
        median_acc >= 0.95,
        "median agent accuracy {median_acc:.4} below the 0.95 floor"
    );
    assert!(
        a.train_seconds < 300.0,
        "training took {:.0}s (limit 300s)",
        a.train_seconds
    );
    println!(
        "[acceptance] criterion 03 clean-model floor: PASS (median {median_acc:.4}, oracle {oracle:.4}, {:.0}s)",
        a.train_seconds
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: epsilon-zero collapse
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_epsilon_zero_collapse() {
    let a = artifacts();
    let table = sweep_table();
    let mut rows = 0;
    for r in table.records.iter().filter(|r| r.epsilon == 0.0) {
        if r.run.is_some() {
            // every attack evaluation reproduces the clean model exactly
            assert_eq!(
                r.accuracy, a.clean_accuracy,
                "{}/{} at eps=0: accuracy {} differs from clean {}",
                r.attack, r.loss, r.accuracy, a.clean_accuracy
            );
            assert_eq!(r.fnr, a.clean_fnr, "{}/{} at eps=0: fnr differs", r.attack, r.loss);
        } else {
            // mean rows re-average identical values; allow summation rounding
            assert!((r.accuracy - a.clean_accuracy).abs() < 1e-12);
            let fnr = r.fnr.expect("fnr defined");
            assert!((fnr - a.clean_fnr.expect("clean fnr")).abs() < 1e-12);
        }
        assert_eq!(r.fooling_rate, 0.0, "{}/{} at eps=0: fooling nonzero", r.attack, r.loss);
        rows += 1;
    }
    assert!(rows > 0);
    println!("[acceptance] criterion 04 epsilon-zero collapse: PASS ({rows} rows exact)");
}

// ---------------------------------------------------------------------------
// Criterion 5: constraint cost
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_constraint_cost() {
    let table = sweep_table();
    let top = *GRID.last().unwrap();
    for &eps in GRID.iter().filter(|&&e| e > 0.0) {
        for attack in ["fgsm", "bim"] {
            let unc = fnr_of(mean_row(table, attack, false, "", eps));
            let con = fnr_of(mean_row(table, attack, true, "", eps));
            assert!(
                unc >= con,
                "{attack} at eps={eps}: unconstrained fnr {unc:.4} < constrained {con:.4}"
            );
        }
    }
    let gap = fnr_of(mean_row(table, "bim", false, "", top))
        - fnr_of(mean_row(table, "bim", true, "", top));
    assert!(gap > 0.0, "bim constraint gap at eps={top} is {gap:.4}, not strictly positive");
    println!("[acceptance] criterion 05 constraint cost: PASS (bim gap {gap:.3} at eps={top})");
}

// ---------------------------------------------------------------------------
// Criterion 6: iterative attack at least as strong as single-step
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_bim_at_least_fgsm() {
    let table = sweep_table();
    for &eps in GRID.iter() {
        for constrained in [true, false] {
            let bim = fnr_of(mean_row(table, "bim", constrained, "", eps));
            let fgsm = fnr_of(mean_row(table, "fgsm", constrained, "", eps));
            assert!(
                bim >= fgsm - 0.02,
                "eps={eps} constrained={constrained}: bim fnr {bim:.4} < fgsm {fgsm:.4} - 2pp"
            );
        }
    }
    println!("[acceptance] criterion 06 bim >= fgsm: PASS");
}

// ---------------------------------------------------------------------------
// Criterion 7: universal attack epsilon-monotonicity
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_uap_epsilon_monotonicity() {
    let table = sweep_table();
    let points = [0.002, 0.01, 0.04];
    let rows: Vec<&MetricsRecord> = points
        .iter()
        .map(|&e| mean_row(table, "uap", true, "ce", e))
        .collect();
    for pair in rows.windows(2) {
        assert!(
            pair[1].fooling_rate >= pair[0].fooling_rate - 0.02,
            "fooling rate not nondecreasing: {} -> {}",
            pair[0].fooling_rate,
            pair[1].fooling_rate
        );
        assert!(
            fnr_of(pair[1]) >= fnr_of(pair[0]) - 0.02,
            "fnr not nondecreasing: {} -> {}",
            fnr_of(pair[0]),
            fnr_of(pair[1])
        );
    }
    println!(
        "[acceptance] criterion 07 uap epsilon-monotonicity: PASS (fooling {:.3}/{:.3}/{:.3})",
        rows[0].fooling_rate, rows[1].fooling_rate, rows[2].fooling_rate
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: correlation-loss dominance
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_customized_uap_dominance() {
    let table = sweep_table();
    let top_two = [GRID[GRID.len() - 2], GRID[GRID.len() - 1]];
    for &eps in &top_two {
        let pcc_row = mean_row(table, "uap", true, "pcc_pertu", eps);
        let ce_row = mean_row(table, "uap", true, "ce", eps);
        assert!(
            fnr_of(pcc_row) >= fnr_of(ce_row) - 0.02,
            "eps={eps}: pcc fnr {:.4} < ce fnr {:.4} - 2pp",
            fnr_of(pcc_row),
            fnr_of(ce_row)
        );
        let pcc_p = pcc_row.pcc_pertu.expect("pcc_pertu defined");
        let ce_p = ce_row.pcc_pertu.expect("pcc_pertu defined");
        assert!(
            pcc_p >= ce_p - 0.02,
            "eps={eps}: pcc_pertu {pcc_p:.4} < ce {ce_p:.4} - 0.02"
        );
    }
    println!("[acceptance] criterion 08 customized-uap dominance: PASS");
}

// ---------------------------------------------------------------------------
// Criterion 9: loss-tier ordering at the top budget
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_loss_tier_ordering() {
    let table = sweep_table();
    let top = *GRID.last().unwrap();
    let fnr_at = |loss: &str| fnr_of(mean_row(table, "uap", true, loss, top));
    let pcc = fnr_at("pcc_pertu");
    let pd = [fnr_at("pd_mean"), fnr_at("pd_l2")];
    let cossim = [fnr_at("cossim_l3"), fnr_at("cossim_l4")];
    for (name, v) in [("pd_mean", pd[0]), ("pd_l2", pd[1])] {
        assert!(pcc >= v - 0.02, "pcc fnr {pcc:.4} < {name} {v:.4} - 2pp");
        for (cname, c) in [("cossim_l3", cossim[0]), ("cossim_l4", cossim[1])] {
            assert!(v >= c - 0.02, "{name} fnr {v:.4} < {cname} {c:.4} - 2pp");
        }
    }
    println!(
        "[acceptance] criterion 09 loss tiers: PASS (pcc {pcc:.3} >= pd {:.3}/{:.3} >= cossim {:.3}/{:.3})",
        pd[0], pd[1], cossim[0], cossim[1]
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: correlation/fooling co-movement
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_pcc_fooling_comovement() {
    let table = sweep_table();
    let rows: Vec<&MetricsRecord> = GRID
        .iter()
        .map(|&e| mean_row(table, "uap", true, "ce", e))
        .collect();
    let fooling: Vec<f64> = rows.iter().map(|r| r.fooling_rate).collect();
    let pcc_pertu: Vec<f64> = rows.iter().map(|r| r.pcc_pertu.expect("defined")).collect();
    let pcc_x: Vec<f64> = rows.iter().map(|r| r.pcc_x.expect("defined")).collect();
    let pos = pcc(&pcc_pertu, &fooling).expect("correlation defined");
    let neg = pcc(&pcc_x, &fooling).expect("correlation defined");
    assert!(pos > 0.0, "corr(pcc_pertu, fooling) = {pos:.4}, expected positive");
    assert!(neg < 0.0, "corr(pcc_x, fooling) = {neg:.4}, expected negative");
    println!(
        "[acceptance] criterion 10 pcc/fooling co-movement: PASS (+{pos:.3} / {neg:.3})"
    );
}

// ---------------------------------------------------------------------------
// Criterion 11: sweep determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_11_sweep_determinism() {
    let a = artifacts();
    let small = |jobs: usize| SweepConfig {
        epsilon_grid: vec![0.0, 0.01, 0.04],
        attacks: vec![
            AttackSelector::fgsm(true),
            AttackSelector::bim(true),
            AttackSelector::uap(LossKind::CeTargeted),
        ],
        runs_per_cell: 3,
        master_seed: 99,
        jobs,
        uap_seed_fraction: 0.05,
        uap_max_iter: 3,
        ..SweepConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for (i, jobs) in [1usize, 8, 1].into_iter().enumerate() {
        let table = run_sweep(&a.net, &a.train, &a.test, &small(jobs), &a.engine).unwrap();
        let path = dir.path().join(format!("metrics_{i}.csv"));
        write_metrics_csv(&path, &table.records).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1], "jobs=1 vs jobs=8 differ");
    assert_eq!(bytes[0], bytes[2], "two identical runs differ");
    println!("[acceptance] criterion 11 sweep determinism: PASS");
}

// ---------------------------------------------------------------------------
// Criterion 12: optional real-data checks
// ---------------------------------------------------------------------------

#[test]
fn criterion_12_optional_real_dataset() {
    let var = match std::env::var("UAPFLOW_CICIDS2018") {
        Ok(v) if !v.is_empty() => v,
        _ => {
            println!(
                "[acceptance] criterion 12 real dataset: SKIP (set UAPFLOW_CICIDS2018 to CSV path(s))"
            );
            return;
        }
    };
    let paths: Vec<std::path::PathBuf> = var.split(',').map(Into::into).collect();
    let profile = profiles::cicids2018_profile();
    let (raw, _) = uapflow_core::ingest::load_csv(&paths, &profile).expect("load real csv");
    assert!(raw.len() >= 50_000, "real dataset must have at least 50k usable rows");
    let labels: Vec<u8> = raw
        .labels
        .iter()
        .map(|l| uapflow_core::dataset::map_label(l, &profile.benign_label))
        .collect();
    let (train_idx, test_idx) =
        uapflow_core::dataset::stratified_split_indices(&labels, 0.8, seeds::derive(MASTER_SEED, "split", 0))
            .expect("split");
    let (train_ds, _) = preprocess(&raw.subset(&train_idx), &profile, RangeFit::FitFromData)
        .expect("fit train");
    let (test_ds, _) = preprocess(&raw.subset(&test_idx), &profile, RangeFit::Frozen(&train_ds.schema))
        .expect("freeze test");
    let balanced = train_ds
        .undersample(seeds::derive(MASTER_SEED, "undersample", 0))
        .expect("undersample");

    let results = train_protocol(&balanced, &test_ds, &TrainConfig::default()).expect("training");
    let reports: Vec<TrainReport> = results.iter().map(|(_, r)| r.clone()).collect();
    let median = select_median_agent(&reports).unwrap();
    let acc = reports[median].test_accuracy;
    assert!(acc >= 0.99, "real-data median accuracy {acc:.4} below 0.99");

    let engine = ConstraintEngine::new(&balanced.schema).unwrap();
    let cfg = SweepConfig {
        epsilon_grid: vec![0.0, 0.002, 0.01, 0.04],
        attacks: vec![
            AttackSelector::fgsm(true),
            AttackSelector::fgsm(false),
            AttackSelector::bim(true),
            AttackSelector::bim(false),
            AttackSelector::uap(LossKind::CeTargeted),
        ],
        runs_per_cell: RUNS_PER_CELL,
        master_seed: MASTER_SEED,
        uap_max_iter: 10,
        ..SweepConfig::default()
    };
    let table = run_sweep(&results[median].0, &balanced, &test_ds, &cfg, &engine).expect("sweep");
    // criterion 5 analog
    for &eps in &[0.002, 0.01, 0.04] {
        for attack in ["fgsm", "bim"] {
            let unc = fnr_of(mean_row(&table, attack, false, "", eps));
            let con = fnr_of(mean_row(&table, attack, true, "", eps));
            assert!(unc >= con, "real data: {attack} at {eps}: {unc} < {con}");
        }
        // criterion 6 analog
        let bim = fnr_of(mean_row(&table, "bim", true, "", eps));
        let fgsm = fnr_of(mean_row(&table, "fgsm", true, "", eps));
        assert!(bim >= fgsm - 0.02, "real data: bim {bim} < fgsm {fgsm} - 2pp at {eps}");
    }
    // criterion 7 analog
    let f: Vec<f64> = [0.002, 0.01, 0.04]
        .iter()
        .map(|&e| mean_row(&table, "uap", true, "ce", e).fooling_rate)
        .collect();
    assert!(f[1] >= f[0] - 0.02 && f[2] >= f[1] - 0.02, "real data: fooling not monotone {f:?}");
    println!("[acceptance] criterion 12 real dataset: PASS (median acc {acc:.4})");
}
