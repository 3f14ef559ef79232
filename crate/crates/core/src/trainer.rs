//! DQN training over the dataset-as-MDP.
//!
//! Each training-set row is a state; the predicted label is the action; the
//! reward is +1 for a correct prediction and -1 otherwise. One episode walks
//! a fresh permutation of the training set, the next state is drawn uniformly
//! at random, and every step performs a single Adam update on the squared
//! temporal-difference error with the Bellman target held constant. There is
//! no replay buffer and no target network.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::dataset::FlowDataset;
use crate::error::{Error, Result};
use crate::net::{AdamState, ForwardTrace, QNetwork};
use crate::seeds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Discount factor; near zero, so training is almost pure per-sample
    /// regression of Q(s,a) onto the reward.
    pub gamma: f64,
    pub episodes: u32,
    pub learning_rate: f64,
    pub explore_start: f64,
    pub explore_end: f64,
    /// Fraction of total steps over which exploration decays linearly.
    pub explore_fraction: f64,
    pub reward_correct: f64,
    pub reward_incorrect: f64,
    pub runs: u32,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            gamma: 0.001,
            episodes: 10,
            learning_rate: 1e-4,
            explore_start: 1.0,
            explore_end: 0.05,
            explore_fraction: 0.10,
            reward_correct: 1.0,
            reward_incorrect: -1.0,
            runs: 10,
            seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Config("gamma must lie in [0,1]".into()));
        }
        if self.episodes == 0 || self.runs == 0 {
            return Err(Error::Config("episodes and runs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.explore_fraction) {
            return Err(Error::Config("explore fraction must lie in [0,1]".into()));
        }
        Ok(())
    }
}

/// Exploration rate at a given step: linear from start to end over the first
/// `explore_fraction` of total steps, then flat at the end value.
pub fn explore_rate(cfg: &TrainConfig, step: usize, total_steps: usize) -> f64 {
    let decay_steps = cfg.explore_fraction * total_steps as f64;
    if decay_steps <= 0.0 || step as f64 >= decay_steps {
        cfg.explore_end
    } else {
        cfg.explore_start + (cfg.explore_end - cfg.explore_start) * (step as f64 / decay_steps)
    }
}

/// Bellman target: r + γ·max_a' Q(s', a'), treated as a constant by the
/// gradient.
pub fn bellman_target(reward: f64, next_trace: &ForwardTrace, gamma: f64) -> f64 {
    reward + gamma * next_trace.qvalues[0].max(next_trace.qvalues[1])
}

/// The dataset-as-MDP: a permutation walk for current states plus an
/// independent uniform draw for next states.
pub struct MdpEnvironment<'d> {
    dataset: &'d FlowDataset,
    rng: ChaCha8Rng,
    permutation: Vec<usize>,
    cursor: usize,
}

impl<'d> MdpEnvironment<'d> {
    pub fn new(dataset: &'d FlowDataset, seed: u64) -> Result<Self> {
        if dataset.is_empty() {
            return Err(Error::Invalid("cannot build an environment over an empty dataset".into()));
        }
        Ok(MdpEnvironment {
            dataset,
            rng: seeds::rng(seed, "mdp-env", 0),
            permutation: (0..dataset.len()).collect(),
            cursor: 0,
        })
    }

    /// Shuffle a fresh visit order; one episode visits every row exactly once.
    pub fn begin_episode(&mut self) {
        self.permutation.shuffle(&mut self.rng);
        self.cursor = 0;
    }

    /// (current state index, its label, independently drawn next state index)
    pub fn step(&mut self) -> (usize, u8, usize) {
        assert!(self.cursor < self.permutation.len(), "episode exhausted");
        let s = self.permutation[self.cursor];
        self.cursor += 1;
        let next = self.rng.gen_range(0..self.dataset.len());
        (s, self.dataset.label(s), next)
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub run_index: u32,
    pub run_seed: u64,
    /// Fraction of steps whose chosen action matched the label, per episode.
    pub episode_train_accuracy: Vec<f64>,
    /// Greedy-policy accuracy on the held-out test set.
    pub test_accuracy: f64,
}

/// Train one agent. Deterministic given `(cfg, run_seed)`.
pub fn train_run(
    train: &FlowDataset,
    test: &FlowDataset,
    cfg: &TrainConfig,
    run_index: u32,
    run_seed: u64,
) -> Result<(QNetwork, TrainReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Invalid("empty training set".into()));
    }
    let mut net = QNetwork::seeded(seeds::derive(run_seed, "net-init", 0));
    let mut env = MdpEnvironment::new(train, seeds::derive(run_seed, "env", 0))?;
    let mut action_rng = seeds::rng(run_seed, "actions", 0);
    let mut adam = AdamState::new(cfg.learning_rate);

    let total_steps = cfg.episodes as usize * train.len();
    let mut step_i = 0usize;
    let mut episode_train_accuracy = Vec::with_capacity(cfg.episodes as usize);

    for _ in 0..cfg.episodes {
        env.begin_episode();
        let mut correct = 0usize;
        for _ in 0..train.len() {
            let (s, label, next) = env.step();
            let trace = net.forward(train.row(s))?;
            let eps = explore_rate(cfg, step_i, total_steps);
            let action = if action_rng.gen::<f64>() < eps {
                action_rng.gen_range(0..2usize)
            } else {
                trace.predicted()
            };
            let reward = if action as u8 == label {
                cfg.reward_correct
            } else {
                cfg.reward_incorrect
            };
            let next_trace = net.forward(train.row(next))?;
            let target = bellman_target(reward, &next_trace, cfg.gamma);
            let (loss, grads) = net.td_weight_gradients(&trace, action, target)?;
            debug_assert!(loss >= 0.0);
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    step: step_i,
                    detail: format!("non-finite TD loss in run {run_index}"),
                });
            }
            adam.step(&mut net, &grads)?;
            if action as u8 == label {
                correct += 1;
            }
            step_i += 1;
        }
        episode_train_accuracy.push(correct as f64 / train.len() as f64);
    }
    if !net.all_finite() {
        return Err(Error::Divergence {
            step: step_i,
            detail: format!("non-finite weights after run {run_index}"),
        });
    }
    let test_accuracy = evaluate_accuracy(&net, test)?;
    Ok((
        net,
        TrainReport {
            run_index,
            run_seed,
            episode_train_accuracy,
            test_accuracy,
        },
    ))
}

/// Greedy predictions over a dataset.
pub fn predictions(net: &QNetwork, ds: &FlowDataset) -> Result<Vec<u8>> {
    ds.rows().map(|row| Ok(net.forward(row)?.predicted() as u8)).collect()
}

pub fn evaluate_accuracy(net: &QNetwork, ds: &FlowDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Invalid("empty evaluation set".into()));
    }
    let preds = predictions(net, ds)?;
    let correct = preds
        .iter()
        .zip(ds.labels())
        .filter(|(p, l)| p == l)
        .count();
    Ok(correct as f64 / ds.len() as f64)
}

/// The multi-run protocol: independent seeded runs, executed in parallel.
pub fn train_protocol(
    train: &FlowDataset,
    test: &FlowDataset,
    cfg: &TrainConfig,
) -> Result<Vec<(QNetwork, TrainReport)>> {
    cfg.validate()?;
    (0..cfg.runs)
        .into_par_iter()
        .map(|i| train_run(train, test, cfg, i, seeds::derive(cfg.seed, "train-run", i as u64)))
        .collect()
}

/// Index of the agent whose test accuracy is closest to the median across
/// runs; ties break to the lowest run index.
pub fn select_median_agent(reports: &[TrainReport]) -> Result<usize> {
    if reports.is_empty() {
        return Err(Error::Invalid("no training reports to select from".into()));
    }
    let mut accs: Vec<f64> = reports.iter().map(|r| r.test_accuracy).collect();
    accs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = accs.len();
    let median = if n % 2 == 1 {
        accs[n / 2]
    } else {
        0.5 * (accs[n / 2 - 1] + accs[n / 2])
    };
    let mut best = 0usize;
    let mut best_gap = f64::INFINITY;
    for (i, r) in reports.iter().enumerate() {
        let gap = (r.test_accuracy - median).abs();
        if gap < best_gap {
            best_gap = gap;
            best = i;
        }
    }
    Ok(best)
}

/// Append-style run ledger: one row per (run, episode).
pub fn write_run_ledger(path: &Path, reports: &[TrainReport]) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "run,episode,train_acc,test_acc,seed")?;
    for r in reports {
        for (ep, acc) in r.episode_train_accuracy.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.run_index, ep, acc, r.test_accuracy, r.run_seed
            )?;
        }
    }
    Ok(())
}
