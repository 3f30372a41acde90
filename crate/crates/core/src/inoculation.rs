//! Inoculation sweeps: retrain the linear verifier with growing amounts of
//! adversarial data and follow the gap between original and adversarial
//! test performance.

use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ClaimRecord, Label};
use crate::report::{csv_string, fmt_f64, MarkdownTable};
use crate::segmenter::Lexicon;
use crate::verification::{
    evaluate, train, train_warm, FeatureConfig, Hyperparams, LinearVerifierModel, MetricsReport, VerifierInput,
    VerifyError,
};

pub const DEFAULT_SIZES: [usize; 6] = [0, 50, 100, 200, 400, 800];

#[derive(Debug, Error)]
pub enum InoculationError {
    #[error("adversarial pool shares ids with the evaluation sets: {0:?}")]
    Leakage(Vec<String>),
    #[error("sizes must be strictly increasing, got {0:?}")]
    UnsortedSizes(Vec<usize>),
    #[error("size {size} exceeds the pool of {pool}")]
    SizeExceedsPool { size: usize, pool: usize },
    #[error("size {size} exceeds the base training set of {base} in replacement mode")]
    SizeExceedsBase { size: usize, base: usize },
    #[error("no sizes or no seeds to run")]
    EmptySweep,
    #[error("{0} set is empty")]
    EmptyEvalSet(&'static str),
    #[error("outcome needs at least two sizes with results, got {0}")]
    TooFewSizes(usize),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub id: String,
    pub input: VerifierInput,
    pub label: Label,
}

impl LabeledInstance {
    /// Uses the record's gold evidence texts as the verifier evidence.
    pub fn from_record(record: &ClaimRecord) -> Self {
        LabeledInstance {
            id: record.id.clone(),
            input: VerifierInput::new(record.text.clone(), record.gold_texts()),
            label: record.label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    MacroF1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub features: FeatureConfig,
    pub hyperparams: Hyperparams,
    /// Swap base instances out for pool instances instead of adding them.
    pub replacement: bool,
    /// Continue from the size-0 model instead of retraining from zero.
    pub warm_start: bool,
    pub max_parallel: usize,
}

impl SweepConfig {
    /// Default sizes that fit in a pool of `pool_len`.
    pub fn default_sizes(pool_len: usize) -> Vec<usize> {
        DEFAULT_SIZES.iter().copied().filter(|&s| s <= pool_len).collect()
    }

    fn validate(&self, pool: usize, base: usize) -> Result<(), InoculationError> {
        if self.sizes.is_empty() || self.seeds.is_empty() {
            return Err(InoculationError::EmptySweep);
        }
        if !self.sizes.windows(2).all(|w| w[0] < w[1]) {
            return Err(InoculationError::UnsortedSizes(self.sizes.clone()));
        }
        let max = *self.sizes.last().expect("non-empty");
        if max > pool {
            return Err(InoculationError::SizeExceedsPool { size: max, pool });
        }
        if self.replacement && max > base {
            return Err(InoculationError::SizeExceedsBase { size: max, base });
        }
        Ok(())
    }
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            sizes: DEFAULT_SIZES.to_vec(),
            seeds: (0..5).collect(),
            features: FeatureConfig::default(),
            hyperparams: Hyperparams::default(),
            replacement: false,
            warm_start: false,
            max_parallel: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SetScore {
    pub accuracy: f64,
    pub macro_f1: f64,
}

impl SetScore {
    fn of(report: &MetricsReport) -> Self {
        SetScore {
            accuracy: report.accuracy,
            macro_f1: report.macro_f1,
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Accuracy => self.accuracy,
            Metric::MacroF1 => self.macro_f1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRun {
    pub size: usize,
    pub seed: u64,
    pub train_size: usize,
    /// `Err` holds the failure message for this cell.
    pub scores: Result<(SetScore, SetScore), String>,
}

impl SweepRun {
    pub fn original(&self) -> Option<SetScore> {
        self.scores.as_ref().ok().map(|s| s.0)
    }

    pub fn adversarial(&self) -> Option<SetScore> {
        self.scores.as_ref().ok().map(|s| s.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    /// Ordered by (size, seed).
    pub runs: Vec<SweepRun>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSummary {
    pub size: usize,
    pub seeds_ok: usize,
    pub original: SetScore,
    pub adversarial: SetScore,
}

impl SizeSummary {
    pub fn gap(&self, metric: Metric) -> f64 {
        self.original.get(metric) - self.adversarial.get(metric)
    }
}

impl SweepResult {
    pub fn sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.runs.iter().map(|r| r.size).collect();
        s.dedup();
        s
    }

    /// Seed means per size, over successful runs only.
    pub fn summary(&self) -> Vec<SizeSummary> {
        let mut out = Vec::new();
        for size in self.sizes() {
            let ok: Vec<(SetScore, SetScore)> = self
                .runs
                .iter()
                .filter(|r| r.size == size)
                .filter_map(|r| r.scores.as_ref().ok().copied())
                .collect();
            if ok.is_empty() {
                continue;
            }
            let n = ok.len() as f64;
            let mean = |f: &dyn Fn(&(SetScore, SetScore)) -> f64| ok.iter().map(f).sum::<f64>() / n;
            out.push(SizeSummary {
                size,
                seeds_ok: ok.len(),
                original: SetScore {
                    accuracy: mean(&|s| s.0.accuracy),
                    macro_f1: mean(&|s| s.0.macro_f1),
                },
                adversarial: SetScore {
                    accuracy: mean(&|s| s.1.accuracy),
                    macro_f1: mean(&|s| s.1.macro_f1),
                },
            });
        }
        out
    }

    pub fn gap(&self, size: usize, metric: Metric) -> Option<f64> {
        self.summary().iter().find(|s| s.size == size).map(|s| s.gap(metric))
    }
}

fn to_pairs(items: &[LabeledInstance]) -> Vec<(VerifierInput, Label)> {
    items.iter().map(|i| (i.input.clone(), i.label)).collect()
}

fn score(model: &LinearVerifierModel, set: &[LabeledInstance]) -> Result<SetScore, VerifyError> {
    let preds: Vec<Label> = set.iter().map(|i| model.predict(&i.input).label).collect();
    let golds: Vec<Label> = set.iter().map(|i| i.label).collect();
    Ok(SetScore::of(&evaluate(&preds, &golds)?))
}

/// The first `size` entries of a seeded shuffle of `0..len`. Samples for
/// one seed are nested across sizes.
fn seeded_prefix(len: usize, size: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx.truncate(size);
    idx.sort_unstable();
    idx
}

fn training_set(
    base: &[LabeledInstance],
    pool: &[LabeledInstance],
    size: usize,
    seed: u64,
    replacement: bool,
) -> Vec<(VerifierInput, Label)> {
    let picked = seeded_prefix(pool.len(), size, seed);
    let mut data = if replacement {
        let dropped: HashSet<usize> = seeded_prefix(base.len(), size, seed ^ 0x5eed).into_iter().collect();
        base.iter()
            .enumerate()
            .filter(|(i, _)| !dropped.contains(i))
            .map(|(_, x)| (x.input.clone(), x.label))
            .collect()
    } else {
        to_pairs(base)
    };
    data.extend(picked.into_iter().map(|i| (pool[i].input.clone(), pool[i].label)));
    data
}

pub fn check_leakage(
    pool: &[LabeledInstance],
    original_test: &[LabeledInstance],
    adversarial_test: &[LabeledInstance],
) -> Result<(), InoculationError> {
    let eval: HashSet<&str> = original_test
        .iter()
        .chain(adversarial_test)
        .map(|i| i.id.as_str())
        .collect();
    let mut leaked: Vec<String> = pool
        .iter()
        .filter(|i| eval.contains(i.id.as_str()))
        .map(|i| i.id.clone())
        .collect();
    if leaked.is_empty() {
        return Ok(());
    }
    leaked.sort();
    leaked.dedup();
    Err(InoculationError::Leakage(leaked))
}

/// Trains one model per (size, seed) on the base set plus a seeded sample of
/// the pool and scores it on both evaluation sets.
pub fn run_sweep(
    base_train: &[LabeledInstance],
    pool: &[LabeledInstance],
    original_test: &[LabeledInstance],
    adversarial_test: &[LabeledInstance],
    lexicon: &Lexicon,
    cfg: &SweepConfig,
) -> Result<SweepResult, InoculationError> {
    cfg.validate(pool.len(), base_train.len())?;
    check_leakage(pool, original_test, adversarial_test)?;
    if original_test.is_empty() {
        return Err(InoculationError::EmptyEvalSet("original test"));
    }
    if adversarial_test.is_empty() {
        return Err(InoculationError::EmptyEvalSet("adversarial test"));
    }
    let warm_init = if cfg.warm_start {
        Some(train(&to_pairs(base_train), lexicon.clone(), cfg.features, cfg.hyperparams)?.model)
    } else {
        None
    };
    let cells: Vec<(usize, u64)> = cfg
        .sizes
        .iter()
        .flat_map(|&s| cfg.seeds.iter().map(move |&seed| (s, seed)))
        .collect();
    let run_cell = |&(size, seed): &(usize, u64)| -> SweepRun {
        let data = training_set(base_train, pool, size, seed, cfg.replacement);
        let train_size = data.len();
        let hp = Hyperparams { seed, ..cfg.hyperparams };
        let model = match &warm_init {
            Some(init) if size == 0 => Ok(init.clone()),
            Some(init) => train_warm(init, &data, hp).map(|o| o.model),
            None => train(&data, lexicon.clone(), cfg.features, hp).map(|o| o.model),
        };
        let scores = model
            .and_then(|m| Ok((score(&m, original_test)?, score(&m, adversarial_test)?)))
            .map_err(|e| {
                log::warn!("size {size} seed {seed} failed: {e}");
                e.to_string()
            });
        SweepRun {
            size,
            seed,
            train_size,
            scores,
        }
    };
    let pool_threads = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.max_parallel.max(1))
        .build()
        .expect("thread pool builds");
    let runs = pool_threads.install(|| cells.par_iter().map(run_cell).collect());
    Ok(SweepResult { runs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// The gap narrows and the original set holds.
    Outcome1,
    /// Neither set moves.
    Outcome2,
    /// The original set degrades.
    Outcome3,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeThresholds {
    pub gap: f64,
    pub original: f64,
}

impl Default for OutcomeThresholds {
    fn default() -> Self {
        OutcomeThresholds {
            gap: 0.05,
            original: 0.05,
        }
    }
}

/// Compares seed means at the smallest and largest size.
pub fn classify_outcome(
    result: &SweepResult,
    metric: Metric,
    tau: OutcomeThresholds,
) -> Result<Outcome, InoculationError> {
    let summary = result.summary();
    if summary.len() < 2 {
        return Err(InoculationError::TooFewSizes(summary.len()));
    }
    let first = &summary[0];
    let last = &summary[summary.len() - 1];
    let orig_change = last.original.get(metric) - first.original.get(metric);
    let adv_change = last.adversarial.get(metric) - first.adversarial.get(metric);
    let gap_shrink = first.gap(metric) - last.gap(metric);
    Ok(if -orig_change > tau.original {
        Outcome::Outcome3
    } else if gap_shrink > tau.gap {
        Outcome::Outcome1
    } else if orig_change.abs() <= tau.original && adv_change.abs() <= tau.gap {
        Outcome::Outcome2
    } else {
        Outcome::Mixed
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// size, seed, eval_set, accuracy, macro_f1; failed cells have empty metrics.
    pub long_csv: String,
    pub summary_csv: String,
    pub markdown: String,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn emit_sweep_report(result: &SweepResult) -> SweepReport {
    let mut rows = Vec::new();
    for r in &result.runs {
        for (name, s) in [("original", r.original()), ("adversarial", r.adversarial())] {
            rows.push(vec![
                r.size.to_string(),
                r.seed.to_string(),
                name.to_string(),
                opt(s.map(|s| s.accuracy)),
                opt(s.map(|s| s.macro_f1)),
            ]);
        }
    }
    let long_csv = csv_string(&["size", "seed", "eval_set", "accuracy", "macro_f1"], &rows);

    let summary = result.summary();
    let srows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.size.to_string(),
                s.seeds_ok.to_string(),
                fmt_f64(s.original.accuracy),
                fmt_f64(s.adversarial.accuracy),
                fmt_f64(s.gap(Metric::Accuracy)),
                fmt_f64(s.original.macro_f1),
                fmt_f64(s.adversarial.macro_f1),
                fmt_f64(s.gap(Metric::MacroF1)),
            ]
        })
        .collect();
    let summary_csv = csv_string(
        &[
            "size",
            "seeds",
            "original_accuracy",
            "adversarial_accuracy",
            "gap_accuracy",
            "original_macro_f1",
            "adversarial_macro_f1",
            "gap_macro_f1",
        ],
        &srows,
    );

    let mut t = MarkdownTable::new(
        ["Size", "Seeds", "Orig acc", "Adv acc", "Gap (acc)", "Orig F1", "Adv F1", "Gap (F1)"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    );
    for s in &summary {
        t.push(vec![
            s.size.to_string(),
            s.seeds_ok.to_string(),
            format!("{:.4}", s.original.accuracy),
            format!("{:.4}", s.adversarial.accuracy),
            format!("{:.4}", s.gap(Metric::Accuracy)),
            format!("{:.4}", s.original.macro_f1),
            format!("{:.4}", s.adversarial.macro_f1),
            format!("{:.4}", s.gap(Metric::MacroF1)),
        ]);
    }
    let mut markdown = t.render();
    let failed: BTreeMap<(usize, u64), &String> = result
        .runs
        .iter()
        .filter_map(|r| r.scores.as_ref().err().map(|e| ((r.size, r.seed), e)))
        .collect();
    if !failed.is_empty() {
        markdown.push_str("\nFailed runs:\n");
        for ((size, seed), e) in failed {
            markdown.push_str(&format!("- size {size}, seed {seed}: {e}\n"));
        }
    }
    SweepReport {
        long_csv,
        summary_csv,
        markdown,
    }
}
