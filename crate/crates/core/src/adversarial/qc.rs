use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AdversarialError;
use crate::corpus::{ClaimRecord, Label};

/// An instance as shown to annotators, without its label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcItem {
    pub pair_id: String,
    pub claim: String,
    pub evidence: Vec<String>,
}

/// Seeded uniform sample of `round(fraction·n)` instances (at least one),
/// returned in dataset order.
pub fn sample_for_qc(dataset: &[ClaimRecord], fraction: f64, seed: u64) -> Result<Vec<QcItem>, AdversarialError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(AdversarialError::InvalidFraction(fraction));
    }
    if dataset.is_empty() {
        return Err(AdversarialError::EmptyDataset);
    }
    let n = dataset.len();
    let count = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, n, count).into_vec();
    picked.sort_unstable();
    Ok(picked
        .into_iter()
        .map(|i| {
            let r = &dataset[i];
            QcItem {
                pair_id: r.id.clone(),
                claim: r.text.clone(),
                evidence: r.gold_texts(),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaReport {
    pub kappa: f64,
    /// Raw agreement rate p_o.
    pub observed: f64,
    /// Chance agreement p_e from the two raters' marginals.
    pub expected: f64,
    pub items: usize,
    /// Both raters used one and the same label throughout; κ is set to 1.
    pub degenerate: bool,
}

pub fn cohen_kappa(a: &[Label], b: &[Label]) -> Result<KappaReport, AdversarialError> {
    if a.len() != b.len() {
        return Err(AdversarialError::LengthMismatch { a: a.len(), b: b.len() });
    }
    let n = a.len();
    if n < 2 {
        return Err(AdversarialError::TooFewItems(n));
    }
    let mut ca = [0u64; 3];
    let mut cb = [0u64; 3];
    let mut agree = 0u64;
    for (x, y) in a.iter().zip(b) {
        ca[x.index()] += 1;
        cb[y.index()] += 1;
        agree += u64::from(x == y);
    }
    let nn = (n * n) as u64;
    let chance: u64 = ca.iter().zip(&cb).map(|(x, y)| x * y).sum();
    let observed = agree as f64 / n as f64;
    let expected = chance as f64 / nn as f64;
    if chance == nn {
        log::warn!("both raters gave one identical label to every item; kappa set to 1");
        return Ok(KappaReport {
            kappa: 1.0,
            observed,
            expected,
            items: n,
            degenerate: true,
        });
    }
    Ok(KappaReport {
        kappa: (observed - expected) / (1.0 - expected),
        observed,
        expected,
        items: n,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub pair_id: String,
    pub annotator_id: String,
    pub label: Label,
    #[serde(default)]
    pub grammar_flag: bool,
    /// Milliseconds since the Unix epoch.
    #[serde(default)]
    pub timestamp: u64,
}

/// Append-only JSONL log of annotations; the latest record for a
/// (pair, annotator) wins. Callers serialize writers.
#[derive(Debug)]
pub struct AnnotationStore {
    path: PathBuf,
    latest: BTreeMap<(String, String), AnnotationRecord>,
}

impl AnnotationStore {
    pub fn open(path: &Path) -> Result<Self, AdversarialError> {
        let mut latest = BTreeMap::new();
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let r: AnnotationRecord = serde_json::from_str(line)?;
                latest.insert((r.pair_id.clone(), r.annotator_id.clone()), r);
            }
        }
        Ok(AnnotationStore {
            path: path.to_path_buf(),
            latest,
        })
    }

    pub fn submit(&mut self, record: AnnotationRecord) -> Result<(), AdversarialError> {
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        if let Some(dir) = self.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        self.latest
            .insert((record.pair_id.clone(), record.annotator_id.clone()), record);
        Ok(())
    }

    pub fn records(&self) -> impl Iterator<Item = &AnnotationRecord> {
        self.latest.values()
    }

    pub fn len(&self) -> usize {
        self.latest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latest.is_empty()
    }

    pub fn get(&self, pair_id: &str, annotator_id: &str) -> Option<&AnnotationRecord> {
        self.latest.get(&(pair_id.to_string(), annotator_id.to_string()))
    }

    pub fn annotated_by(&self, annotator_id: &str) -> BTreeSet<&str> {
        self.latest
            .values()
            .filter(|r| r.annotator_id == annotator_id)
            .map(|r| r.pair_id.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairwiseAgreement {
    pub annotator_a: String,
    pub annotator_b: String,
    pub items: usize,
    /// `None` when fewer than two shared items.
    pub report: Option<KappaReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnotatorVsDataset {
    pub annotator: String,
    pub items: usize,
    pub report: Option<KappaReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementReport {
    pub pairwise: Vec<PairwiseAgreement>,
    pub vs_dataset: Vec<AnnotatorVsDataset>,
    pub annotations: usize,
    pub grammar_flags: usize,
}

/// Agreement between every pair of annotators and of each annotator with
/// the dataset labels. An NEI annotation never matches a dataset label.
pub fn agreement_report<'a>(
    records: impl IntoIterator<Item = &'a AnnotationRecord>,
    dataset_labels: &HashMap<String, Label>,
) -> AgreementReport {
    let mut by_annotator: BTreeMap<&str, BTreeMap<&str, Label>> = BTreeMap::new();
    let mut annotations = 0;
    let mut grammar_flags = 0;
    for r in records {
        annotations += 1;
        grammar_flags += usize::from(r.grammar_flag);
        by_annotator
            .entry(r.annotator_id.as_str())
            .or_default()
            .insert(r.pair_id.as_str(), r.label);
    }
    let names: Vec<&str> = by_annotator.keys().copied().collect();
    let mut pairwise = Vec::new();
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            let (la, lb): (Vec<Label>, Vec<Label>) = by_annotator[a]
                .iter()
                .filter_map(|(item, x)| by_annotator[b].get(item).map(|y| (*x, *y)))
                .unzip();
            pairwise.push(PairwiseAgreement {
                annotator_a: a.to_string(),
                annotator_b: b.to_string(),
                items: la.len(),
                report: cohen_kappa(&la, &lb).ok(),
            });
        }
    }
    let vs_dataset = names
        .iter()
        .map(|a| {
            let (la, ld): (Vec<Label>, Vec<Label>) = by_annotator[a]
                .iter()
                .filter_map(|(item, x)| dataset_labels.get(*item).map(|y| (*x, *y)))
                .unzip();
            AnnotatorVsDataset {
                annotator: a.to_string(),
                items: la.len(),
                report: cohen_kappa(&la, &ld).ok(),
            }
        })
        .collect();
    AgreementReport {
        pairwise,
        vs_dataset,
        annotations,
        grammar_flags,
    }
}
