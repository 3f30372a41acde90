//! Label-conditional phrase statistics over claim texts: p(l|w) and local
//! mutual information, plus domain/label skew reports.
//!
//! All probabilities are estimated from occurrence counts. `|D|` is the total
//! number of n-gram occurrences in the corpus, counted with multiplicity.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::{corpus_stats, Corpus, Label};
use crate::report::{csv_string, fmt_f64, MarkdownTable};
use crate::segmenter::{ngrams, words, Lexicon, SegmentError};

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("phrase {0:?} does not occur in the table")]
    UnseenPhrase(String),
    #[error("count table holds no occurrences")]
    EmptyTable,
    #[error("k must be at least 1")]
    InvalidK,
    #[error(transparent)]
    Segment(#[from] SegmentError),
}

type LabelCounts = [u64; 3];

/// Occurrence counts per (phrase, label).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CountTable {
    pairs: HashMap<String, LabelCounts>,
    labels: LabelCounts,
    total: u64,
}

impl CountTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, phrase: &str, label: Label) {
        self.add_n(phrase, label, 1);
    }

    pub fn add_n(&mut self, phrase: &str, label: Label, n: u64) {
        if n == 0 {
            return;
        }
        let slot = match self.pairs.get_mut(phrase) {
            Some(s) => s,
            None => self.pairs.entry(phrase.to_string()).or_default(),
        };
        slot[label.index()] += n;
        self.labels[label.index()] += n;
        self.total += n;
    }

    /// Adds another table's counts. Commutative and associative, so shards
    /// can be merged in any order.
    pub fn merge(mut self, other: CountTable) -> CountTable {
        for (phrase, counts) in other.pairs {
            let slot = self.pairs.entry(phrase).or_default();
            for i in 0..3 {
                slot[i] += counts[i];
            }
        }
        for i in 0..3 {
            self.labels[i] += other.labels[i];
        }
        self.total += other.total;
        self
    }

    pub fn count_wl(&self, phrase: &str, label: Label) -> u64 {
        self.pairs.get(phrase).map_or(0, |c| c[label.index()])
    }

    pub fn count_w(&self, phrase: &str) -> u64 {
        self.pairs.get(phrase).map_or(0, |c| c.iter().sum())
    }

    pub fn count_l(&self, label: Label) -> u64 {
        self.labels[label.index()]
    }

    /// |D|
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn phrases(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    pub fn vocabulary_size(&self) -> usize {
        self.pairs.len()
    }

    pub fn p_label(&self, label: Label) -> Result<f64, AuditError> {
        if self.total == 0 {
            return Err(AuditError::EmptyTable);
        }
        Ok(self.count_l(label) as f64 / self.total as f64)
    }
}

/// Counts word n-grams of every claim, attributed to the claim's label.
/// Punctuation and whitespace tokens are not phrases.
pub fn build_count_table(corpus: &Corpus, lexicon: &Lexicon, n: usize) -> Result<CountTable, AuditError> {
    if corpus.is_empty() {
        return Err(AuditError::EmptyCorpus);
    }
    if n == 0 {
        return Err(SegmentError::InvalidOrder.into());
    }
    let table = corpus
        .records()
        .par_iter()
        .fold(CountTable::new, |mut t, r| {
            let ws = words(&r.text, lexicon);
            for g in ngrams(&ws, n).expect("order checked above") {
                t.add(&g, r.label);
            }
            t
        })
        .reduce(CountTable::new, CountTable::merge);
    Ok(table)
}

/// count(w, l) / count(w)
pub fn p_label_given_word(table: &CountTable, phrase: &str, label: Label) -> Result<f64, AuditError> {
    let cw = table.count_w(phrase);
    if cw == 0 {
        return Err(AuditError::UnseenPhrase(phrase.to_string()));
    }
    Ok(table.count_wl(phrase, label) as f64 / cw as f64)
}

/// p(w,l) · ln(p(l|w) / p(l)), zero when count(w,l) = 0.
pub fn lmi(table: &CountTable, phrase: &str, label: Label) -> Result<f64, AuditError> {
    if table.total() == 0 {
        return Err(AuditError::EmptyTable);
    }
    let cwl = table.count_wl(phrase, label);
    if cwl == 0 {
        return Ok(0.0);
    }
    let d = table.total() as f64;
    let p_wl = cwl as f64 / d;
    let p_l = table.count_l(label) as f64 / d;
    let p_l_w = cwl as f64 / table.count_w(phrase) as f64;
    Ok(p_wl * (p_l_w / p_l).ln())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhraseStats {
    pub phrase: String,
    pub label: Label,
    pub count_wl: u64,
    pub count_w: u64,
    pub p_l_given_w: f64,
    pub lmi: f64,
}

impl PhraseStats {
    pub fn lmi_e6(&self) -> f64 {
        self.lmi * 1e6
    }
}

fn phrase_stats(table: &CountTable, phrase: &str, label: Label) -> Result<PhraseStats, AuditError> {
    Ok(PhraseStats {
        phrase: phrase.to_string(),
        label,
        count_wl: table.count_wl(phrase, label),
        count_w: table.count_w(phrase),
        p_l_given_w: p_label_given_word(table, phrase, label)?,
        lmi: lmi(table, phrase, label)?,
    })
}

/// Ranking order: LMI descending, then count(w) descending, then phrase.
fn rank_order(a: &PhraseStats, b: &PhraseStats) -> Ordering {
    b.lmi
        .total_cmp(&a.lmi)
        .then(b.count_w.cmp(&a.count_w))
        .then_with(|| a.phrase.cmp(&b.phrase))
}

pub fn top_k_by_lmi(
    table: &CountTable,
    label: Label,
    k: usize,
    min_count: u64,
) -> Result<Vec<PhraseStats>, AuditError> {
    if k == 0 {
        return Err(AuditError::InvalidK);
    }
    let mut stats = table
        .phrases()
        .filter(|p| table.count_w(p) >= min_count)
        .map(|p| phrase_stats(table, p, label))
        .collect::<Result<Vec<_>, _>>()?;
    stats.sort_by(rank_order);
    stats.truncate(k);
    Ok(stats)
}

pub fn phrase_stats_csv(rows: &[PhraseStats]) -> String {
    csv_string(
        &["phrase", "label", "count_wl", "count_w", "p_l_given_w", "lmi", "lmi_e6"],
        rows.iter().map(|r| {
            [
                r.phrase.clone(),
                r.label.to_string(),
                r.count_wl.to_string(),
                r.count_w.to_string(),
                fmt_f64(r.p_l_given_w),
                fmt_f64(r.lmi),
                fmt_f64(r.lmi_e6()),
            ]
        }),
    )
}

/// Word / LMI (×10⁻⁶) / p(l|w) layout.
pub fn phrase_stats_markdown(rows: &[PhraseStats]) -> String {
    let mut t = MarkdownTable::new(vec!["Word".into(), "LMI (1e-6)".into(), "p(l|w)".into()]);
    for r in rows {
        t.push(vec![
            r.phrase.clone(),
            format!("{:.0}", r.lmi_e6()),
            format!("{:.2}", r.p_l_given_w),
        ]);
    }
    t.render()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRow {
    pub domain: String,
    pub count: usize,
    pub share_of_total: f64,
    pub label_proportions: BTreeMap<Label, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainLabelReport {
    pub total: usize,
    pub rows: Vec<DomainRow>,
}

impl DomainLabelReport {
    pub fn row(&self, domain: &str) -> Option<&DomainRow> {
        self.rows.iter().find(|r| r.domain == domain)
    }

    pub fn to_csv(&self) -> String {
        csv_string(
            &["domain", "count", "share_of_total", "supported", "refuted", "nei"],
            self.rows.iter().map(|r| {
                let mut cells = vec![r.domain.clone(), r.count.to_string(), fmt_f64(r.share_of_total)];
                cells.extend(Label::ALL.iter().map(|l| fmt_f64(r.label_proportions[l])));
                cells
            }),
        )
    }

    pub fn to_markdown(&self) -> String {
        let mut t = MarkdownTable::new(vec![
            "Domain".into(),
            "Claims".into(),
            "Share".into(),
            "SUPPORTED".into(),
            "REFUTED".into(),
            "NEI".into(),
        ]);
        for r in &self.rows {
            let mut cells = vec![
                r.domain.clone(),
                r.count.to_string(),
                format!("{:.1}%", 100.0 * r.share_of_total),
            ];
            cells.extend(
                Label::ALL
                    .iter()
                    .map(|l| format!("{:.1}%", 100.0 * r.label_proportions[l])),
            );
            t.push(cells);
        }
        t.render()
    }
}

pub fn domain_label_report(corpus: &Corpus) -> Result<DomainLabelReport, AuditError> {
    let stats = corpus_stats(corpus).map_err(|_| AuditError::EmptyCorpus)?;
    let rows = stats
        .per_domain
        .keys()
        .map(|d| DomainRow {
            domain: d.clone(),
            count: stats.per_domain[d],
            share_of_total: stats.domain_share(d),
            label_proportions: Label::ALL
                .iter()
                .map(|l| (*l, stats.label_share(d, *l).unwrap_or(0.0)))
                .collect(),
        })
        .collect();
    Ok(DomainLabelReport {
        total: stats.total,
        rows,
    })
}
