use std::collections::BTreeMap;

use serde::Serialize;

use super::{Corpus, CorpusError, Label};
use crate::report::{fmt_f64, MarkdownTable};

/// Domain and label distribution of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub total: usize,
    pub per_domain: BTreeMap<String, usize>,
    pub per_label: BTreeMap<Label, usize>,
    pub table: BTreeMap<String, BTreeMap<Label, usize>>,
}

impl StatsReport {
    pub fn cell(&self, domain: &str, label: Label) -> usize {
        self.table
            .get(domain)
            .and_then(|row| row.get(&label))
            .copied()
            .unwrap_or(0)
    }

    /// Share of `label` among the claims of `domain`.
    pub fn label_share(&self, domain: &str, label: Label) -> Option<f64> {
        let n = *self.per_domain.get(domain)?;
        Some(self.cell(domain, label) as f64 / n as f64)
    }

    /// Share of the whole corpus that falls in `domain`.
    pub fn domain_share(&self, domain: &str) -> f64 {
        self.per_domain.get(domain).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn label_total_share(&self, label: Label) -> f64 {
        self.per_label.get(&label).copied().unwrap_or(0) as f64 / self.total as f64
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["domain", "label", "count", "share_of_domain", "share_of_total"])
            .expect("in-memory csv");
        for (domain, row) in &self.table {
            for label in Label::ALL {
                let count = row.get(&label).copied().unwrap_or(0);
                w.write_record([
                    domain.as_str(),
                    label.as_str(),
                    &count.to_string(),
                    &fmt_f64(count as f64 / self.per_domain[domain] as f64),
                    &fmt_f64(count as f64 / self.total as f64),
                ])
                .expect("in-memory csv");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
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
        for (domain, n) in &self.per_domain {
            let mut row = vec![domain.clone(), n.to_string(), pct(self.domain_share(domain))];
            for label in Label::ALL {
                row.push(pct(self.label_share(domain, label).unwrap_or(0.0)));
            }
            t.push(row);
        }
        let mut row = vec!["all".into(), self.total.to_string(), pct(1.0)];
        for label in Label::ALL {
            row.push(pct(self.label_total_share(label)));
        }
        t.push(row);
        t.render()
    }
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

pub fn corpus_stats(corpus: &Corpus) -> Result<StatsReport, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let mut report = StatsReport {
        total: corpus.len(),
        per_domain: BTreeMap::new(),
        per_label: BTreeMap::new(),
        table: BTreeMap::new(),
    };
    for r in corpus {
        *report.per_domain.entry(r.domain.clone()).or_default() += 1;
        *report.per_label.entry(r.label).or_default() += 1;
        *report
            .table
            .entry(r.domain.clone())
            .or_default()
            .entry(r.label)
            .or_default() += 1;
    }
    Ok(report)
}
