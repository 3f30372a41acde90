use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::VerifyError;
use crate::corpus::Label;
use crate::report::{fmt_f64, MarkdownTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub n: usize,
    pub accuracy: f64,
    /// Every class seen in gold or predictions.
    pub per_class: BTreeMap<Label, ClassMetrics>,
    /// Mean F1 over the classes present in gold.
    pub macro_f1: f64,
}

impl MetricsReport {
    pub fn to_markdown(&self) -> String {
        let mut t = MarkdownTable::new(vec![
            "Class".into(),
            "Precision".into(),
            "Recall".into(),
            "F1".into(),
            "Support".into(),
        ]);
        for (label, m) in &self.per_class {
            t.push(vec![
                label.to_string(),
                format!("{:.4}", m.precision),
                format!("{:.4}", m.recall),
                format!("{:.4}", m.f1),
                m.support.to_string(),
            ]);
        }
        format!(
            "n = {}, accuracy = {}, macro F1 = {}\n\n{}",
            self.n,
            fmt_f64(self.accuracy),
            fmt_f64(self.macro_f1),
            t.render()
        )
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn evaluate(preds: &[Label], golds: &[Label]) -> Result<MetricsReport, VerifyError> {
    if preds.len() != golds.len() {
        return Err(VerifyError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if golds.is_empty() {
        return Err(VerifyError::EmptyEval);
    }
    let gold_classes: BTreeSet<Label> = golds.iter().copied().collect();
    let classes: BTreeSet<Label> = gold_classes.iter().chain(preds).copied().collect();
    let correct = preds.iter().zip(golds).filter(|(p, g)| p == g).count();
    let mut per_class = BTreeMap::new();
    for &c in &classes {
        let tp = preds.iter().zip(golds).filter(|&(&p, &g)| p == c && g == c).count();
        let predicted = preds.iter().filter(|&&p| p == c).count();
        let support = golds.iter().filter(|&&g| g == c).count();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.insert(
            c,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let macro_f1 = gold_classes.iter().map(|c| per_class[c].f1).sum::<f64>() / gold_classes.len() as f64;
    Ok(MetricsReport {
        n: golds.len(),
        accuracy: ratio(correct, golds.len()),
        per_class,
        macro_f1,
    })
}
