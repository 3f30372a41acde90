use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdversarialError, RewriteInstance, RewritePair, RewriteSource};
use crate::segmenter::{segment, Lexicon, WordToken};

const ANTONYMS: &[(&str, &str)] = &[
    ("上调", "下调"),
    ("上升", "下降"),
    ("上涨", "下跌"),
    ("增加", "减少"),
    ("提高", "降低"),
    ("扩大", "缩小"),
    ("高于", "低于"),
    ("多于", "少于"),
    ("有效", "无效"),
    ("安全", "危险"),
    ("合法", "违法"),
    ("真实", "虚假"),
    ("支持", "反对"),
    ("允许", "禁止"),
    ("成功", "失败"),
    ("盈利", "亏损"),
    ("开放", "关闭"),
    ("有", "无"),
];

const ENTITIES: &[(&str, &str)] = &[
    ("北京", "上海"),
    ("中国", "美国"),
    ("男性", "女性"),
    ("夏季", "冬季"),
    ("白天", "夜间"),
];

/// Rewrite rules, tried in order: antonym flip, number change, entity swap.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSet {
    pub antonyms: Vec<(String, String)>,
    /// Added to a shared number; `None` disables the rule.
    pub numeric_delta: Option<i64>,
    pub entities: Vec<(String, String)>,
}

fn owned(table: &[(&str, &str)]) -> Vec<(String, String)> {
    table.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            antonyms: owned(ANTONYMS),
            numeric_delta: Some(5),
            entities: owned(ENTITIES),
        }
    }
}

fn swap_map(table: &[(String, String)]) -> HashMap<&str, &str> {
    let mut m = HashMap::new();
    for (a, b) in table {
        m.insert(a.as_str(), b.as_str());
        m.insert(b.as_str(), a.as_str());
    }
    m
}

impl RuleSet {
    pub fn from_json(text: &str) -> Result<Self, AdversarialError> {
        let rules: RuleSet = serde_json::from_str(text)?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn load(path: &Path) -> Result<Self, AdversarialError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Each word may appear in at most one pair across both tables.
    pub fn validate(&self) -> Result<(), AdversarialError> {
        let mut seen = HashSet::new();
        for (a, b) in self.antonyms.iter().chain(&self.entities) {
            if a.is_empty() || b.is_empty() || a == b {
                return Err(AdversarialError::Template(format!("bad rule pair {a:?}/{b:?}")));
            }
            for w in [a, b] {
                if !seen.insert(w.as_str()) {
                    return Err(AdversarialError::Template(format!("word {w:?} appears in two rule pairs")));
                }
            }
        }
        if self.numeric_delta == Some(0) {
            return Err(AdversarialError::Template("numeric delta must be non-zero".into()));
        }
        Ok(())
    }

    fn words(&self) -> impl Iterator<Item = &str> {
        self.antonyms
            .iter()
            .chain(&self.entities)
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
    }
}

fn is_number(s: &str) -> bool {
    s.chars().next().is_some_and(|c| c.is_ascii_digit()) && s.chars().all(|c| c.is_ascii_digit() || c == '.')
}

/// Numbers followed by 月 or 日 are dates; changing them rarely flips meaning.
fn is_date_part(tokens: &[WordToken], i: usize) -> bool {
    tokens
        .get(i + 1)
        .and_then(|t| t.text.chars().next())
        .is_some_and(|c| c == '月' || c == '日')
}

fn shift_number(s: &str, delta: i64) -> Option<String> {
    match s.split_once('.') {
        None => Some((s.parse::<i64>().ok()? + delta).to_string()),
        Some((_, frac)) => {
            let v: f64 = s.parse().ok()?;
            Some(format!("{:.*}", frac.len(), v + delta as f64))
        }
    }
}

fn numbers(tokens: &[WordToken]) -> HashSet<&str> {
    (0..tokens.len())
        .filter(|&i| is_number(&tokens[i].text) && !is_date_part(tokens, i))
        .map(|i| tokens[i].text.as_str())
        .collect()
}

fn rebuild(tokens: &[WordToken], f: impl Fn(usize, &str) -> Option<String>) -> String {
    tokens
        .iter()
        .enumerate()
        .map(|(i, t)| f(i, &t.text).unwrap_or_else(|| t.text.clone()))
        .collect()
}

/// Applies the first rule that fits a word present in both the claim and
/// the evidence, rewriting every occurrence in both texts.
pub fn rewrite_rule_based(
    instance: &RewriteInstance,
    rules: &RuleSet,
    lexicon: &Lexicon,
    overlap_threshold: f64,
) -> Result<RewritePair, AdversarialError> {
    let lex = lexicon.extended(rules.words());
    let ct = segment(&instance.claim, &lex);
    let et = segment(&instance.evidence, &lex);
    let evidence_words: HashSet<&str> = et.iter().map(|t| t.text.as_str()).collect();

    let tables = [("antonym", swap_map(&rules.antonyms)), ("entity", swap_map(&rules.entities))];
    let try_table = |name: &str, map: &HashMap<&str, &str>| {
        let w = ct
            .iter()
            .map(|t| t.text.as_str())
            .find(|w| map.contains_key(w) && evidence_words.contains(w))?;
        let other = map[w];
        let swap = |_: usize, t: &str| {
            if t == w {
                Some(other.to_string())
            } else if t == other {
                Some(w.to_string())
            } else {
                None
            }
        };
        Some((rebuild(&ct, swap), rebuild(&et, swap), format!("{name}: {w}→{other}")))
    };

    let mut result = try_table(tables[0].0, &tables[0].1);
    if result.is_none() {
        if let Some(delta) = rules.numeric_delta {
            let shared = numbers(&ct).intersection(&numbers(&et)).copied().collect::<HashSet<_>>();
            let target = ct.iter().map(|t| t.text.as_str()).find(|w| shared.contains(w));
            if let Some(n) = target {
                if let Some(m) = shift_number(n, delta) {
                    let apply = |tokens: &[WordToken]| {
                        rebuild(tokens, |i, t| (t == n && !is_date_part(tokens, i)).then(|| m.clone()))
                    };
                    result = Some((apply(&ct), apply(&et), format!("number: {n}→{m}")));
                }
            }
        }
    }
    if result.is_none() {
        result = try_table(tables[1].0, &tables[1].1);
    }
    let (generated_claim, generated_evidence, entry) = result.ok_or_else(|| AdversarialError::NotRewritable {
        id: instance.id.clone(),
    })?;
    let pair = RewritePair {
        original: instance.clone(),
        generated_claim,
        generated_evidence,
        rewrite_log: vec![entry],
        source: RewriteSource::Rule,
    };
    pair.validate(&lex, overlap_threshold)?;
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;

    fn inst(claim: &str, evidence: &str) -> RewriteInstance {
        RewriteInstance {
            id: "t".into(),
            claim: claim.into(),
            evidence: evidence.into(),
            label: Label::Supported,
            domain: "d".into(),
        }
    }

    fn lex() -> Lexicon {
        Lexicon::from_words(["央行", "宣布", "基点", "利率", "地铁", "票价", "调整"])
    }

    #[test]
    fn antonym_flip_in_both_texts() {
        let p = rewrite_rule_based(
            &inst("央行宣布利率上调27个基点", "本周央行宣布，利率上调27个基点。"),
            &RuleSet::default(),
            &lex(),
            0.6,
        )
        .unwrap();
        assert_eq!(p.generated_claim, "央行宣布利率下调27个基点");
        assert_eq!(p.generated_evidence, "本周央行宣布，利率下调27个基点。");
        assert_eq!(p.rewrite_log, ["antonym: 上调→下调"]);
        assert_eq!(p.source, RewriteSource::Rule);
    }

    #[test]
    fn shared_amount_is_changed() {
        let p = rewrite_rule_based(
            &inst("地铁票价调整为5元", "从下月起，地铁票价调整为5元。"),
            &RuleSet::default(),
            &lex(),
            0.6,
        )
        .unwrap();
        assert_eq!(p.generated_claim, "地铁票价调整为10元");
        assert_eq!(p.generated_evidence, "从下月起，地铁票价调整为10元。");
    }

    #[test]
    fn dates_and_unshared_numbers_are_left_alone() {
        let err = rewrite_rule_based(&inst("地铁5月开通", "地铁将于5月开通。"), &RuleSet::default(), &lex(), 0.6).unwrap_err();
        assert!(matches!(err, AdversarialError::NotRewritable { .. }));
    }

    #[test]
    fn nothing_shared_is_not_rewritable() {
        let err = rewrite_rule_based(&inst("天气很好", "今天阳光明媚。"), &RuleSet::default(), &lex(), 0.6).unwrap_err();
        assert!(matches!(err, AdversarialError::NotRewritable { .. }));
    }

    #[test]
    fn entity_swap_is_last_resort() {
        let p = rewrite_rule_based(
            &inst("北京地铁票价调整", "北京地铁票价将调整。"),
            &RuleSet::default(),
            &lex(),
            0.5,
        )
        .unwrap();
        assert_eq!(p.generated_claim, "上海地铁票价调整");
    }

    #[test]
    fn flip_twice_is_identity() {
        let rules = RuleSet::default();
        let first = rewrite_rule_based(&inst("利率上调，央行宣布", "利率上调而非下调。"), &rules, &lex(), 0.0).unwrap();
        assert_eq!(first.generated_evidence, "利率下调而非上调。");
        let back = rewrite_rule_based(&inst(&first.generated_claim, &first.generated_evidence), &rules, &lex(), 0.0).unwrap();
        assert_eq!(back.generated_claim, "利率上调，央行宣布");
        assert_eq!(back.generated_evidence, "利率上调而非下调。");
    }

    #[test]
    fn decimals_keep_precision() {
        assert_eq!(shift_number("2.50", 5).unwrap(), "7.50");
        assert_eq!(shift_number("27", 5).unwrap(), "32");
    }

    #[test]
    fn rule_set_validation() {
        let mut r = RuleSet::default();
        r.entities.push(("上调".into(), "平调".into()));
        assert!(r.validate().is_err());
        assert!(RuleSet::from_json(r#"{"antonyms":[["多","少"]],"numeric_delta":null,"entities":[]}"#).is_ok());
    }
}
