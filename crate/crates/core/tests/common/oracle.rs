//! Brute-force recomputations that share no code with the library.

use std::collections::{HashMap, HashSet};

use factcheck_core::bias_audit::CountTable;
use factcheck_core::corpus::GoldEvidence;
use factcheck_core::verification::{loss_and_grad, Example, FeatureConfig, FeatureMode, Hyperparams, LinearVerifierModel, SparseVector};
use factcheck_core::{ClaimRecord, Corpus, Label, Lexicon, Source};
use rand::seq::SliceRandom;
use rand::Rng;

/// A corpus whose claims are concatenations of two-character words, with
/// the generating tokens kept alongside.
pub struct TokenCorpus {
    pub corpus: Corpus,
    pub lexicon: Lexicon,
    pub tokens: Vec<Vec<String>>,
}

fn cjk_word<R: Rng>(rng: &mut R) -> String {
    (0..2).map(|_| char::from_u32(rng.gen_range(0x4E00..0x9FA5)).unwrap()).collect()
}

/// Up to `max_claims` claims over a vocabulary of at most `max_vocab` words.
/// Commas between words do not count as tokens.
pub fn random_token_corpus<R: Rng>(rng: &mut R, max_claims: usize, max_vocab: usize) -> TokenCorpus {
    let mut vocab = HashSet::new();
    let v = rng.gen_range(1..=max_vocab);
    while vocab.len() < v {
        vocab.insert(cjk_word(rng));
    }
    let mut vocab: Vec<String> = vocab.into_iter().collect();
    vocab.sort();
    let n = rng.gen_range(1..=max_claims);
    let mut records = Vec::new();
    let mut tokens = Vec::new();
    for i in 0..n {
        let len = rng.gen_range(1..=8);
        let toks: Vec<String> = (0..len).map(|_| vocab.choose(rng).unwrap().clone()).collect();
        let mut text = String::new();
        for t in &toks {
            if !text.is_empty() && rng.gen_bool(0.2) {
                text.push('，');
            }
            text.push_str(t);
        }
        let label = *Label::ALL.choose(rng).unwrap();
        records.push(ClaimRecord {
            id: format!("r{i}"),
            text,
            label,
            domain: "x".into(),
            gold_evidence: Vec::<GoldEvidence>::new(),
            documents: Vec::new(),
            source: Source::Original,
        });
        tokens.push(toks);
    }
    TokenCorpus {
        corpus: Corpus::new(records).unwrap(),
        lexicon: Lexicon::from_words(&vocab),
        tokens,
    }
}

/// (phrase, label) → occurrences, over word n-grams of the given tokens.
pub fn brute_counts(tokens: &[Vec<String>], labels: &[Label], n: usize) -> HashMap<(String, Label), u64> {
    let mut out = HashMap::new();
    for (toks, &l) in tokens.iter().zip(labels) {
        if toks.len() < n {
            continue;
        }
        for start in 0..=toks.len() - n {
            let g = toks[start..start + n].concat();
            *out.entry((g, l)).or_insert(0) += 1;
        }
    }
    out
}

pub struct BruteStats {
    pub lmi: f64,
    pub p_label_given_word: f64,
}

pub fn brute_stats(counts: &HashMap<(String, Label), u64>, phrase: &str, label: Label) -> BruteStats {
    let mut d = 0u64;
    let mut c_w = 0u64;
    let mut c_l = 0u64;
    for ((p, l), &c) in counts {
        d += c;
        if p == phrase {
            c_w += c;
        }
        if *l == label {
            c_l += c;
        }
    }
    let c_wl = counts.get(&(phrase.to_string(), label)).copied().unwrap_or(0);
    let lmi = if c_wl == 0 {
        0.0
    } else {
        (c_wl as f64 / d as f64) * ((c_wl as f64 * d as f64) / (c_w as f64 * c_l as f64)).ln()
    };
    BruteStats {
        lmi,
        p_label_given_word: c_wl as f64 / c_w as f64,
    }
}

/// Largest absolute deviation of the library's lmi and p(l|w) from the
/// brute-force values, over every phrase and label. Also fails on
/// differing phrase sets.
pub fn lmi_max_error(table: &CountTable, counts: &HashMap<(String, Label), u64>) -> Result<f64, String> {
    let brute_phrases: HashSet<&str> = counts.keys().map(|(p, _)| p.as_str()).collect();
    let lib_phrases: HashSet<&str> = table.phrases().collect();
    if brute_phrases != lib_phrases {
        return Err(format!("phrase sets differ: {} vs {}", lib_phrases.len(), brute_phrases.len()));
    }
    let mut worst: f64 = 0.0;
    for p in brute_phrases {
        for l in Label::ALL {
            let b = brute_stats(counts, p, l);
            let lmi = factcheck_core::bias_audit::lmi(table, p, l).map_err(|e| e.to_string())?;
            let pl = factcheck_core::bias_audit::p_label_given_word(table, p, l).map_err(|e| e.to_string())?;
            worst = worst.max((lmi - b.lmi).abs()).max((pl - b.p_label_given_word).abs());
        }
    }
    Ok(worst)
}

/// Per-claim |gold ∩ first k| / |gold|, claims without gold skipped.
pub fn brute_recall(ranked: &[Vec<u32>], gold: &[Vec<u32>], k: usize) -> Vec<Option<f64>> {
    ranked
        .iter()
        .zip(gold)
        .map(|(r, g)| {
            if g.is_empty() {
                return None;
            }
            let mut hits = 0;
            for x in g {
                if r.iter().take(k).any(|y| y == x) {
                    hits += 1;
                }
            }
            Some(hits as f64 / g.len() as f64)
        })
        .collect()
}

/// κ for a 2×2 contingency table, rows rater A, columns rater B.
pub fn kappa_2x2(t: [[f64; 2]; 2]) -> f64 {
    let n = t[0][0] + t[0][1] + t[1][0] + t[1][1];
    let po = (t[0][0] + t[1][1]) / n;
    let a0 = (t[0][0] + t[0][1]) / n;
    let b0 = (t[0][0] + t[1][0]) / n;
    let pe = a0 * b0 + (1.0 - a0) * (1.0 - b0);
    (po - pe) / (1.0 - pe)
}

/// A small random model and batch; returns the largest relative deviation
/// of the analytic gradient from central differences with step `eps`.
pub fn gradient_check<R: Rng>(rng: &mut R, eps: f64) -> f64 {
    let features = FeatureConfig {
        mode: FeatureMode::ClaimOnly,
        hash_bits: 3,
        hash_seed: 0,
    };
    let hp = Hyperparams {
        l2: rng.gen_range(0.0..0.5),
        ..Hyperparams::default()
    };
    let classes = if rng.gen_bool(0.5) { Label::ALL.to_vec() } else { vec![Label::Supported, Label::Refuted] };
    let k = classes.len();
    let mut m = LinearVerifierModel::zeros(classes, features, hp, Lexicon::new());
    for w in m.weights.iter_mut().flatten() {
        *w = rng.gen_range(-1.0..1.0);
    }
    for b in m.bias.iter_mut() {
        *b = rng.gen_range(-1.0..1.0);
    }
    let batch: Vec<Example> = (0..rng.gen_range(1..8))
        .map(|_| {
            let mut x = std::collections::BTreeMap::new();
            for i in 0..m.dim() as u32 {
                if rng.gen_bool(0.5) {
                    x.insert(i, rng.gen_range(-2.0..2.0));
                }
            }
            Example {
                x: SparseVector::from_map(x),
                class: rng.gen_range(0..k),
            }
        })
        .collect();
    let (_, g) = loss_and_grad(&m, &batch).unwrap();
    let loss = |m: &LinearVerifierModel| loss_and_grad(m, &batch).unwrap().0;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
    let mut worst: f64 = 0.0;
    for c in 0..k {
        for i in 0..m.dim() {
            let mut p = m.clone();
            p.weights[c][i] += eps;
            let mut q = m.clone();
            q.weights[c][i] -= eps;
            worst = worst.max(rel(g.weights[c][i], (loss(&p) - loss(&q)) / (2.0 * eps)));
        }
        let mut p = m.clone();
        p.bias[c] += eps;
        let mut q = m.clone();
        q.bias[c] -= eps;
        worst = worst.max(rel(g.bias[c], (loss(&p) - loss(&q)) / (2.0 * eps)));
    }
    worst
}
