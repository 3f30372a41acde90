use std::collections::{BTreeMap, HashMap};

use super::{RetrievalError, SentenceScorer};
use crate::corpus::{Corpus, EvidenceDocument};

/// Character-bigram document frequencies over a sentence collection.
///
/// Texts shorter than two characters (after dropping whitespace) contribute
/// their single character instead, so every non-empty text has a feature.
#[derive(Debug, Clone, Default)]
pub struct BigramIdf {
    df: HashMap<String, usize>,
    n_docs: usize,
}

fn bigrams(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    match chars.len() {
        0 => Vec::new(),
        1 => vec![chars[0].to_string()],
        _ => chars.windows(2).map(|w| w.iter().collect()).collect(),
    }
}

impl BigramIdf {
    pub fn fit<'a, I>(sentences: I) -> Self
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut idf = BigramIdf::default();
        for s in sentences {
            idf.n_docs += 1;
            let mut grams = bigrams(s);
            grams.sort();
            grams.dedup();
            for g in grams {
                *idf.df.entry(g).or_default() += 1;
            }
        }
        idf
    }

    /// All sentences of all documents in the corpus.
    pub fn fit_corpus(corpus: &Corpus) -> Self {
        Self::fit(
            corpus
                .iter()
                .flat_map(|r| r.documents.iter())
                .flat_map(|d| d.sentences.iter())
                .map(|s| s.text.as_str()),
        )
    }

    /// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
    pub fn idf(&self, gram: &str) -> f64 {
        let df = self.df.get(gram).copied().unwrap_or(0);
        ((1 + self.n_docs) as f64 / (1 + df) as f64).ln() + 1.0
    }

    /// Ordered so that norms and dot products sum in a fixed order.
    fn vector(&self, text: &str) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for g in bigrams(text) {
            *tf.entry(g).or_default() += 1.0;
        }
        for (g, w) in tf.iter_mut() {
            *w *= self.idf(g);
        }
        tf
    }

    pub fn cosine(&self, a: &str, b: &str) -> f64 {
        let va = self.vector(a);
        let vb = self.vector(b);
        let norm = |v: &BTreeMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
        let (na, nb) = (norm(&va), norm(&vb));
        if na == 0.0 || nb == 0.0 {
            return 0.0;
        }
        let dot: f64 = va
            .iter()
            .filter_map(|(g, x)| vb.get(g).map(|y| x * y))
            .sum();
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

/// Scores each sentence independently against the claim and returns
/// `(sentence index, cosine)` best first, ties by index.
pub fn semantic_ranker(claim: &str, sentences: &[&str], idf: &BigramIdf) -> Vec<(usize, f64)> {
    let mut scored: Vec<(usize, f64)> = sentences
        .iter()
        .enumerate()
        .map(|(i, s)| (i, idf.cosine(claim, s)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
}

/// Pairwise TF-IDF baseline as a sentence scorer.
#[derive(Debug, Clone)]
pub struct SemanticRanker {
    idf: BigramIdf,
}

impl SemanticRanker {
    pub fn new(idf: BigramIdf) -> Self {
        SemanticRanker { idf }
    }
}

impl SentenceScorer for SemanticRanker {
    fn score_sentences(&self, claim: &str, doc: &EvidenceDocument) -> Result<Vec<f64>, RetrievalError> {
        Ok(doc
            .sentences
            .iter()
            .map(|s| self.idf.cosine(claim, &s.text))
            .collect())
    }
}
