use std::collections::HashSet;

use super::{RetrievalError, TokenScoreVector, TokenScorer};
use crate::corpus::EvidenceDocument;
use crate::segmenter::{segment, Lexicon};

/// Offline token scorer: a document character scores 1.0 when the word
/// containing it also occurs in the claim, otherwise 0.0.
pub fn lexical_token_scorer(claim: &str, doc: &EvidenceDocument, lexicon: &Lexicon) -> TokenScoreVector {
    let claim_words: HashSet<String> = segment(claim, lexicon)
        .into_iter()
        .filter(|t| t.is_word())
        .map(|t| t.text)
        .collect();
    let mut scores = Vec::with_capacity(doc.char_len());
    for tok in segment(&doc.raw_text, lexicon) {
        let s = if tok.is_word() && claim_words.contains(&tok.text) {
            1.0
        } else {
            0.0
        };
        scores.extend(std::iter::repeat(s).take(tok.char_len()));
    }
    TokenScoreVector::new(doc.doc_id.clone(), scores).expect("binary scores are in range")
}

#[derive(Debug, Clone)]
pub struct LexicalTokenScorer {
    lexicon: Lexicon,
}

impl LexicalTokenScorer {
    pub fn new(lexicon: Lexicon) -> Self {
        LexicalTokenScorer { lexicon }
    }
}

impl TokenScorer for LexicalTokenScorer {
    fn score_tokens(&self, claim: &str, doc: &EvidenceDocument) -> Result<TokenScoreVector, RetrievalError> {
        Ok(lexical_token_scorer(claim, doc, &self.lexicon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::retrieval::{aggregate, RetrievalConfig};

    #[test]
    fn shared_words_score_one() {
        let lex = Lexicon::from_words(["中国", "发布", "昨日"]);
        let doc = EvidenceDocument::new("d", "中国昨日发布");
        let v = lexical_token_scorer("中国发布", &doc, &lex);
        assert_eq!(v.scores(), &[1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        let r = aggregate(&doc, &v, &RetrievalConfig::default()).unwrap();
        assert!((r.sentence_scores[0] - 4.0 / 6.0).abs() < 1e-12);
        assert_eq!(r.selected, vec![0]);
    }

    #[test]
    fn disjoint_document_scores_zero() {
        let doc = EvidenceDocument::new("d", "天气晴朗。");
        let v = lexical_token_scorer("股市下跌", &doc, &Lexicon::new());
        assert!(v.scores().iter().all(|&s| s == 0.0));
        let r = aggregate(&doc, &v, &RetrievalConfig::default()).unwrap();
        assert!(r.selected.is_empty());
    }

    #[test]
    fn identical_document_scores_one() {
        let doc = EvidenceDocument::new("d", "疫苗有效");
        let v = lexical_token_scorer("疫苗有效", &doc, &Lexicon::from_words(["疫苗", "有效"]));
        assert!(v.scores().iter().all(|&s| s == 1.0));
    }
}
