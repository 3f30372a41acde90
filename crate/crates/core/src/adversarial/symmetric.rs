use std::collections::HashSet;

use super::{AdversarialError, RewritePair};
use crate::corpus::{ClaimRecord, Corpus, EvidenceDocument, GoldEvidence, Label, Source};
use crate::segmenter::Lexicon;

const EVIDENCE_DOC: &str = "evidence";

fn instance(id: String, claim: &str, evidence: &str, label: Label, domain: &str, source: Source) -> ClaimRecord {
    let doc = EvidenceDocument::new(EVIDENCE_DOC, evidence.trim());
    let gold_evidence = (0..doc.sentences.len())
        .map(|i| GoldEvidence::Indexed {
            doc_id: EVIDENCE_DOC.into(),
            sent_index: i,
        })
        .collect();
    ClaimRecord {
        id,
        text: claim.trim().to_string(),
        label,
        domain: domain.to_string(),
        gold_evidence,
        documents: vec![doc],
        source,
    }
}

/// Expands each pair (c, e, L) with rewrite (c′, e′) into four instances:
/// `-o` (c,e)→L, `-g` (c′,e′)→L, `-x1` (c,e′)→¬L and `-x2` (c′,e)→¬L.
///
/// Every claim text must be unique across all pairs so that each one ends
/// up exactly twice in the output, once per label.
pub fn build_symmetric(pairs: &[RewritePair], lexicon: &Lexicon, overlap_threshold: f64) -> Result<Corpus, AdversarialError> {
    let mut claims = HashSet::new();
    let mut out = Vec::with_capacity(4 * pairs.len());
    for p in pairs {
        p.validate(lexicon, overlap_threshold)?;
        let o = &p.original;
        let flipped = o.label.flipped().ok_or_else(|| AdversarialError::NeiInstance { id: o.id.clone() })?;
        for c in [o.claim.trim(), p.generated_claim.trim()] {
            if !claims.insert(c.to_string()) {
                return Err(AdversarialError::DuplicateClaim(c.to_string()));
            }
        }
        let (c, e) = (o.claim.as_str(), o.evidence.as_str());
        let (c2, e2) = (p.generated_claim.as_str(), p.generated_evidence.as_str());
        out.push(instance(format!("{}-o", o.id), c, e, o.label, &o.domain, Source::Original));
        out.push(instance(format!("{}-g", o.id), c2, e2, o.label, &o.domain, Source::Generated));
        out.push(instance(format!("{}-x1", o.id), c, e2, flipped, &o.domain, Source::Cross));
        out.push(instance(format!("{}-x2", o.id), c2, e, flipped, &o.domain, Source::Cross));
    }
    Corpus::new(out).map_err(|e| AdversarialError::Invariant {
        id: "dataset".into(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversarial::{RewriteInstance, RewriteSource};

    fn pair(id: &str, label: Label) -> RewritePair {
        RewritePair {
            original: RewriteInstance {
                id: id.into(),
                claim: format!("{id}利率上调"),
                evidence: format!("{id}央行宣布利率上调。"),
                label,
                domain: "finance".into(),
            },
            generated_claim: format!("{id}利率下调"),
            generated_evidence: format!("{id}央行宣布利率下调。"),
            rewrite_log: vec![],
            source: RewriteSource::Rule,
        }
    }

    fn lex() -> Lexicon {
        Lexicon::from_words(["利率", "上调", "下调"])
    }

    #[test]
    fn one_supported_pair() {
        let ds = build_symmetric(&[pair("a", Label::Supported)], &lex(), 0.3).unwrap();
        let got: Vec<(&str, &str, Label, Source)> = ds
            .iter()
            .map(|r| (r.text.as_str(), r.documents[0].raw_text.as_str(), r.label, r.source))
            .collect();
        assert_eq!(
            got,
            [
                ("a利率上调", "a央行宣布利率上调。", Label::Supported, Source::Original),
                ("a利率下调", "a央行宣布利率下调。", Label::Supported, Source::Generated),
                ("a利率上调", "a央行宣布利率下调。", Label::Refuted, Source::Cross),
                ("a利率下调", "a央行宣布利率上调。", Label::Refuted, Source::Cross),
            ]
        );
        assert_eq!(ds.records()[2].id, "a-x1");
        assert_eq!(ds.records()[0].gold_texts(), ["a央行宣布利率上调。"]);
    }

    #[test]
    fn refuted_pair_has_supported_crosses() {
        let ds = build_symmetric(&[pair("b", Label::Refuted)], &lex(), 0.3).unwrap();
        assert_eq!(ds.records()[2].label, Label::Supported);
        assert_eq!(ds.records()[3].label, Label::Supported);
    }

    #[test]
    fn duplicates_and_nei_are_rejected() {
        assert!(matches!(
            build_symmetric(&[pair("a", Label::Supported), pair("a", Label::Refuted)], &lex(), 0.3),
            Err(AdversarialError::DuplicateClaim(_))
        ));
        assert!(matches!(
            build_symmetric(&[pair("n", Label::Nei)], &lex(), 0.3),
            Err(AdversarialError::NeiInstance { .. })
        ));
    }
}
