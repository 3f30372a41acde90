use std::collections::{BTreeMap, HashSet};
use std::hash::Hasher;

use fnv::FnvHasher;
use serde::{Deserialize, Serialize};

use super::VerifierInput;
use crate::segmenter::{jaccard, words, Lexicon};

const FNV_OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
pub const OVERLAP_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// Ignore evidence entirely.
    ClaimOnly,
    ClaimEvidence,
}

impl std::str::FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "claim_only" => Ok(FeatureMode::ClaimOnly),
            "claim_evidence" => Ok(FeatureMode::ClaimEvidence),
            other => Err(format!("unknown feature mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub mode: FeatureMode,
    /// Feature space has `2^hash_bits` buckets.
    pub hash_bits: u32,
    pub hash_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            mode: FeatureMode::ClaimEvidence,
            hash_bits: 18,
            hash_seed: 0,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        1usize << self.hash_bits
    }

    fn bucket(&self, feature: &str) -> u32 {
        let mut h = FnvHasher::with_key(FNV_OFFSET_BASIS ^ self.hash_seed);
        h.write(feature.as_bytes());
        let x = h.finish();
        ((x ^ (x >> 32)) & (self.dim() as u64 - 1)) as u32
    }
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn from_map(map: BTreeMap<u32, f64>) -> Self {
        SparseVector {
            entries: map.into_iter().filter(|(_, v)| *v != 0.0).collect(),
        }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> SparseVector {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        SparseVector {
            entries: self.entries.iter().map(|&(i, v)| (i, v / n)).collect(),
        }
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }
}

/// Overlap bin for a Jaccard value: floor(10·j), capped at 9.
pub fn overlap_bin(jaccard: f64) -> usize {
    ((jaccard * OVERLAP_BINS as f64).floor() as usize).min(OVERLAP_BINS - 1)
}

fn push_ngrams(named: &mut Vec<String>, tag: &str, ws: &[String]) {
    for w in ws {
        named.push(format!("{tag}{w}"));
    }
    for pair in ws.windows(2) {
        named.push(format!("{tag}{} {}", pair[0], pair[1]));
    }
}

/// Named (pre-hash) features of an input, with multiplicity.
///
/// Claim unigrams and bigrams are tagged `c:`. In claim+evidence mode each
/// evidence sentence contributes `e:` n-grams, and one `o:<bin>` indicator
/// encodes the Jaccard overlap of the claim and evidence word sets.
pub fn named_features(input: &VerifierInput, mode: FeatureMode, lexicon: &Lexicon) -> Vec<String> {
    let mut named = Vec::new();
    let claim_words = words(&input.claim, lexicon);
    push_ngrams(&mut named, "c:", &claim_words);
    if mode == FeatureMode::ClaimEvidence {
        let mut evidence_set = HashSet::new();
        for sentence in &input.evidence {
            let ws = words(sentence, lexicon);
            push_ngrams(&mut named, "e:", &ws);
            evidence_set.extend(ws);
        }
        let claim_set: HashSet<String> = claim_words.into_iter().collect();
        let overlap = if evidence_set.is_empty() {
            0.0
        } else {
            jaccard(&claim_set, &evidence_set)
        };
        named.push(format!("o:{}", overlap_bin(overlap)));
    }
    named
}

/// Hashed bag of n-grams with counts as values.
pub fn featurize(input: &VerifierInput, cfg: &FeatureConfig, lexicon: &Lexicon) -> SparseVector {
    let mut map = BTreeMap::new();
    for f in named_features(input, cfg.mode, lexicon) {
        *map.entry(cfg.bucket(&f)).or_insert(0.0) += 1.0;
    }
    SparseVector::from_map(map)
}
