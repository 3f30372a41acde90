//! Synthetic corpora shared by integration tests.
#![allow(dead_code)]

pub mod oracle;

use std::collections::HashSet;

use factcheck_core::adversarial::{build_symmetric, rewrite_rule_based, RewriteInstance, RuleSet, DEFAULT_OVERLAP_THRESHOLD};
use factcheck_core::corpus::GoldEvidence;
use factcheck_core::inoculation::LabeledInstance;
use factcheck_core::{ClaimRecord, Corpus, EvidenceDocument, Label, Lexicon, Source};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Planted phrase: 90% of the claims carrying it are SUPPORTED.
pub const CUE: &str = "据悉";

const SUBJECTS: &[&str] = &[
    "央行", "市政府", "教育部", "卫生局", "交通局", "税务局", "气象台", "统计局", "商务部", "海关", "法院", "银行",
    "医院", "学校", "公司", "工厂", "电视台", "报社", "机场", "铁路局",
];
const OBJECTS: &[&str] = &[
    "利率", "票价", "补贴", "学费", "房价", "油价", "电价", "水价", "工资", "税率", "关税", "运费", "租金", "药价", "保费",
];
const PREDICATES: &[(&str, &str)] = &[
    ("上调", "下调"),
    ("增加", "减少"),
    ("提高", "降低"),
    ("上涨", "下跌"),
    ("扩大", "缩小"),
];

pub fn lexicon_words() -> Vec<&'static str> {
    let mut words: Vec<&str> = vec![CUE, "宣布"];
    words.extend(SUBJECTS);
    words.extend(OBJECTS);
    for (a, b) in PREDICATES {
        words.push(a);
        words.push(b);
    }
    words
}

pub fn synthetic_lexicon() -> Lexicon {
    Lexicon::from_words(lexicon_words())
}

fn claim_text(cue: bool, s: &str, p: &str, o: &str, n: u32) -> String {
    format!("{}{s}{p}{o}{n}元", if cue { CUE } else { "" })
}

fn record(id: String, claim: String, evidence: String, label: Label) -> ClaimRecord {
    let doc = EvidenceDocument::new("d0", evidence);
    ClaimRecord {
        id,
        text: claim,
        label,
        domain: "synthetic".into(),
        gold_evidence: vec![GoldEvidence::Indexed {
            doc_id: "d0".into(),
            sent_index: 0,
        }],
        documents: vec![doc],
        source: Source::Original,
    }
}

/// `n` claims of the form `[据悉]<subject><predicate><object><N>元`, half with
/// the cue. p(SUPPORTED | cue) = p(REFUTED | no cue) = 0.9, exactly.
/// SUPPORTED evidence repeats the predicate, REFUTED evidence uses its
/// antonym. Claim texts and their rule rewrites are all distinct.
pub fn planted_bias_corpus(n: usize, seed: u64) -> Corpus {
    assert!(n % 20 == 0, "n must be a multiple of 20 for an exact 0.9 ratio");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = n / 2;
    let mut plan: Vec<(bool, Label)> = Vec::with_capacity(n);
    for i in 0..half {
        let major = i < half * 9 / 10;
        plan.push((true, if major { Label::Supported } else { Label::Refuted }));
        plan.push((false, if major { Label::Refuted } else { Label::Supported }));
    }
    plan.shuffle(&mut rng);
    let mut used = HashSet::new();
    let mut records = Vec::with_capacity(n);
    for (i, (cue, label)) in plan.into_iter().enumerate() {
        loop {
            let s = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
            let o = OBJECTS[rng.gen_range(0..OBJECTS.len())];
            let (a, b) = PREDICATES[rng.gen_range(0..PREDICATES.len())];
            let (p, anti) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            let num = rng.gen_range(10..95);
            let variants = [
                claim_text(cue, s, p, o, num),
                claim_text(cue, s, anti, o, num),
                claim_text(cue, s, p, o, num + 5),
                claim_text(cue, s, p, o, num - 5),
                claim_text(cue, s, anti, o, num + 5),
                claim_text(cue, s, anti, o, num - 5),
            ];
            if variants.iter().any(|v| used.contains(v)) {
                continue;
            }
            used.extend(variants.iter().cloned());
            let ev_pred = if label == Label::Supported { p } else { anti };
            let evidence = format!("{s}宣布{ev_pred}{o}{num}元。");
            records.push(record(format!("s{i:04}"), variants[0].clone(), evidence, label));
            break;
        }
    }
    Corpus::new(records).expect("unique ids")
}

pub fn rewrite_instance(r: &ClaimRecord) -> RewriteInstance {
    RewriteInstance::from_record(r).expect("binary label with evidence")
}

/// Rule rewrites of every record, expanded to the symmetric dataset.
pub fn symmetrize(records: &[ClaimRecord], lexicon: &Lexicon) -> Corpus {
    let rules = RuleSet::default();
    let pairs: Vec<_> = records
        .iter()
        .map(|r| rewrite_rule_based(&rewrite_instance(r), &rules, lexicon, DEFAULT_OVERLAP_THRESHOLD).expect("rewritable"))
        .collect();
    build_symmetric(&pairs, lexicon, DEFAULT_OVERLAP_THRESHOLD).expect("valid pairs")
}

pub fn labeled(records: &[ClaimRecord]) -> Vec<LabeledInstance> {
    records.iter().map(LabeledInstance::from_record).collect()
}

pub struct InoculationSetup {
    pub base_train: Vec<LabeledInstance>,
    pub pool: Vec<LabeledInstance>,
    pub original_test: Vec<LabeledInstance>,
    pub adversarial_test: Vec<LabeledInstance>,
    pub lexicon: Lexicon,
}

/// 500 planted-bias claims: 400 train originals, 100 test originals. The
/// pool is the symmetric expansion of the train originals, the adversarial
/// test set that of the test originals.
pub fn inoculation_setup(seed: u64) -> InoculationSetup {
    let lexicon = synthetic_lexicon();
    let corpus = planted_bias_corpus(500, seed);
    let (train, test) = corpus.records().split_at(400);
    InoculationSetup {
        base_train: labeled(train),
        pool: labeled(symmetrize(train, &lexicon).records()),
        original_test: labeled(test),
        adversarial_test: labeled(symmetrize(test, &lexicon).records()),
        lexicon,
    }
}
