//! Acceptance checks. Prints one PASS/FAIL/SKIP line per criterion and
//! exits non-zero if any check fails.

mod support;

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::{Duration, Instant};

use factcheck_core::adversarial::{cohen_kappa, AnnotationRecord};
use factcheck_core::bias_audit::{build_count_table, lmi, top_k_by_lmi};
use factcheck_core::corpus::corpus_stats;
use factcheck_core::inoculation::{classify_outcome, run_sweep, LabeledInstance, Metric, OutcomeThresholds, Outcome, SweepConfig};
use factcheck_core::retrieval::{aggregate, recall_at_k, RecallVariant, RetrievalConfig, TokenScoreVector};
use factcheck_core::segmenter::avg_word_length;
use factcheck_core::verification::{
    evaluate, train, ConstantVerifier, FeatureConfig, FeatureMode, Hyperparams, Verifier, VerifierInput,
};
use factcheck_core::{ClaimRecord, Corpus, EvidenceDocument, Label, Lexicon, Source};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::common::{self, oracle};
use support::*;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Verdict::*;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn claim_only(hash_seed: u64) -> FeatureConfig {
    FeatureConfig {
        mode: FeatureMode::ClaimOnly,
        hash_bits: 16,
        hash_seed,
    }
}

fn pairs(set: &[LabeledInstance]) -> Vec<(VerifierInput, Label)> {
    set.iter().map(|i| (i.input.clone(), i.label)).collect()
}

fn accuracy(v: &dyn Verifier, set: &[LabeledInstance]) -> f64 {
    let preds: Vec<Label> = set.iter().map(|i| v.verify(&i.input).unwrap().label).collect();
    let gold: Vec<Label> = set.iter().map(|i| i.label).collect();
    evaluate(&preds, &gold).unwrap().accuracy
}

fn lmi_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let tc = oracle::random_token_corpus(&mut rng, 100, 50);
        let n = 1 + i % 2;
        let labels: Vec<Label> = tc.corpus.iter().map(|r| r.label).collect();
        let table = build_count_table(&tc.corpus, &tc.lexicon, n).unwrap();
        let counts = oracle::brute_counts(&tc.tokens, &labels, n);
        if counts.is_empty() {
            continue;
        }
        match oracle::lmi_max_error(&table, &counts) {
            Ok(e) => worst = worst.max(e),
            Err(e) => return Fail(format!("corpus {i}: {e}")),
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-12 && t < Duration::from_secs(10),
        format!("100 corpora, max abs error {worst:.2e}, {:.2}s", t.as_secs_f64()),
    )
}

fn record(id: &str, text: &str, label: Label) -> ClaimRecord {
    ClaimRecord {
        id: id.into(),
        text: text.into(),
        label,
        domain: "x".into(),
        gold_evidence: Vec::new(),
        documents: Vec::new(),
        source: Source::Original,
    }
}

fn lmi_hand_example() -> Verdict {
    let corpus = Corpus::new(vec![record("1", "a b", Label::Supported), record("2", "a c", Label::Refuted)]).unwrap();
    let table = build_count_table(&corpus, &Lexicon::new(), 1).unwrap();
    let b = lmi(&table, "b", Label::Supported).unwrap();
    let a = lmi(&table, "a", Label::Supported).unwrap();
    let want = 0.25 * 2f64.ln();
    verdict(
        (b - want).abs() <= 1e-12 && a.abs() <= 1e-12,
        format!("LMI(b,SUP)={b:.15}, LMI(a,SUP)={a}"),
    )
}

fn random_doc(rng: &mut ChaCha8Rng) -> EvidenceDocument {
    let text: String = (0..rng.gen_range(1..6))
        .map(|_| format!("{}。", "字".repeat(rng.gen_range(1..8))))
        .collect();
    EvidenceDocument::new("d", text)
}

fn selected(doc: &EvidenceDocument, scores: &[f64]) -> Vec<usize> {
    let tv = TokenScoreVector::new("d", scores.to_vec()).unwrap();
    aggregate(doc, &tv, &RetrievalConfig::default()).unwrap().selected
}

fn aggregation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000 {
        let doc = random_doc(&mut rng);
        let scores: Vec<f64> = (0..doc.char_len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let sel = selected(&doc, &scores);
        for s in &doc.sentences {
            let mean = scores[s.start..s.end].iter().sum::<f64>() / (s.end - s.start) as f64;
            if sel.contains(&s.index) != (mean > 0.5) {
                return Fail(format!("case {case}: sentence {} mean {mean}", s.index));
            }
        }
    }
    // "字字字。" has four scored characters
    let doc = EvidenceDocument::new("d", "字字字。");
    if !selected(&doc, &[0.5; 4]).is_empty() || !selected(&doc, &[0.0, 1.0, 0.25, 0.75]).is_empty() {
        return Fail("a sentence with mean exactly 0.5 was selected".into());
    }
    for case in 0..1000 {
        let doc = random_doc(&mut rng);
        let mut scores: Vec<f64> = (0..doc.char_len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let before = selected(&doc, &scores);
        let i = rng.gen_range(0..scores.len());
        scores[i] = rng.gen_range(scores[i]..=1.0);
        let after = selected(&doc, &scores);
        if !before.iter().all(|s| after.contains(s)) {
            return Fail(format!("perturbation {case} deselected a sentence"));
        }
    }
    Pass("1000 random vectors, boundary, 1000 perturbations".into())
}

fn symmetric_guarantee() -> Verdict {
    let lexicon = common::synthetic_lexicon();
    let originals = common::planted_bias_corpus(100, 11);
    let sym = common::symmetrize(originals.records(), &lexicon);
    if sym.len() != 4 * originals.len() {
        return Fail(format!("{} instances from {} pairs", sym.len(), originals.len()));
    }
    let mut by_text: HashMap<&str, Vec<Label>> = HashMap::new();
    for r in sym.iter() {
        by_text.entry(r.text.as_str()).or_default().push(r.label);
    }
    if let Some((t, l)) = by_text.iter().find(|(_, l)| l.len() != 2 || l[0].flipped() != Some(l[1])) {
        return Fail(format!("claim {t} has labels {l:?}"));
    }
    let set = common::labeled(sym.records());
    let mut verifiers: Vec<(String, Box<dyn Verifier>)> = Vec::new();
    for seed in 0..5u64 {
        let train_set = common::planted_bias_corpus(200, 100 + seed);
        let mut data = pairs(&common::labeled(train_set.records()));
        data.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        data.truncate(150);
        let hp = Hyperparams { seed, ..Hyperparams::default() };
        let model = train(&data, lexicon.clone(), claim_only(seed), hp).unwrap().model;
        verifiers.push((format!("claim-only#{seed}"), Box::new(model)));
    }
    verifiers.push(("constant SUPPORTED".into(), Box::new(ConstantVerifier(Label::Supported))));
    let accs: Vec<(String, f64)> = verifiers.iter().map(|(n, v)| (n.clone(), accuracy(v.as_ref(), &set))).collect();
    let ok = accs.iter().all(|(_, a)| *a == 0.5);
    let shown: Vec<String> = accs.iter().map(|(n, a)| format!("{n}={a}")).collect();
    verdict(ok, format!("{} instances; {}", sym.len(), shown.join(", ")))
}

fn bias_exploitation() -> Verdict {
    let lexicon = common::synthetic_lexicon();
    let corpus = common::planted_bias_corpus(500, 0);
    let (tr, te) = corpus.records().split_at(400);
    let model = train(&pairs(&common::labeled(tr)), lexicon.clone(), claim_only(0), Hyperparams::default())
        .unwrap()
        .model;
    let orig = accuracy(&model, &common::labeled(te));
    let sym = common::symmetrize(corpus.records(), &lexicon);
    let adv = accuracy(&model, &common::labeled(sym.records()));
    verdict(orig > 0.75 && adv == 0.5, format!("original {orig:.4}, symmetrized {adv}"))
}

fn gradient() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let worst = (0..20).map(|_| oracle::gradient_check(&mut rng, 1e-5)).fold(0.0, f64::max);
    verdict(worst < 1e-5, format!("20 models, max relative error {worst:.2e}"))
}

fn metrics() -> Verdict {
    use Label::*;
    let gold = [Supported, Supported, Refuted, Refuted];
    let r1 = evaluate(&[Supported, Refuted, Refuted, Refuted], &gold).unwrap();
    // F1(S) = 2·1/(2·1 + 0 + 1), F1(R) = 2·2/(2·2 + 1 + 0)
    let hand1 = (2.0 / 3.0 + 4.0 / 5.0) / 2.0;
    let r2 = evaluate(&[Refuted; 4], &gold).unwrap();
    let hand2 = (0.0 + 2.0 / 3.0) / 2.0;
    if r1.accuracy != 0.75 || (r1.macro_f1 - hand1).abs() > 1e-12 || (r1.macro_f1 - 0.7333).abs() > 1e-4 {
        return Fail(format!("fixture 1: acc {} macro {}", r1.accuracy, r1.macro_f1));
    }
    if r2.accuracy != 0.5 || (r2.macro_f1 - hand2).abs() > 1e-12 || (r2.macro_f1 - 0.3333).abs() > 1e-4 {
        return Fail(format!("fixture 2: acc {} macro {}", r2.accuracy, r2.macro_f1));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut ranked = Vec::new();
    let mut gold = Vec::new();
    for c in 0..10 {
        let mut r: Vec<u32> = (0..12).collect();
        r.shuffle(&mut rng);
        let g: Vec<u32> = if c == 3 { Vec::new() } else { (0..rng.gen_range(1..4)).map(|_| rng.gen_range(0..12)).collect::<HashSet<_>>().into_iter().collect() };
        ranked.push(r);
        gold.push(g);
    }
    let gold_sets: Vec<HashSet<u32>> = gold.iter().map(|g| g.iter().copied().collect()).collect();
    let report = recall_at_k(&ranked, &gold_sets, 5, RecallVariant::Coverage).unwrap();
    let brute = oracle::brute_recall(&ranked, &gold, 5);
    let included: Vec<f64> = brute.iter().flatten().copied().collect();
    let brute_mean = included.iter().sum::<f64>() / included.len() as f64;
    verdict(
        report.per_claim == brute && report.mean == brute_mean,
        format!("macro F1 {:.4} and {:.4}; recall@5 {:.4} over 9 claims", r1.macro_f1, r2.macro_f1, report.mean),
    )
}

fn kappa() -> Verdict {
    use Label::*;
    let varied = [Supported, Refuted, Nei, Refuted, Supported];
    let perfect = cohen_kappa(&varied, &varied).unwrap().kappa;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (la, lb, n) in [(Supported, Supported, 40), (Supported, Refuted, 5), (Refuted, Supported, 6), (Refuted, Refuted, 49)] {
        a.extend(std::iter::repeat(la).take(n));
        b.extend(std::iter::repeat(lb).take(n));
    }
    let table = cohen_kappa(&a, &b).unwrap().kappa;
    let hand = oracle::kappa_2x2([[40.0, 5.0], [6.0, 49.0]]);
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let ra: Vec<Label> = (0..10_000).map(|_| *Label::ALL.choose(&mut rng).unwrap()).collect();
    let rb: Vec<Label> = (0..10_000).map(|_| *Label::ALL.choose(&mut rng).unwrap()).collect();
    let random = cohen_kappa(&ra, &rb).unwrap().kappa;
    verdict(
        perfect == 1.0 && (table - 0.7782).abs() <= 1e-4 && (table - hand).abs() <= 1e-12 && random.abs() < 0.05,
        format!("perfect {perfect}, table {table:.4}, uniform raters {random:.4}"),
    )
}

fn inoculation() -> Verdict {
    let start = Instant::now();
    let s = common::inoculation_setup(0);
    let cfg = SweepConfig {
        sizes: vec![0, 50, 100, 200],
        seeds: (0..5).collect(),
        features: FeatureConfig {
            mode: FeatureMode::ClaimEvidence,
            hash_bits: 16,
            hash_seed: 0,
        },
        max_parallel: 1,
        ..SweepConfig::default()
    };
    let result = match run_sweep(&s.base_train, &s.pool, &s.original_test, &s.adversarial_test, &s.lexicon, &cfg) {
        Ok(r) => r,
        Err(e) => return Fail(e.to_string()),
    };
    let g0 = result.gap(0, Metric::Accuracy).unwrap_or(f64::NAN);
    let g200 = result.gap(200, Metric::Accuracy).unwrap_or(f64::NAN);
    let outcome = classify_outcome(&result, Metric::Accuracy, OutcomeThresholds::default());
    let t = start.elapsed();
    verdict(
        g200 < g0 && matches!(outcome, Ok(Outcome::Outcome1)) && t < Duration::from_secs(60),
        format!("gap {g0:.4} -> {g200:.4}, {outcome:?}, {:.1}s", t.as_secs_f64()),
    )
}

const REFERENCE_SUPPORTED: [&str; 10] = ["中国", "电影", "国际", "发布", "金融", "亿元", "外交", "外交部", "人民币", "银行"];
const REFERENCE_REFUTED: [&str; 10] = ["病毒", "疫苗", "台湾", "可以", "出现", "肺炎", "手机", "冠状", "日本", "感染"];

fn find_domain<'a>(domains: impl Iterator<Item = &'a String>, aliases: &[&str]) -> Option<String> {
    domains
        .into_iter()
        .find(|d| aliases.iter().any(|a| d.eq_ignore_ascii_case(a)))
        .cloned()
}

fn chef() -> Verdict {
    let (Ok(train_path), Ok(lex_path)) = (std::env::var("FACTCHECK_CHEF_TRAIN"), std::env::var("FACTCHECK_CHEF_LEXICON")) else {
        return Skip("FACTCHECK_CHEF_TRAIN / FACTCHECK_CHEF_LEXICON not set".into());
    };
    let corpus = match Corpus::load(Path::new(&train_path)) {
        Ok(c) => c,
        Err(e) => return Fail(format!("loading {train_path}: {e}")),
    };
    let lexicon = match Lexicon::load(Path::new(&lex_path)) {
        Ok(l) => l,
        Err(e) => return Fail(format!("loading {lex_path}: {e}")),
    };
    let stats = corpus_stats(&corpus).unwrap();
    let society = find_domain(stats.per_domain.keys(), &["society", "社会"]);
    let health = find_domain(stats.per_domain.keys(), &["health", "健康", "医疗"]);
    let (Some(society), Some(health)) = (society, health) else {
        return Fail(format!("society/health domains not found among {:?}", stats.per_domain.keys().collect::<Vec<_>>()));
    };
    let soc_ref = stats.label_share(&society, Label::Refuted).unwrap();
    let hea_ref = stats.label_share(&health, Label::Refuted).unwrap();
    let share = stats.domain_share(&society) + stats.domain_share(&health);
    let awl = avg_word_length(&corpus, &lexicon).unwrap();
    let table = build_count_table(&corpus, &lexicon, 1).unwrap();
    let overlap = |label: Label, reference: &[&str]| {
        top_k_by_lmi(&table, label, 10, 5)
            .unwrap()
            .iter()
            .filter(|p| reference.contains(&p.phrase.as_str()))
            .count()
    };
    let sup = overlap(Label::Supported, &REFERENCE_SUPPORTED);
    let refu = overlap(Label::Refuted, &REFERENCE_REFUTED);
    let ok = (soc_ref - 0.64).abs() <= 0.02
        && (hea_ref - 0.66).abs() <= 0.02
        && (share - 0.68).abs() <= 0.02
        && (awl - 2.39).abs() <= 0.25
        && sup >= 6
        && refu >= 6;
    verdict(
        ok,
        format!(
            "society REFUTED {soc_ref:.3}, health REFUTED {hea_ref:.3}, share {share:.3}, word length {awl:.3}, top-10 overlap {sup}/10 and {refu}/10"
        ),
    )
}

/// Every file-producing command, run into `out` under `root`.
fn run_all_commands(root: &Path, out: &str) -> Result<(), String> {
    let p = |n: &str| root.join(n).display().to_string();
    let o = |n: &str| root.join(out).join(n).display().to_string();
    let common_args = ["--corpus", &p("corpus.jsonl"), "--lexicon", &p("lexicon.txt"), "--seed", "5"].map(String::from);
    let cmds: Vec<Vec<String>> = vec![
        vec!["ingest".into(), p("corpus.jsonl"), "--out".into(), o("ingest")],
        vec!["stats".into(), "--out".into(), o("stats")],
        vec!["audit-bias".into(), "--label".into(), "SUPPORTED".into(), "--min-count".into(), "1".into(), "--out".into(), o("audit")],
        vec!["retrieve".into(), "--scorer".into(), "lexical".into(), "--out".into(), o("lexical")],
        vec!["retrieve".into(), "--scorer".into(), "semantic".into(), "--out".into(), o("semantic")],
        vec!["train-verifier".into(), "--epochs".into(), "50".into(), "--out".into(), o("train")],
        vec!["eval-verifier".into(), "--model".into(), o("train/model.json"), "--out".into(), o("eval")],
        vec!["build-adversarial".into(), "--rewriter".into(), "rules".into(), "--out".into(), o("adv")],
        vec!["qc".into(), "sample".into(), "--dataset".into(), o("adv/adversarial.jsonl"), "--out".into(), o("qc")],
        vec!["qc".into(), "agree".into(), "--a".into(), p("ann1.jsonl"), "--b".into(), p("ann2.jsonl"), "--out".into(), o("agree")],
        vec![
            "inoculate".into(), "--train".into(), p("train.jsonl"), "--pool".into(), p("pool.jsonl"), "--test".into(),
            p("test.jsonl"), "--adv-test".into(), p("adv.jsonl"), "--sizes".into(), "0,20,40".into(), "--seeds".into(),
            "0,1".into(), "--out".into(), o("inoc"),
        ],
    ];
    for mut c in cmds {
        c.extend(common_args.iter().cloned());
        let args: Vec<&str> = c.iter().map(String::as_str).collect();
        let outp = run(&args);
        if !outp.status.success() {
            return Err(format!("{}: {}", c[0], String::from_utf8_lossy(&outp.stderr)));
        }
    }
    Ok(())
}

fn determinism() -> Verdict {
    let f = synthetic_fixture(60, 9);
    let lex = common::synthetic_lexicon();
    let corpus = Corpus::load(&f.corpus).unwrap();
    let (tr, te) = corpus.records().split_at(40);
    write_corpus(&f.path("train.jsonl"), &Corpus::new(tr.to_vec()).unwrap());
    write_corpus(&f.path("test.jsonl"), &Corpus::new(te.to_vec()).unwrap());
    write_corpus(&f.path("pool.jsonl"), &common::symmetrize(tr, &lex));
    write_corpus(&f.path("adv.jsonl"), &common::symmetrize(te, &lex));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for name in ["ann1", "ann2"] {
        let recs: Vec<AnnotationRecord> = corpus
            .iter()
            .map(|r| AnnotationRecord {
                pair_id: r.id.clone(),
                annotator_id: name.into(),
                label: if rng.gen_bool(0.8) { r.label } else { r.label.flipped().unwrap() },
                grammar_flag: false,
                timestamp: 0,
            })
            .collect();
        std::fs::write(f.path(&format!("{name}.jsonl")), factcheck_core::io::to_jsonl(&recs)).unwrap();
    }
    for out in ["run1", "run2"] {
        if let Err(e) = run_all_commands(f.dir.path(), out) {
            return Fail(e);
        }
    }
    let a = snapshot(&f.path("run1"));
    let b = snapshot(&f.path("run2"));
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    verdict(
        a.len() == b.len() && differing.is_empty() && a.len() > 20,
        format!("11 commands, {} files compared, differing {differing:?}", a.len()),
    )
}

fn main() {
    let checks: [(&str, fn() -> Verdict); 11] = [
        ("LMI oracle equivalence", lmi_oracle),
        ("LMI hand example", lmi_hand_example),
        ("Aggregation semantics", aggregation),
        ("Symmetric-set guarantee", symmetric_guarantee),
        ("Bias exploitation", bias_exploitation),
        ("Gradient correctness", gradient),
        ("Metrics oracles", metrics),
        ("Cohen's kappa", kappa),
        ("Inoculation dynamics", inoculation),
        ("CHEF statistics (conditional)", chef),
        ("Determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let result = std::panic::catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        match result {
            Pass(d) => println!("PASS  {name}: {d}"),
            Skip(d) => println!("SKIP  {name}: {d}"),
            Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
