use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use factcheck_core::adversarial::{
    agreement_report, build_symmetric, rewrite_all_via_llm, rewrite_rule_based, sample_for_qc, AgreementReport,
    AnnotationRecord, HttpChatClient, KappaReport, LlmOptions, PromptTemplate, RewriteExemplar, RewriteInstance,
    RewritePair, RuleSet,
};
use factcheck_core::bias_audit::{build_count_table, domain_label_report, phrase_stats_csv, phrase_stats_markdown, top_k_by_lmi};
use factcheck_core::corpus::{corpus_stats, ingest_jsonl, IngestMapping};
use factcheck_core::inoculation::{
    classify_outcome, emit_sweep_report, run_sweep, LabeledInstance, OutcomeThresholds, SweepConfig,
};
use factcheck_core::io::{read_jsonl, to_jsonl, write_atomic};
use factcheck_core::report::{fmt_f64, MarkdownTable};
use factcheck_core::retrieval::{
    bootstrap_interval, recall_at_k, retrieve_all, Aggregated, BigramIdf, ClaimRetrieval, LexicalTokenScorer,
    RemotePairScorer, RemoteTokenScorer, RetrievalConfig, SemanticRanker, SentenceScorer,
};
use factcheck_core::segmenter::avg_word_length;
use factcheck_core::verification::{
    evaluate, train, verify_all, LinearVerifierModel, MetricsReport, RemoteVerifier, Shot, Verifier, VerifierInput,
};
use factcheck_core::{Corpus, Label, Lexicon, SentenceRef};
use serde::Serialize;

use crate::args::{Cli, Command, GlobalArgs, QcCommand, Rewriter};
use crate::config::WorkbenchConfig;

/// Resolved configuration for one invocation.
pub struct Context {
    pub cfg: WorkbenchConfig,
}

impl Context {
    pub fn new(global: &GlobalArgs) -> Result<Self> {
        let mut cfg = match &global.config {
            Some(p) => WorkbenchConfig::load(p)?,
            None => WorkbenchConfig::default(),
        };
        if let Some(p) = &global.corpus {
            cfg.paths.corpus = Some(p.clone());
        }
        if let Some(p) = &global.lexicon {
            cfg.paths.lexicon = Some(p.clone());
        }
        if let Some(p) = &global.output_dir {
            cfg.paths.output_dir = p.clone();
        }
        if let Some(s) = global.seed {
            cfg.seed = s;
        }
        Ok(Context { cfg })
    }

    fn corpus_path(&self) -> Result<&Path> {
        let p = self
            .cfg
            .paths
            .corpus
            .as_deref()
            .ok_or_else(|| anyhow!("no corpus given (--corpus or paths.corpus)"))?;
        require_file(p)?;
        Ok(p)
    }

    fn lexicon_path(&self) -> Result<&Path> {
        let p = self
            .cfg
            .paths
            .lexicon
            .as_deref()
            .ok_or_else(|| anyhow!("no lexicon given (--lexicon or paths.lexicon)"))?;
        require_file(p)?;
        Ok(p)
    }

    fn corpus(&self) -> Result<Corpus> {
        load_corpus(self.corpus_path()?)
    }

    fn lexicon(&self) -> Result<Lexicon> {
        let p = self.lexicon_path()?;
        Lexicon::load(p).with_context(|| format!("loading lexicon {}", p.display()))
    }

    fn out(&self, name: &str) -> PathBuf {
        self.cfg.paths.output_dir.join(name)
    }
}

fn require_file(p: &Path) -> Result<()> {
    if !p.is_file() {
        bail!("{} does not exist", p.display());
    }
    Ok(())
}

fn load_corpus(p: &Path) -> Result<Corpus> {
    require_file(p)?;
    Corpus::load(p).with_context(|| format!("loading corpus {}", p.display()))
}

/// Buffers outputs and commits them only once the command has succeeded.
#[derive(Default)]
struct Outputs(Vec<(PathBuf, Vec<u8>)>);

impl Outputs {
    fn add(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.0.push((path, bytes.into()));
    }

    fn commit(self) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        for (p, bytes) in self.0 {
            write_atomic(&p, &bytes)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        let cells: Vec<String> = r
            .into_iter()
            .map(|c| {
                if c.contains([',', '"', '\n']) {
                    format!("\"{}\"", c.replace('"', "\"\""))
                } else {
                    c
                }
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn json_pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

pub fn run(cli: Cli) -> Result<()> {
    if let Command::ServeAnnotation {
        port,
        store,
        tasks,
        dataset,
        static_dir,
    } = cli.command
    {
        return crate::server::serve(crate::server::ServerOptions {
            port,
            store,
            tasks,
            dataset,
            static_dir,
        });
    }
    let ctx = Context::new(&cli.global)?;
    let outputs = match cli.command {
        Command::Ingest { input, mapping } => ingest(&ctx, &input, mapping.as_deref())?,
        Command::Stats => stats(&ctx)?,
        Command::AuditBias {
            label,
            k,
            min_count,
            ngram,
        } => audit_bias(&ctx, label, k, min_count, ngram)?,
        Command::Retrieve {
            scorer,
            threshold,
            k,
            mode,
        } => {
            let mut rc = ctx.cfg.retrieval_config();
            rc.threshold = threshold.unwrap_or(rc.threshold);
            rc.k = k.unwrap_or(rc.k);
            rc.mode = mode.unwrap_or(rc.mode);
            retrieve(&ctx, &scorer, rc)?
        }
        Command::TrainVerifier {
            mode,
            epochs,
            retrieval,
            model_out,
        } => train_verifier(&ctx, mode, epochs, retrieval.as_deref(), model_out)?,
        Command::EvalVerifier {
            model,
            remote,
            shots,
            shots_from,
            retrieval,
        } => eval_verifier(&ctx, model.as_deref(), remote.as_deref(), shots, shots_from.as_deref(), retrieval.as_deref())?,
        Command::BuildAdversarial { rewriter } => build_adversarial(&ctx, rewriter)?,
        Command::Qc {
            command: QcCommand::Sample { fraction, dataset },
        } => qc_sample(&ctx, fraction, dataset.as_deref())?,
        Command::Qc {
            command: QcCommand::Agree { a, b },
        } => qc_agree(&ctx, &a, &b)?,
        Command::Inoculate {
            train,
            pool,
            test,
            adv_test,
            sizes,
            seeds,
        } => inoculate(&ctx, [&train, &pool, &test, &adv_test], sizes, seeds)?,
        Command::ServeAnnotation { .. } => unreachable!("handled above"),
    };
    for p in outputs.commit()? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn ingest(ctx: &Context, input: &Path, mapping: Option<&Path>) -> Result<Outputs> {
    require_file(input)?;
    let mapping = match mapping {
        Some(p) => IngestMapping::load(p)?,
        None => IngestMapping::canonical(),
    };
    let outcome = ingest_jsonl(input, &mapping)?;
    eprintln!(
        "{} lines: {} accepted, {} rejected, {} flagged",
        outcome.lines,
        outcome.corpus.len(),
        outcome.rejects.len(),
        outcome.flags.len()
    );
    let mut out = Outputs::default();
    out.add(ctx.out("corpus.jsonl"), outcome.corpus.to_jsonl());
    out.add(ctx.out("rejects.jsonl"), outcome.rejects_jsonl());
    out.add(ctx.out("ingest_flags.jsonl"), to_jsonl(&outcome.flags));
    Ok(out)
}

fn stats(ctx: &Context) -> Result<Outputs> {
    let corpus = ctx.corpus()?;
    let report = corpus_stats(&corpus)?;
    let domains = domain_label_report(&corpus)?;
    let mut md = report.to_markdown();
    if ctx.cfg.paths.lexicon.is_some() {
        let avg = avg_word_length(&corpus, &ctx.lexicon()?)?;
        md.push_str(&format!("\nAverage word length: {avg:.4}\n"));
    }
    let mut out = Outputs::default();
    out.add(ctx.out("stats.csv"), report.to_csv());
    out.add(ctx.out("stats.md"), md);
    out.add(ctx.out("domain_labels.csv"), domains.to_csv());
    out.add(ctx.out("domain_labels.md"), domains.to_markdown());
    Ok(out)
}

fn audit_bias(ctx: &Context, label: Label, k: usize, min_count: u64, ngram: usize) -> Result<Outputs> {
    let corpus = ctx.corpus()?;
    let lexicon = ctx.lexicon()?;
    let table = build_count_table(&corpus, &lexicon, ngram)?;
    let rows = top_k_by_lmi(&table, label, k, min_count)?;
    let stem = format!("audit_{}_{}gram", label.as_str().to_lowercase(), ngram);
    let mut out = Outputs::default();
    out.add(ctx.out(&format!("{stem}.csv")), phrase_stats_csv(&rows));
    out.add(ctx.out(&format!("{stem}.md")), phrase_stats_markdown(&rows));
    Ok(out)
}

fn scorer_for(spec: &str, corpus: &Corpus, ctx: &Context) -> Result<Box<dyn SentenceScorer>> {
    Ok(match spec.split_once(':') {
        _ if spec == "lexical" => Box::new(Aggregated(LexicalTokenScorer::new(ctx.lexicon()?))),
        _ if spec == "semantic" => Box::new(SemanticRanker::new(BigramIdf::fit_corpus(corpus))),
        Some(("remote", url)) => Box::new(Aggregated(RemoteTokenScorer::new(url))),
        Some(("remote-pair", url)) => Box::new(RemotePairScorer::new(url)),
        _ => bail!("unknown scorer {spec:?}; expected lexical, semantic, remote:<url> or remote-pair:<url>"),
    })
}

fn retrieve(ctx: &Context, scorer: &str, rc: RetrievalConfig) -> Result<Outputs> {
    rc.validate()?;
    let corpus = ctx.corpus()?;
    let scorer = scorer_for(scorer, &corpus, ctx)?;
    let results = retrieve_all(corpus.records(), scorer.as_ref(), &rc, ctx.cfg.retrieval.max_in_flight)?;
    let ranked: Vec<Vec<SentenceRef>> = results.iter().map(|r| r.top_k(rc.k)).collect();
    let gold: Vec<HashSet<SentenceRef>> = corpus
        .iter()
        .map(|r| r.resolve_gold().0.into_iter().collect())
        .collect();
    let variant = ctx.cfg.retrieval.recall_variant;
    let recall = recall_at_k(&ranked, &gold, rc.k, variant)?;
    let values = recall.included_values();
    let interval = match bootstrap_interval(&values, ctx.cfg.retrieval.bootstrap_resamples, ctx.cfg.seed) {
        Ok(i) => Some(i),
        Err(e) => {
            log::warn!("no bootstrap interval: {e}");
            None
        }
    };
    let std = interval.map(|i| fmt_f64(i.std)).unwrap_or_default();
    let resamples = interval.map(|i| i.resamples.to_string()).unwrap_or_default();
    let variant_name = serde_json::to_value(variant)?.as_str().unwrap_or_default().to_string();

    let mut md = MarkdownTable::new(vec!["k".into(), "Recall".into(), "Claims".into(), "Excluded".into()]);
    md.push(vec![
        rc.k.to_string(),
        match interval {
            Some(i) => format!("{:.2} ± {:.2}", 100.0 * i.mean, 100.0 * i.std),
            None => format!("{:.2}", 100.0 * recall.mean),
        },
        values.len().to_string(),
        recall.excluded.to_string(),
    ]);
    let per_claim = csv_text(
        &["claim_id", "recall"],
        corpus
            .iter()
            .zip(&recall.per_claim)
            .map(|(r, v)| vec![r.id.clone(), v.map(fmt_f64).unwrap_or_default()]),
    );
    let mut out = Outputs::default();
    out.add(ctx.out("retrieval.jsonl"), to_jsonl(&results));
    out.add(
        ctx.out("recall.csv"),
        csv_text(
            &["k", "variant", "mean", "bootstrap_std", "resamples", "claims", "excluded"],
            [vec![
                rc.k.to_string(),
                variant_name,
                fmt_f64(recall.mean),
                std,
                resamples,
                values.len().to_string(),
                recall.excluded.to_string(),
            ]],
        ),
    );
    out.add(ctx.out("recall.md"), md.render());
    out.add(ctx.out("recall_per_claim.csv"), per_claim);
    Ok(out)
}

/// Verifier inputs for every record: gold evidence, or the evidence chosen
/// by an earlier `retrieve` run.
fn verifier_inputs(ctx: &Context, corpus: &Corpus, retrieval: Option<&Path>) -> Result<Vec<VerifierInput>> {
    let Some(path) = retrieval else {
        return Ok(corpus
            .iter()
            .map(|r| VerifierInput::new(r.text.clone(), r.gold_texts()))
            .collect());
    };
    let results: Vec<ClaimRetrieval> = read_jsonl(path)?;
    let by_id: HashMap<&str, &ClaimRetrieval> = results.iter().map(|r| (r.claim_id.as_str(), r)).collect();
    let rc = ctx.cfg.retrieval_config();
    corpus
        .iter()
        .map(|r| {
            let found = by_id
                .get(r.id.as_str())
                .ok_or_else(|| anyhow!("{}: claim {} has no retrieval result", path.display(), r.id))?;
            Ok(VerifierInput::new(r.text.clone(), found.evidence_texts(r, &rc)))
        })
        .collect()
}

fn train_verifier(
    ctx: &Context,
    mode: Option<factcheck_core::verification::FeatureMode>,
    epochs: Option<usize>,
    retrieval: Option<&Path>,
    model_out: Option<PathBuf>,
) -> Result<Outputs> {
    let corpus = ctx.corpus()?;
    let lexicon = ctx.lexicon()?;
    let mut features = ctx.cfg.verifier.features();
    features.mode = mode.unwrap_or(features.mode);
    let mut hp = ctx.cfg.verifier.hyperparams(ctx.cfg.seed);
    hp.epochs = epochs.unwrap_or(hp.epochs);
    let inputs = verifier_inputs(ctx, &corpus, retrieval)?;
    let data: Vec<(VerifierInput, Label)> = inputs.into_iter().zip(corpus.iter().map(|r| r.label)).collect();
    let outcome = train(&data, lexicon, features, hp)?;
    eprintln!("trained on {} claims, final loss {}", data.len(), fmt_f64(outcome.final_loss));
    let log = csv_text(
        &["epoch", "loss"],
        outcome
            .loss_history
            .iter()
            .enumerate()
            .map(|(i, l)| vec![i.to_string(), fmt_f64(*l)]),
    );
    let mut out = Outputs::default();
    out.add(model_out.unwrap_or_else(|| ctx.out("model.json")), outcome.model.to_json());
    out.add(ctx.out("train_log.csv"), log);
    Ok(out)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    id: &'a str,
    gold: Label,
    predicted: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    probs: Option<&'a std::collections::BTreeMap<Label, f64>>,
}

fn metrics_csv(m: &MetricsReport) -> String {
    let mut rows: Vec<Vec<String>> = m
        .per_class
        .iter()
        .map(|(l, c)| {
            vec![
                l.to_string(),
                fmt_f64(c.precision),
                fmt_f64(c.recall),
                fmt_f64(c.f1),
                c.support.to_string(),
            ]
        })
        .collect();
    rows.push(vec!["accuracy".into(), String::new(), String::new(), fmt_f64(m.accuracy), m.n.to_string()]);
    rows.push(vec!["macro".into(), String::new(), String::new(), fmt_f64(m.macro_f1), m.n.to_string()]);
    csv_text(&["class", "precision", "recall", "f1", "support"], rows)
}

fn eval_verifier(
    ctx: &Context,
    model: Option<&Path>,
    remote: Option<&str>,
    shots: usize,
    shots_from: Option<&Path>,
    retrieval: Option<&Path>,
) -> Result<Outputs> {
    let corpus = ctx.corpus()?;
    let verifier: Box<dyn Verifier> = match (model, remote) {
        (Some(path), None) => {
            require_file(path)?;
            Box::new(LinearVerifierModel::load(path, ctx.lexicon()?)?)
        }
        (None, Some(url)) => {
            let mut v = RemoteVerifier::new(url);
            if shots > 0 {
                let src = shots_from.ok_or_else(|| anyhow!("--shots needs --shots-from <corpus>"))?;
                let pool = load_corpus(src)?;
                v = v.with_shots(
                    pool.iter().map(|r| Shot {
                        claim: r.text.clone(),
                        evidence: r.gold_texts(),
                        label: r.label,
                    }),
                    shots,
                );
                if v.shots().len() < shots {
                    log::warn!("only {} shots available", v.shots().len());
                }
            }
            Box::new(v)
        }
        _ => bail!("give exactly one of --model and --remote"),
    };
    let inputs = verifier_inputs(ctx, &corpus, retrieval)?;
    let preds = verify_all(verifier.as_ref(), &inputs, ctx.cfg.verifier.max_in_flight)?;
    let golds: Vec<Label> = corpus.iter().map(|r| r.label).collect();
    let labels: Vec<Label> = preds.iter().map(|p| p.label).collect();
    let metrics = evaluate(&labels, &golds)?;
    eprintln!("accuracy {} macro-F1 {}", fmt_f64(metrics.accuracy), fmt_f64(metrics.macro_f1));
    let rows: Vec<PredictionRow> = corpus
        .iter()
        .zip(&preds)
        .map(|(r, p)| PredictionRow {
            id: &r.id,
            gold: r.label,
            predicted: p.label,
            probs: p.probs.as_ref(),
        })
        .collect();
    let mut out = Outputs::default();
    out.add(ctx.out("metrics.json"), json_pretty(&metrics));
    out.add(ctx.out("metrics.csv"), metrics_csv(&metrics));
    out.add(ctx.out("metrics.md"), metrics.to_markdown());
    out.add(ctx.out("predictions.jsonl"), to_jsonl(&rows));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct Skipped {
    id: String,
    reason: String,
}

fn rewrite_with_llm(ctx: &Context, instances: &[RewriteInstance], lexicon: &Lexicon) -> Result<Vec<Result<RewritePair, String>>> {
    let a = &ctx.cfg.adversarial;
    let endpoint = a.endpoint.as_deref().ok_or_else(|| anyhow!("adversarial.endpoint is not set"))?;
    let model = a.model.as_deref().ok_or_else(|| anyhow!("adversarial.model is not set"))?;
    let client = HttpChatClient::from_env(endpoint, model, a.temperature, &a.api_key_env)?;
    let template = match &a.template {
        Some(p) => serde_json::from_str::<PromptTemplate>(&std::fs::read_to_string(p)?)
            .with_context(|| format!("parsing template {}", p.display()))?,
        None => PromptTemplate::default(),
    };
    let exemplars: Vec<RewriteExemplar> = match &a.exemplars {
        Some(p) => read_jsonl(p)?,
        None => Vec::new(),
    };
    let opts = LlmOptions {
        overlap_threshold: a.overlap_threshold,
        retries: a.retries,
        max_in_flight: a.max_in_flight,
    };
    Ok(rewrite_all_via_llm(instances, &client, &template, &exemplars, lexicon, &opts)
        .into_iter()
        .map(|r| r.map_err(|e| e.to_string()))
        .collect())
}

fn build_adversarial(ctx: &Context, rewriter: Rewriter) -> Result<Outputs> {
    let corpus = ctx.corpus()?;
    let lexicon = ctx.lexicon()?;
    let a = &ctx.cfg.adversarial;
    let mut skipped = Vec::new();
    let mut instances = Vec::new();
    for r in corpus.iter() {
        match RewriteInstance::from_record(r) {
            Ok(i) => instances.push(i),
            Err(e) => skipped.push(Skipped {
                id: r.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let rules = match &a.rules {
        Some(p) => RuleSet::load(p)?,
        None => RuleSet::default(),
    };
    let results: Vec<Result<RewritePair, String>> = match rewriter {
        Rewriter::Rules => instances
            .iter()
            .map(|i| rewrite_rule_based(i, &rules, &lexicon, a.overlap_threshold).map_err(|e| e.to_string()))
            .collect(),
        Rewriter::Llm => rewrite_with_llm(ctx, &instances, &lexicon)?,
    };
    // rule rewrites are validated against the lexicon extended with rule words
    let check_lexicon = match rewriter {
        Rewriter::Rules => lexicon.extended(
            rules
                .antonyms
                .iter()
                .chain(&rules.entities)
                .flat_map(|(x, y)| [x.clone(), y.clone()]),
        ),
        Rewriter::Llm => lexicon.clone(),
    };
    let mut claims = HashSet::new();
    let mut pairs = Vec::new();
    for (inst, res) in instances.iter().zip(results) {
        match res {
            Ok(p) => {
                let texts = [p.original.claim.trim().to_string(), p.generated_claim.trim().to_string()];
                if texts.iter().any(|t| claims.contains(t)) {
                    skipped.push(Skipped {
                        id: inst.id.clone(),
                        reason: "claim text duplicates an earlier pair".into(),
                    });
                    continue;
                }
                claims.extend(texts);
                pairs.push(p);
            }
            Err(reason) => skipped.push(Skipped {
                id: inst.id.clone(),
                reason,
            }),
        }
    }
    let dataset = build_symmetric(&pairs, &check_lexicon, a.overlap_threshold)?;
    eprintln!(
        "{} pairs, {} instances, {} skipped",
        pairs.len(),
        dataset.len(),
        skipped.len()
    );
    let mut out = Outputs::default();
    out.add(ctx.out("adversarial.jsonl"), dataset.to_jsonl());
    out.add(ctx.out("rewrite_pairs.jsonl"), to_jsonl(&pairs));
    out.add(ctx.out("skipped.jsonl"), to_jsonl(&skipped));
    Ok(out)
}

fn qc_sample(ctx: &Context, fraction: f64, dataset: Option<&Path>) -> Result<Outputs> {
    let corpus = match dataset {
        Some(p) => load_corpus(p)?,
        None => ctx.corpus()?,
    };
    let items = sample_for_qc(corpus.records(), fraction, ctx.cfg.seed)?;
    eprintln!("sampled {} of {}", items.len(), corpus.len());
    let mut out = Outputs::default();
    out.add(ctx.out("qc_sample.jsonl"), to_jsonl(&items));
    Ok(out)
}

enum AgreeInput {
    Annotations(Vec<AnnotationRecord>),
    Dataset(Corpus),
}

/// Annotation logs carry `annotator_id`; anything else is read as a corpus.
fn read_agree_input(p: &Path) -> Result<AgreeInput> {
    require_file(p)?;
    let text = std::fs::read_to_string(p)?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let probe: serde_json::Value =
        serde_json::from_str(first).with_context(|| format!("{}: first line is not JSON", p.display()))?;
    if probe.get("annotator_id").is_some() {
        Ok(AgreeInput::Annotations(read_jsonl(p)?))
    } else {
        Ok(AgreeInput::Dataset(load_corpus(p)?))
    }
}

/// The latest record per (pair, annotator), as the store keeps it.
fn latest(records: Vec<AnnotationRecord>) -> Vec<AnnotationRecord> {
    let mut map = std::collections::BTreeMap::new();
    for r in records {
        map.insert((r.pair_id.clone(), r.annotator_id.clone()), r);
    }
    map.into_values().collect()
}

pub fn agreement_markdown(report: &AgreementReport) -> String {
    let cell = |k: &Option<KappaReport>| match k {
        Some(k) => (format!("{:.4}", k.kappa), format!("{:.4}", k.observed)),
        None => ("n/a".into(), "n/a".into()),
    };
    let mut t = MarkdownTable::new(vec!["Rater A".into(), "Rater B".into(), "Items".into(), "Kappa".into(), "Raw agreement".into()]);
    for p in &report.pairwise {
        let (k, o) = cell(&p.report);
        t.push(vec![p.annotator_a.clone(), p.annotator_b.clone(), p.items.to_string(), k, o]);
    }
    for d in &report.vs_dataset {
        let (k, o) = cell(&d.report);
        t.push(vec![d.annotator.clone(), "dataset".into(), d.items.to_string(), k, o]);
    }
    format!(
        "{}\n{} annotations, {} grammar flags\n",
        t.render(),
        report.annotations,
        report.grammar_flags
    )
}

fn agreement_csv(report: &AgreementReport) -> String {
    let row = |a: &str, b: &str, items: usize, k: &Option<KappaReport>| {
        let f = |g: fn(&KappaReport) -> f64| k.as_ref().map(|k| fmt_f64(g(k))).unwrap_or_default();
        vec![
            a.to_string(),
            b.to_string(),
            items.to_string(),
            f(|k| k.kappa),
            f(|k| k.observed),
            f(|k| k.expected),
            k.as_ref().map(|k| k.degenerate.to_string()).unwrap_or_default(),
        ]
    };
    let rows = report
        .pairwise
        .iter()
        .map(|p| row(&p.annotator_a, &p.annotator_b, p.items, &p.report))
        .chain(report.vs_dataset.iter().map(|d| row(&d.annotator, "dataset", d.items, &d.report)));
    csv_text(&["rater_a", "rater_b", "items", "kappa", "observed", "expected", "degenerate"], rows)
}

fn qc_agree(ctx: &Context, a: &Path, b: &Path) -> Result<Outputs> {
    let mut annotations = Vec::new();
    let mut labels: HashMap<String, Label> = HashMap::new();
    for p in [a, b] {
        match read_agree_input(p)? {
            AgreeInput::Annotations(r) => annotations.extend(r),
            AgreeInput::Dataset(c) => labels.extend(c.iter().map(|r| (r.id.clone(), r.label))),
        }
    }
    if annotations.is_empty() {
        bail!("neither input holds annotations");
    }
    let records = latest(annotations);
    let report = agreement_report(&records, &labels);
    let mut out = Outputs::default();
    out.add(ctx.out("agreement.json"), json_pretty(&report));
    out.add(ctx.out("agreement.csv"), agreement_csv(&report));
    out.add(ctx.out("agreement.md"), agreement_markdown(&report));
    Ok(out)
}

fn labeled(p: &Path) -> Result<Vec<LabeledInstance>> {
    Ok(load_corpus(p)?.iter().map(LabeledInstance::from_record).collect())
}

#[derive(Serialize)]
struct OutcomeFile {
    outcome: factcheck_core::inoculation::Outcome,
    metric: factcheck_core::inoculation::Metric,
    thresholds: OutcomeThresholds,
    sizes: Vec<factcheck_core::inoculation::SizeSummary>,
}

fn inoculate(ctx: &Context, paths: [&PathBuf; 4], sizes: Option<Vec<usize>>, seeds: Option<Vec<u64>>) -> Result<Outputs> {
    let [train, pool, test, adv] = paths;
    let (base, pool, test, adv) = (labeled(train)?, labeled(pool)?, labeled(test)?, labeled(adv)?);
    let lexicon = ctx.lexicon()?;
    let ic = &ctx.cfg.inoculation;
    let cfg = SweepConfig {
        sizes: sizes.unwrap_or_else(|| ic.sizes_for(pool.len())),
        seeds: seeds.unwrap_or_else(|| ic.seeds.clone()),
        features: ctx.cfg.verifier.features(),
        hyperparams: ctx.cfg.verifier.hyperparams(ctx.cfg.seed),
        replacement: ic.replacement,
        warm_start: ic.warm_start,
        max_parallel: ic.max_parallel,
    };
    let result = run_sweep(&base, &pool, &test, &adv, &lexicon, &cfg)?;
    let report = emit_sweep_report(&result);
    let thresholds = OutcomeThresholds {
        gap: ic.gap_threshold,
        original: ic.original_threshold,
    };
    let outcome = classify_outcome(&result, ic.metric, thresholds)?;
    eprintln!("outcome: {outcome:?}");
    let file = OutcomeFile {
        outcome,
        metric: ic.metric,
        thresholds,
        sizes: result.summary(),
    };
    let mut out = Outputs::default();
    out.add(ctx.out("sweep_long.csv"), report.long_csv);
    out.add(ctx.out("sweep_summary.csv"), report.summary_csv);
    out.add(ctx.out("sweep_summary.md"), report.markdown);
    out.add(ctx.out("outcome.json"), json_pretty(&file));
    Ok(out)
}
