use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use factcheck_core::retrieval::RetrievalMode;
use factcheck_core::verification::FeatureMode;
use factcheck_core::Label;

#[derive(Debug, Parser)]
#[command(name = "factcheck", version, about = "Chinese fact-checking workbench")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Canonical corpus JSONL.
    #[arg(long, global = true)]
    pub corpus: Option<PathBuf>,
    /// Segmentation lexicon, one word per line.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    /// Directory for all outputs.
    #[arg(long = "out", global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert an external JSONL file to the canonical corpus format.
    Ingest {
        input: PathBuf,
        /// JSON field/label mapping; the canonical schema when omitted.
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Domain and label distribution of the corpus.
    Stats,
    /// Top phrases by local mutual information with a label.
    AuditBias {
        #[arg(long)]
        label: Label,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        min_count: u64,
        /// Phrase length in words.
        #[arg(long, default_value_t = 1)]
        ngram: usize,
    },
    /// Rank and select evidence sentences, then score recall@k.
    Retrieve {
        /// lexical, semantic, remote:<url> or remote-pair:<url>
        #[arg(long, default_value = "lexical")]
        scorer: String,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        mode: Option<RetrievalMode>,
    },
    /// Train the hashed logistic-regression verifier.
    TrainVerifier {
        #[arg(long)]
        mode: Option<FeatureMode>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Use evidence from a `retrieve` output instead of gold evidence.
        #[arg(long)]
        retrieval: Option<PathBuf>,
        /// Defaults to <out>/model.json.
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Score a trained or remote verifier on the corpus.
    EvalVerifier {
        #[arg(long, conflicts_with = "remote", required_unless_present = "remote")]
        model: Option<PathBuf>,
        /// Base URL of a verifier service.
        #[arg(long)]
        remote: Option<String>,
        /// In-context examples sent to the remote verifier.
        #[arg(long, default_value_t = 0, requires = "remote")]
        shots: usize,
        /// Corpus the shots are taken from, in file order.
        #[arg(long)]
        shots_from: Option<PathBuf>,
        #[arg(long)]
        retrieval: Option<PathBuf>,
    },
    /// Rewrite claims and build the symmetric adversarial dataset.
    BuildAdversarial {
        #[arg(long, value_enum, default_value_t = Rewriter::Rules)]
        rewriter: Rewriter,
    },
    /// Quality-control sampling and agreement.
    Qc {
        #[command(subcommand)]
        command: QcCommand,
    },
    /// Inoculation sweep over adversarial fine-tuning sizes.
    Inoculate {
        /// Original training set.
        #[arg(long)]
        train: PathBuf,
        /// Adversarial instances to add.
        #[arg(long)]
        pool: PathBuf,
        /// Original test set.
        #[arg(long)]
        test: PathBuf,
        /// Adversarial test set.
        #[arg(long)]
        adv_test: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
    },
    /// REST server for the annotation UI.
    ServeAnnotation {
        /// 0 picks a free port.
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Annotation log (JSONL, appended).
        #[arg(long)]
        store: PathBuf,
        /// Items to annotate, as written by `qc sample`.
        #[arg(long)]
        tasks: PathBuf,
        /// Dataset whose labels annotators are compared against.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Directory with the UI bundle.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Rewriter {
    Llm,
    Rules,
}

#[derive(Debug, Subcommand)]
pub enum QcCommand {
    /// Seeded sample of the dataset for human review, labels removed.
    Sample {
        #[arg(long, default_value_t = 0.3)]
        fraction: f64,
        /// Defaults to the configured corpus.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Cohen's kappa between two annotation files, or annotations and a dataset.
    Agree {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}
