//! Workbench configuration file (TOML). Every key is optional; command-line
//! flags override file values. Secrets are never read from here.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use factcheck_core::adversarial::{DEFAULT_OVERLAP_THRESHOLD, DEFAULT_RETRIES};
use factcheck_core::inoculation::{Metric, DEFAULT_SIZES};
use factcheck_core::retrieval::{RecallVariant, RetrievalConfig, RetrievalMode};
use factcheck_core::verification::{FeatureConfig, FeatureMode, Hyperparams};
use serde::Deserialize;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkbenchConfig {
    pub seed: u64,
    pub paths: PathsConfig,
    pub retrieval: RetrievalSection,
    pub verifier: VerifierSection,
    pub adversarial: AdversarialSection,
    pub inoculation: InoculationSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: None,
            lexicon: None,
            output_dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RetrievalSection {
    pub threshold: f64,
    pub k: usize,
    pub mode: RetrievalMode,
    pub recall_variant: RecallVariant,
    pub bootstrap_resamples: usize,
    pub max_in_flight: usize,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        let d = RetrievalConfig::default();
        RetrievalSection {
            threshold: d.threshold,
            k: d.k,
            mode: d.mode,
            recall_variant: RecallVariant::Coverage,
            bootstrap_resamples: 1000,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifierSection {
    pub mode: FeatureMode,
    pub hash_bits: u32,
    pub hash_seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub normalize: bool,
    pub max_in_flight: usize,
}

impl Default for VerifierSection {
    fn default() -> Self {
        let f = FeatureConfig::default();
        let h = Hyperparams::default();
        VerifierSection {
            mode: f.mode,
            hash_bits: f.hash_bits,
            hash_seed: f.hash_seed,
            learning_rate: h.learning_rate,
            epochs: h.epochs,
            l2: h.l2,
            normalize: h.normalize,
            max_in_flight: 4,
        }
    }
}

impl VerifierSection {
    pub fn features(&self) -> FeatureConfig {
        FeatureConfig {
            mode: self.mode,
            hash_bits: self.hash_bits,
            hash_seed: self.hash_seed,
        }
    }

    pub fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams {
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            l2: self.l2,
            seed,
            normalize: self.normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarialSection {
    pub overlap_threshold: f64,
    pub retries: usize,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub temperature: f64,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub rules: Option<PathBuf>,
    pub template: Option<PathBuf>,
    pub exemplars: Option<PathBuf>,
}

impl Default for AdversarialSection {
    fn default() -> Self {
        AdversarialSection {
            overlap_threshold: DEFAULT_OVERLAP_THRESHOLD,
            retries: DEFAULT_RETRIES,
            endpoint: None,
            model: None,
            temperature: 0.0,
            api_key_env: "FACTCHECK_LLM_API_KEY".into(),
            max_in_flight: 4,
            rules: None,
            template: None,
            exemplars: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InoculationSection {
    pub sizes: Option<Vec<usize>>,
    pub seeds: Vec<u64>,
    pub replacement: bool,
    pub warm_start: bool,
    pub metric: Metric,
    pub gap_threshold: f64,
    pub original_threshold: f64,
    pub max_parallel: usize,
}

impl Default for InoculationSection {
    fn default() -> Self {
        InoculationSection {
            sizes: None,
            seeds: (0..5).collect(),
            replacement: false,
            warm_start: false,
            metric: Metric::Accuracy,
            gap_threshold: 0.05,
            original_threshold: 0.05,
            max_parallel: 1,
        }
    }
}

impl InoculationSection {
    pub fn sizes_for(&self, pool_len: usize) -> Vec<usize> {
        match &self.sizes {
            Some(s) => s.clone(),
            None => DEFAULT_SIZES.iter().copied().filter(|&s| s <= pool_len).collect(),
        }
    }
}

impl WorkbenchConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: WorkbenchConfig = toml::from_str(text).context("invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.retrieval;
        if !(0.0..=1.0).contains(&r.threshold) {
            bail!("retrieval.threshold must lie in [0, 1], got {}", r.threshold);
        }
        if r.k == 0 {
            bail!("retrieval.k must be at least 1");
        }
        let a = &self.adversarial;
        if !(0.0..=1.0).contains(&a.overlap_threshold) {
            bail!("adversarial.overlap_threshold must lie in [0, 1], got {}", a.overlap_threshold);
        }
        let i = &self.inoculation;
        if i.seeds.is_empty() {
            bail!("inoculation.seeds must not be empty");
        }
        if i.gap_threshold < 0.0 || i.original_threshold < 0.0 {
            bail!("inoculation thresholds must be non-negative");
        }
        self.verifier.hyperparams(self.seed).validate()?;
        Ok(())
    }

    pub fn retrieval_config(&self) -> RetrievalConfig {
        RetrievalConfig {
            threshold: self.retrieval.threshold,
            k: self.retrieval.k,
            mode: self.retrieval.mode,
        }
    }
}
