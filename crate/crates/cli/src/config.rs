//! Pipeline configuration file (TOML).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use newsprobe_core::corpus::{CleaningConfig, DedupConfig, IngestFormat};
use newsprobe_core::dataset::DEFAULT_RATIOS;
use newsprobe_core::inference::ReportFormat;
use newsprobe_core::synthesis::{GateConfig, HttpRewriteConfig, RetryPolicy};
use newsprobe_core::TrainConfig;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Seed shared by every stage that does not set its own.
    pub seed: u64,
    /// Root for stage output directories; `--out` overrides it.
    pub out_dir: PathBuf,
    pub corpus: CorpusSection,
    pub synthesis: SynthesisSection,
    pub dataset: DatasetSection,
    pub training: TrainConfig,
    pub inference: InferenceSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("runs/default"),
            corpus: CorpusSection::default(),
            synthesis: SynthesisSection::default(),
            dataset: DatasetSection::default(),
            training: TrainConfig::default(),
            inference: InferenceSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusSection {
    /// JSON-lines files of human-written articles.
    pub inputs: Vec<PathBuf>,
    pub format: IngestFormat,
    pub cleaning: CleaningConfig,
    pub dedup: DedupConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    #[default]
    Mock,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisSection {
    pub provider: Provider,
    pub seed: Option<u64>,
    /// Share of replaceable words the mock rewriter swaps.
    pub mock_fraction: f64,
    pub http: Option<HttpRewriteConfig>,
    /// Prompt template file; the bundled prompt when unset.
    pub prompt_template: Option<PathBuf>,
    /// Newspaper name used in the prompt, per source; defaults to the source.
    pub newspaper_names: BTreeMap<String, String>,
    pub gates: GateConfig,
    pub retry: RetryPolicy,
    pub workers: usize,
}

impl Default for SynthesisSection {
    fn default() -> Self {
        SynthesisSection {
            provider: Provider::Mock,
            seed: None,
            mock_fraction: 0.35,
            http: None,
            prompt_template: None,
            newspaper_names: BTreeMap::new(),
            gates: GateConfig::default(),
            retry: RetryPolicy::default(),
            workers: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub ratios: [f64; 3],
    pub seed: Option<u64>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            ratios: DEFAULT_RATIOS,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchPolicy {
    #[default]
    Warn,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InferenceSection {
    /// Unlabeled JSON-lines corpora to score.
    pub inputs: Vec<PathBuf>,
    pub formats: Vec<ReportFormat>,
    pub batch_size: usize,
    /// What to do when the checkpoint was trained under a different cleaning config.
    pub on_cleaning_mismatch: MismatchPolicy,
}

impl Default for InferenceSection {
    fn default() -> Self {
        InferenceSection {
            inputs: Vec::new(),
            formats: ReportFormat::ALL.to_vec(),
            batch_size: 32,
            on_cleaning_mismatch: MismatchPolicy::Warn,
        }
    }
}

impl PipelineConfig {
    /// Parses `path`, resolves relative paths against its directory and
    /// applies seed propagation. `seed_override` replaces every seed.
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::parse(&text, seed_override).with_context(|| format!("in config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let raw: toml::Table = text.parse().context("config is not valid TOML")?;
        let training_seed_set = raw
            .get("training")
            .and_then(|t| t.as_table())
            .is_some_and(|t| t.contains_key("seed"));
        let mut cfg: PipelineConfig = toml::from_str(text).context("config does not match the schema")?;
        if let Some(seed) = seed_override {
            cfg.seed = seed;
            cfg.synthesis.seed = Some(seed);
            cfg.dataset.seed = Some(seed);
            cfg.training.seed = seed;
        } else if !training_seed_set {
            cfg.training.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        self.corpus.inputs.iter_mut().for_each(fix);
        self.inference.inputs.iter_mut().for_each(fix);
        if let Some(p) = self.synthesis.prompt_template.as_mut() {
            fix(p);
        }
        let id = &mut self.training.pretrained_id;
        let looks_local = id.starts_with("./") || id.starts_with("../");
        if looks_local {
            *id = base.join(&*id).to_string_lossy().into_owned();
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.corpus.cleaning.validate().context("corpus.cleaning")?;
        self.training.validate().context("training")?;
        let sum: f64 = self.dataset.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.dataset.ratios.iter().any(|&r| r < 0.0) {
            bail!("dataset.ratios must be non-negative and sum to 1, got {:?}", self.dataset.ratios);
        }
        if !(0.0..=1.0).contains(&self.synthesis.mock_fraction) {
            bail!("synthesis.mock_fraction must lie in [0, 1]");
        }
        let g = &self.synthesis.gates;
        if !(g.min_length_ratio <= g.max_length_ratio) {
            bail!("synthesis.gates: min_length_ratio exceeds max_length_ratio");
        }
        if self.synthesis.provider == Provider::Http && self.synthesis.http.is_none() {
            bail!("synthesis.http must be set when synthesis.provider = \"http\"");
        }
        if self.inference.batch_size == 0 {
            bail!("inference.batch_size must be at least 1");
        }
        Ok(())
    }

    pub fn synthesis_seed(&self) -> u64 {
        self.synthesis.seed.unwrap_or(self.seed)
    }

    pub fn dataset_seed(&self) -> u64 {
        self.dataset.seed.unwrap_or(self.seed)
    }
}
