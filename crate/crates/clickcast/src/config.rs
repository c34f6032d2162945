//! Run configuration: every module's settings, the global seed and paths.
//!
//! The file format is JSON; missing keys take their defaults. The
//! fingerprint is the SHA-256 of the canonical JSON of the resolved config
//! without `paths`, so moving the output directory does not invalidate it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use clickcast_core::eval::{Method, DEFAULT_SCALE};
use clickcast_core::forecaster::TsfConfig;
use clickcast_core::grpo::GrpoConfig;
use clickcast_core::prompt::PromptSpec;
use clickcast_core::reward::{Lexicon, LexiconScorer, DEFAULT_NEGATIVE, DEFAULT_POSITIVE};
use clickcast_core::synth::GeneratorConfig;

use crate::error::{io_err, Error, Result};
use crate::meta::{canonical_json, sha256_hex};

/// Effect scale used by default runs; with the default kernel it lets change
/// events explain roughly half of the click variance.
pub const DEFAULT_EFFECT_SCALE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Source of every nested seed; see [`RunConfig::resolved`].
    pub seed: u64,
    pub generator: GeneratorConfig,
    pub prompt: PromptSpec,
    pub reward: RewardConfig,
    pub summarizer: SummarizerConfig,
    pub grpo: GrpoToyConfig,
    pub tsf: TsfConfig,
    pub embedder: EmbedderConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            generator: GeneratorConfig {
                effect_scale: DEFAULT_EFFECT_SCALE,
                ..GeneratorConfig::default()
            },
            prompt: PromptSpec::default(),
            reward: RewardConfig::default(),
            summarizer: SummarizerConfig::default(),
            grpo: GrpoToyConfig::default(),
            tsf: TsfConfig::default(),
            embedder: EmbedderConfig::default(),
            eval: EvalConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

/// Lexicon word lists; `None` uses the built-in lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub positive_lexicon: Option<PathBuf>,
    pub negative_lexicon: Option<PathBuf>,
}

impl RewardConfig {
    /// Lexicon texts (positive, negative).
    pub fn lexicon_texts(&self) -> Result<(String, String)> {
        let read = |p: &Option<PathBuf>, default: &str| -> Result<String> {
            match p {
                Some(p) => std::fs::read_to_string(p).map_err(io_err(p)),
                None => Ok(default.to_string()),
            }
        };
        Ok((
            read(&self.positive_lexicon, DEFAULT_POSITIVE)?,
            read(&self.negative_lexicon, DEFAULT_NEGATIVE)?,
        ))
    }

    pub fn scorer(&self) -> Result<LexiconScorer> {
        let (p, n) = self.lexicon_texts()?;
        Ok(LexiconScorer::new(Lexicon::parse(&p), Lexicon::parse(&n)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarizerConfig {
    /// Use the hermetic mock summariser.
    pub mock: bool,
    /// Chat endpoint; falls back to `CLICKCAST_LLM_URL`.
    pub endpoint: Option<String>,
    /// Reformat non-compliant replies through `CLICKCAST_FORMATTER_URL`.
    pub external_formatter: bool,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        Self {
            mock: true,
            endpoint: None,
            external_formatter: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoToyConfig {
    #[serde(flatten)]
    pub grpo: GrpoConfig,
    /// Prompts drawn (in file order) from the prompts artifact.
    pub num_prompts: usize,
}

impl Default for GrpoToyConfig {
    fn default() -> Self {
        Self {
            grpo: GrpoConfig::default(),
            num_prompts: 20,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedderKind {
    /// The built-in hashing embedder.
    Hashing,
    /// `CLICKCAST_EMBED_URL` / `CLICKCAST_EMBED_MODEL`.
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub kind: EmbedderKind,
    pub seed: u64,
    pub dim: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        let h = clickcast_core::embedding::HashingEmbedder::default();
        Self {
            kind: EmbedderKind::Hashing,
            seed: h.seed,
            dim: h.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// The last this-many campaigns (in dataset order) form the test set.
    pub test_campaigns: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    pub scale: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            test_campaigns: 2,
            seeds: vec![0, 1, 2],
            methods: Method::ALL.to_vec(),
            scale: DEFAULT_SCALE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            out_dir: PathBuf::from("run"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })
    }

    /// Copies the global seed into the generator and GRPO seeds and checks
    /// every section. Evaluation seeds stay as configured.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        c.generator.base_seed = c.seed;
        c.grpo.grpo.seed = c.seed;
        c.tsf.seed = c.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.prompt.validate()?;
        self.tsf.validate()?;
        if self.prompt.lookback != self.tsf.lookback || self.prompt.horizon != self.tsf.horizon {
            return Err(Error::Config(
                "prompt and tsf must use the same lookback and horizon".into(),
            ));
        }
        if self.eval.test_campaigns == 0 || self.eval.test_campaigns >= self.generator.num_campaigns
        {
            return Err(Error::Config(format!(
                "test_campaigns must be between 1 and {} (num_campaigns - 1)",
                self.generator.num_campaigns.saturating_sub(1)
            )));
        }
        if self.eval.seeds.is_empty() {
            return Err(Error::Config("eval.seeds must not be empty".into()));
        }
        if self.eval.methods.is_empty() {
            return Err(Error::Config("eval.methods must not be empty".into()));
        }
        if !(self.eval.scale > 0.0) {
            return Err(Error::Config("eval.scale must be positive".into()));
        }
        if self.grpo.num_prompts == 0 {
            return Err(Error::Config("grpo.num_prompts must be positive".into()));
        }
        if self.embedder.dim != self.tsf.embed_dim {
            return Err(Error::Config(format!(
                "embedder.dim {} differs from tsf.embed_dim {}",
                self.embedder.dim, self.tsf.embed_dim
            )));
        }
        Ok(())
    }

    /// Canonical JSON without `paths`.
    pub fn canonical(&self) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(o) = v.as_object_mut() {
            o.remove("paths");
        }
        canonical_json(&v)
    }

    pub fn fingerprint(&self) -> Result<String> {
        Ok(sha256_hex(self.canonical()?.as_bytes()))
    }
}
