//! The full stage graph with fingerprint-based caching.
//!
//! ```text
//! generate -> prompts -> summarize -> score
//!                 \-> grpo
//! generate, summarize -> train -> evaluate
//! ```
//!
//! A stage's fingerprint hashes its own config slice together with the
//! fingerprints of its inputs. A stage is skipped when its primary artifact
//! has a complete sidecar with the same fingerprint and every secondary
//! output exists.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use clickcast_core::eval::{format_table, Method, RunReport};
use clickcast_core::forecaster::{FusionForecaster, TsfConfig};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::jsonl::{read_jsonl, write_atomic, PromptRecord, ResponseRecord};
use crate::meta::{read_meta, sha256_hex, stage_fingerprint, write_meta, ArtifactMeta};
use crate::model_file::{load_model, save_model};
use crate::report::{write_metrics, write_table};
use crate::stages::{self, in_stage, SummaryBackend};

pub const DATA: &str = "data.jsonl";
pub const PROMPTS: &str = "prompts.jsonl";
pub const SUMMARIES: &str = "summaries.jsonl";
pub const SCORES: &str = "scores.jsonl";
pub const GRPO_HISTORY: &str = "grpo_history.csv";
pub const MODEL_INDEX: &str = "models/index.json";
pub const METRICS: &str = "metrics.csv";
pub const TABLE: &str = "table.csv";
pub const TABLE_TXT: &str = "table.txt";
pub const MANIFEST: &str = "manifest.json";
pub const CONFIG: &str = "config.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: String,
    pub fingerprint: String,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_fingerprint: String,
    pub stages: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineReport {
    pub executed: Vec<&'static str>,
    pub cached: Vec<&'static str>,
    pub manifest: Manifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub method: Method,
    pub seed: u64,
    /// Relative to the index file.
    pub path: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelIndex {
    pub fingerprint: String,
    pub models: Vec<ModelEntry>,
}

struct StageSpec {
    name: &'static str,
    primary: &'static str,
    extras: Vec<String>,
    config: Value,
    inputs: BTreeMap<String, String>,
}

struct Runner<'a> {
    out: &'a Path,
    report: PipelineReport,
}

impl Runner<'_> {
    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn run(
        &mut self,
        spec: StageSpec,
        body: impl FnOnce(&str) -> Result<Vec<String>>,
    ) -> Result<String> {
        let StageSpec {
            name,
            primary,
            mut extras,
            config,
            inputs,
        } = spec;
        let fingerprint = in_stage(name, stage_fingerprint(name, &config, &inputs))?;
        let primary_path = self.path(primary);
        let cached = match read_meta(&primary_path) {
            Ok(Some(m)) => {
                m.complete
                    && m.fingerprint == fingerprint
                    && primary_path.exists()
                    && extras.iter().all(|e| self.path(e).exists())
            }
            _ => false,
        };
        if cached {
            log::info!("{name}: cached ({})", &fingerprint[..12]);
            self.report.cached.push(name);
        } else {
            log::info!("{name}: running");
            let mut meta = ArtifactMeta {
                stage: name.to_string(),
                fingerprint: fingerprint.clone(),
                config,
                inputs,
                complete: false,
            };
            in_stage(name, write_meta(&primary_path, &meta))?;
            let produced = in_stage(name, body(&fingerprint))?;
            extras = produced;
            meta.complete = true;
            in_stage(name, write_meta(&primary_path, &meta))?;
            self.report.executed.push(name);
        }
        let mut artifacts = vec![primary.to_string()];
        artifacts.extend(extras);
        self.report.manifest.stages.push(ManifestEntry {
            stage: name.to_string(),
            fingerprint: fingerprint.clone(),
            artifacts,
        });
        Ok(fingerprint)
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
}

fn inputs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

/// Secondary outputs recorded by the previous successful run of a stage.
fn previous_extras(out: &Path, stage: &str) -> Vec<String> {
    let text = std::fs::read_to_string(out.join(MANIFEST)).unwrap_or_default();
    serde_json::from_str::<Manifest>(&text)
        .ok()
        .and_then(|m| m.stages.into_iter().find(|s| s.stage == stage))
        .map(|s| s.artifacts.into_iter().skip(1).collect())
        .unwrap_or_default()
}

fn models_trained(config: &RunConfig) -> Vec<Method> {
    config
        .eval
        .methods
        .iter()
        .copied()
        .filter(|m| m.mode().is_some())
        .collect()
}

/// Runs every stage of `config` into `out_dir` (defaults to
/// `config.paths.out_dir`).
pub fn run_pipeline(config: &RunConfig, out_dir: Option<&Path>) -> Result<PipelineReport> {
    let config = in_stage("config", config.resolved())?;
    let out = out_dir.map_or_else(|| config.paths.out_dir.clone(), Path::to_path_buf);
    let config_fingerprint = in_stage("config", config.fingerprint())?;
    let mut r = Runner {
        out: &out,
        report: PipelineReport {
            executed: Vec::new(),
            cached: Vec::new(),
            manifest: Manifest {
                config_fingerprint: config_fingerprint.clone(),
                stages: Vec::new(),
            },
        },
    };
    let window = config.generator.rolling_window;
    let (l, h) = (config.tsf.lookback, config.tsf.horizon);

    let data_fp = r.run(
        StageSpec {
            name: "generate",
            primary: DATA,
            extras: vec![],
            config: to_value(&config.generator)?,
            inputs: BTreeMap::new(),
        },
        |_| stages::generate(&config.generator, &out.join(DATA)).map(|_| vec![]),
    )?;

    let prompts_fp = r.run(
        StageSpec {
            name: "prompts",
            primary: PROMPTS,
            extras: vec![],
            config: json!({"prompt": to_value(&config.prompt)?, "rolling_window": window}),
            inputs: inputs(&[("data", &data_fp)]),
        },
        |_| {
            let campaigns = stages::ingest(&out.join(DATA), window)?;
            stages::build_prompts(&campaigns, &config.prompt, &out.join(PROMPTS)).map(|_| vec![])
        },
    )?;

    let s = &config.summarizer;
    let summarize_config = if s.mock {
        json!({"mock": true, "generator": to_value(&config.generator)?, "prompt": to_value(&config.prompt)?})
    } else {
        json!({"mock": false, "endpoint": s.endpoint, "external_formatter": s.external_formatter,
               "prompt": to_value(&config.prompt)?, "rolling_window": window})
    };
    let summaries_fp = r.run(
        StageSpec {
            name: "summarize",
            primary: SUMMARIES,
            extras: vec![],
            config: summarize_config,
            inputs: inputs(&[("data", &data_fp), ("prompts", &prompts_fp)]),
        },
        |_| {
            let campaigns = stages::ingest(&out.join(DATA), window)?;
            let prompts: Vec<PromptRecord> = read_jsonl(&out.join(PROMPTS))?;
            let backend = if s.mock {
                SummaryBackend::Mock(config.generator.clone())
            } else {
                SummaryBackend::External {
                    endpoint: s.endpoint.clone(),
                    external_formatter: s.external_formatter,
                    cache_dir: out.join("cache/llm"),
                }
            };
            stages::summarize(
                &campaigns,
                &prompts,
                &config.prompt,
                &backend,
                &out.join(SUMMARIES),
            )
            .map(|_| vec![])
        },
    )?;

    let (pos, neg) = in_stage("score", config.reward.lexicon_texts())?;
    let lexicon_fp = sha256_hex(format!("{pos}\0{neg}").as_bytes());
    r.run(
        StageSpec {
            name: "score",
            primary: SCORES,
            extras: vec![],
            config: json!({"lexicons": lexicon_fp}),
            inputs: inputs(&[("summaries", &summaries_fp), ("prompts", &prompts_fp)]),
        },
        |_| {
            let responses: Vec<ResponseRecord> = read_jsonl(&out.join(SUMMARIES))?;
            let labels: Vec<PromptRecord> = read_jsonl(&out.join(PROMPTS))?;
            let scorer = config.reward.scorer()?;
            stages::score(&responses, &labels, &scorer, &out.join(SCORES)).map(|_| vec![])
        },
    )?;

    r.run(
        StageSpec {
            name: "grpo",
            primary: GRPO_HISTORY,
            extras: vec![],
            config: json!({"grpo": to_value(&config.grpo)?, "lexicons": lexicon_fp}),
            inputs: inputs(&[("prompts", &prompts_fp)]),
        },
        |_| {
            let prompts: Vec<PromptRecord> = read_jsonl(&out.join(PROMPTS))?;
            let scorer = config.reward.scorer()?;
            stages::grpo_toy(
                &prompts,
                config.grpo.num_prompts,
                &config.grpo.grpo,
                &scorer,
                &out.join(GRPO_HISTORY),
            )
            .map(|_| vec![])
        },
    )?;

    let learned = models_trained(&config);
    let needs_summaries = config.eval.methods.contains(&Method::MultiSummary);
    let mut train_inputs = inputs(&[("data", &data_fp)]);
    if needs_summaries {
        train_inputs.insert("summaries".into(), summaries_fp.clone());
    }
    // The per-model seed comes from `eval.seeds`.
    let tsf = TsfConfig {
        seed: 0,
        ..config.tsf.clone()
    };
    let train_fp = r.run(
        StageSpec {
            name: "train",
            primary: MODEL_INDEX,
            extras: previous_extras(&out, "train"),
            config: json!({
                "tsf": to_value(&tsf)?,
                "embedder": to_value(&config.embedder)?,
                "methods": to_value(&learned)?,
                "seeds": config.eval.seeds,
                "test_campaigns": config.eval.test_campaigns,
                "rolling_window": window,
            }),
            inputs: train_inputs.clone(),
        },
        |fp| {
            let campaigns = stages::ingest(&out.join(DATA), window)?;
            let (train, _) = stages::split_samples(&campaigns, config.eval.test_campaigns, l, h)?;
            let summaries = if needs_summaries {
                Some(stages::load_summaries(&out.join(SUMMARIES))?)
            } else {
                None
            };
            let embedder = stages::build_embedder(&config.embedder, &out.join("cache/embeddings"))?;
            let mut index = ModelIndex {
                fingerprint: fp.to_string(),
                models: Vec::new(),
            };
            let mut produced = Vec::new();
            for &method in &learned {
                for &seed in &config.eval.seeds {
                    let c = TsfConfig {
                        seed,
                        ..tsf.clone()
                    };
                    let model = stages::train_method(
                        method,
                        &train,
                        summaries.as_ref(),
                        &c,
                        embedder.as_ref(),
                    )?;
                    let name = format!("{}-seed{seed}.bin", stages::method_slug(method));
                    save_model(
                        &out.join("models").join(&name),
                        &model,
                        method.as_str(),
                        fp,
                        train_inputs.clone(),
                    )?;
                    produced.push(format!("models/{name}"));
                    index.models.push(ModelEntry {
                        method,
                        seed,
                        path: name,
                    });
                }
            }
            let text =
                serde_json::to_string_pretty(&index).map_err(|e| Error::Config(e.to_string()))?;
            write_atomic(&out.join(MODEL_INDEX), |w| writeln!(w, "{text}"))?;
            Ok(produced)
        },
    )?;

    let mut eval_inputs = inputs(&[("data", &data_fp), ("train", &train_fp)]);
    if needs_summaries {
        eval_inputs.insert("summaries".into(), summaries_fp.clone());
    }
    r.run(
        StageSpec {
            name: "evaluate",
            primary: METRICS,
            extras: vec![TABLE.into(), TABLE_TXT.into()],
            config: json!({"eval": to_value(&config.eval)?, "lookback": l, "horizon": h, "rolling_window": window}),
            inputs: eval_inputs,
        },
        |fp| {
            let campaigns = stages::ingest(&out.join(DATA), window)?;
            let (_, test) = stages::split_samples(&campaigns, config.eval.test_campaigns, l, h)?;
            let summaries = if needs_summaries { Some(stages::load_summaries(&out.join(SUMMARIES))?) } else { None };
            let index: ModelIndex = {
                let p = out.join(MODEL_INDEX);
                let text = std::fs::read_to_string(&p).map_err(crate::error::io_err(&p))?;
                serde_json::from_str(&text).map_err(|source| Error::Json { path: p, line: 0, source })?
            };
            if index.fingerprint != train_fp {
                return Err(Error::FingerprintMismatch {
                    what: MODEL_INDEX.into(),
                    expected: train_fp.clone(),
                    found: index.fingerprint,
                });
            }
            let mut reports = Vec::new();
            for &method in &config.eval.methods {
                let mut models: Vec<FusionForecaster> = Vec::new();
                if method.mode().is_some() {
                    for &seed in &config.eval.seeds {
                        let entry = index
                            .models
                            .iter()
                            .find(|m| m.method == method && m.seed == seed)
                            .ok_or_else(|| Error::Config(format!("no {} model for seed {seed}", method.as_str())))?;
                        let (model, header) = load_model(&out.join("models").join(&entry.path))?;
                        check_model_inputs(&header.fingerprint, &header.inputs, &train_fp, &data_fp)?;
                        models.push(model);
                    }
                }
                let refs: Vec<Option<&FusionForecaster>> = if models.is_empty() {
                    config.eval.seeds.iter().map(|_| None).collect()
                } else {
                    models.iter().map(Some).collect()
                };
                let embedder = match models.first().and_then(|m| m.embedder()) {
                    Some(id) => Some(stages::embedder_for(id, &out.join("cache/embeddings"))?),
                    None => None,
                };
                reports.push(stages::evaluate_method(
                    method,
                    &config.eval.seeds,
                    &refs,
                    &test,
                    summaries.as_ref(),
                    embedder.as_deref(),
                    fp,
                    config.eval.scale,
                )?);
            }
            write_reports(&out, &reports)?;
            Ok(vec![TABLE.into(), TABLE_TXT.into()])
        },
    )?;

    let report = r.report;
    let manifest_text =
        serde_json::to_string_pretty(&report.manifest).map_err(|e| Error::Config(e.to_string()))?;
    let config_text =
        serde_json::to_string_pretty(&config).map_err(|e| Error::Config(e.to_string()))?;
    in_stage(
        "manifest",
        write_atomic(&out.join(MANIFEST), |w| writeln!(w, "{manifest_text}")),
    )?;
    in_stage(
        "manifest",
        write_atomic(&out.join(CONFIG), |w| writeln!(w, "{config_text}")),
    )?;
    Ok(report)
}

fn check_model_inputs(
    model_fp: &str,
    model_inputs: &BTreeMap<String, String>,
    train_fp: &str,
    data_fp: &str,
) -> Result<()> {
    if model_fp != train_fp {
        return Err(Error::FingerprintMismatch {
            what: "model".into(),
            expected: train_fp.into(),
            found: model_fp.into(),
        });
    }
    if let Some(d) = model_inputs.get("data") {
        if d != data_fp {
            return Err(Error::FingerprintMismatch {
                what: "model data".into(),
                expected: data_fp.into(),
                found: d.clone(),
            });
        }
    }
    Ok(())
}

/// `metrics.csv`, `table.csv` and `table.txt` for a set of reports.
pub fn write_reports(out: &Path, reports: &[RunReport]) -> Result<()> {
    write_metrics(&out.join(METRICS), reports)?;
    write_table(&out.join(TABLE), reports)?;
    let text = format_table(reports);
    write_atomic(&out.join(TABLE_TXT), |w| w.write_all(text.as_bytes()))
}
