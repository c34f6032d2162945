//! The work done by each stage, shared by the subcommands and the pipeline.
//!
//! Stage functions read their inputs from disk and write one primary
//! artifact; sidecars and caching are the caller's business.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use clickcast_core::data::{make_dataset_samples, CampaignRecord, ForecastSample, TrendLabel};
use clickcast_core::embedding::{EmbedderIdentity, HashingEmbedder, TextEmbedder};
use clickcast_core::eval::{
    changelog_texts, evaluate_copy, evaluate_forecaster, Method, RunReport,
};
use clickcast_core::forecaster::{train, FusionForecaster, TsfConfig};
use clickcast_core::grpo::{
    default_templates, run_grpo, toy_tag_policy, GrpoConfig, IterationStats, PromptCase,
};
use clickcast_core::prompt::{build_prompt, PromptSpec};
use clickcast_core::reward::{compute_reward, ResponseFormatter, SentimentScorer};
use clickcast_core::summarize::{generate_summaries, MockSummarizer, SummaryRecord, SummarySource};
use clickcast_core::synth::{generate_dataset, GeneratorConfig};

use crate::config::{EmbedderConfig, EmbedderKind};
use crate::embed_cache::CachedEmbedder;
use crate::error::{Error, Result};
use crate::http::{ChatClient, ChatFormatter, HttpEmbedder, UreqTransport};
use crate::jsonl::{
    load_campaigns, read_jsonl, save_campaigns, write_jsonl, PromptRecord, ResponseRecord,
    ScoreAggregate, ScoreLine, ScoreRecord,
};

/// Wraps `r`'s error with the stage name.
pub fn in_stage<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        e @ Error::Stage { .. } => e,
        e => Error::Stage {
            stage,
            source: Box::new(e),
        },
    })
}

pub fn generate(config: &GeneratorConfig, out: &Path) -> Result<Vec<CampaignRecord>> {
    let campaigns = generate_dataset(config)?;
    save_campaigns(out, &campaigns)?;
    Ok(campaigns)
}

/// Loads a dataset; failures are tagged with the `ingest` stage.
pub fn ingest(path: &Path, rolling_window: usize) -> Result<Vec<CampaignRecord>> {
    in_stage("ingest", load_campaigns(path, rolling_window))
}

pub fn all_samples(
    campaigns: &[CampaignRecord],
    l: usize,
    h: usize,
) -> Result<Vec<ForecastSample>> {
    let set = make_dataset_samples(campaigns, l, h)?;
    if set.short_campaigns > 0 {
        log::warn!(
            "{} campaigns are shorter than lookback + horizon and yield no samples",
            set.short_campaigns
        );
    }
    Ok(set.samples)
}

/// Train and test samples; the last `test_campaigns` campaigns are held out.
pub fn split_samples(
    campaigns: &[CampaignRecord],
    test_campaigns: usize,
    l: usize,
    h: usize,
) -> Result<(Vec<ForecastSample>, Vec<ForecastSample>)> {
    if test_campaigns == 0 || test_campaigns >= campaigns.len() {
        return Err(Error::Config(format!(
            "cannot hold out {test_campaigns} of {} campaigns",
            campaigns.len()
        )));
    }
    let cut = campaigns.len() - test_campaigns;
    let train = make_dataset_samples(&campaigns[..cut], l, h)?.samples;
    let test = make_dataset_samples(&campaigns[cut..], l, h)?.samples;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config(
            "split leaves an empty train or test set".into(),
        ));
    }
    Ok((train, test))
}

pub fn build_prompts(
    campaigns: &[CampaignRecord],
    spec: &PromptSpec,
    out: &Path,
) -> Result<Vec<PromptRecord>> {
    spec.validate()?;
    let samples = all_samples(campaigns, spec.lookback, spec.horizon)?;
    let records = samples
        .iter()
        .map(|s| {
            Ok(PromptRecord {
                sample_id: s.sample_id(),
                prompt: build_prompt(s, spec)?,
                label: s.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_jsonl(out, &records)?;
    Ok(records)
}

/// How summaries are produced.
pub enum SummaryBackend {
    Mock(GeneratorConfig),
    /// Chat endpoint (or `CLICKCAST_LLM_URL`), optional external formatter,
    /// reply cache directory.
    External {
        endpoint: Option<String>,
        external_formatter: bool,
        cache_dir: PathBuf,
    },
}

pub fn summarize(
    campaigns: &[CampaignRecord],
    prompts: &[PromptRecord],
    spec: &PromptSpec,
    backend: &SummaryBackend,
    out: &Path,
) -> Result<Vec<SummaryRecord>> {
    let samples = all_samples(campaigns, spec.lookback, spec.horizon)?;
    let by_id: BTreeMap<&str, &PromptRecord> =
        prompts.iter().map(|p| (p.sample_id.as_str(), p)).collect();
    let mut texts = Vec::with_capacity(samples.len());
    for s in &samples {
        let id = s.sample_id();
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::Config(format!("no prompt for sample {id}")))?;
        texts.push(p.prompt.clone());
    }
    let (records, diag) = match backend {
        SummaryBackend::Mock(gen) => {
            let mock = MockSummarizer::for_generator(gen, spec.horizon);
            // Fixed timestamp keeps mock runs byte-for-byte reproducible.
            generate_summaries(&samples, &texts, &SummarySource::Mock(&mock), 0)?
        }
        SummaryBackend::External {
            endpoint,
            external_formatter,
            cache_dir,
        } => {
            let transport = Rc::new(UreqTransport::default());
            let client =
                ChatClient::from_env(endpoint.as_deref(), transport.clone())?.with_cache(cache_dir);
            let formatter = if *external_formatter {
                Some(ChatFormatter::from_env(transport)?)
            } else {
                None
            };
            let now = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs());
            let source = SummarySource::External {
                client: &client,
                formatter: formatter.as_ref().map(|f| f as &dyn ResponseFormatter),
            };
            generate_summaries(&samples, &texts, &source, now)?
        }
    };
    for w in &diag.warnings {
        log::warn!("{w}");
    }
    if diag.flagged > 0 {
        log::warn!(
            "{} of {} summaries are flagged non-compliant",
            diag.flagged,
            records.len()
        );
    }
    write_jsonl(out, &records)?;
    Ok(records)
}

/// Text used for a summary that failed to generate.
pub const MISSING_SUMMARY: &str = "no summary available";

/// `sample_id -> response_text`, with failed generations replaced by
/// [`MISSING_SUMMARY`].
pub fn summary_map(records: &[SummaryRecord]) -> BTreeMap<String, String> {
    records
        .iter()
        .map(|r| {
            let text = if r.response_text.trim().is_empty() {
                MISSING_SUMMARY
            } else {
                r.response_text.as_str()
            };
            (r.sample_id.clone(), text.to_string())
        })
        .collect()
}

pub fn load_summaries(path: &Path) -> Result<BTreeMap<String, String>> {
    Ok(summary_map(&read_jsonl::<SummaryRecord>(path)?))
}

/// Scores every response against its sample's label. The last line of the
/// output is the aggregate.
pub fn score(
    responses: &[ResponseRecord],
    labels: &[PromptRecord],
    scorer: &dyn SentimentScorer,
    out: &Path,
) -> Result<ScoreAggregate> {
    let truth: BTreeMap<&str, TrendLabel> = labels
        .iter()
        .map(|p| (p.sample_id.as_str(), p.label))
        .collect();
    let mut lines = Vec::with_capacity(responses.len() + 1);
    let (mut total, mut pm) = (0.0, 0.0);
    for r in responses {
        let label = truth
            .get(r.sample_id.as_str())
            .ok_or_else(|| Error::Config(format!("no label for sample {}", r.sample_id)))?;
        let breakdown = compute_reward(&r.response, *label, scorer);
        total += breakdown.total;
        pm += breakdown.prediction_match();
        lines.push(ScoreLine::Sample(ScoreRecord {
            sample_id: r.sample_id.clone(),
            breakdown,
        }));
    }
    let n = responses.len().max(1) as f64;
    let agg = ScoreAggregate {
        aggregate: true,
        count: responses.len(),
        mean_total: total / n,
        mean_prediction_match: pm / n,
    };
    lines.push(ScoreLine::Aggregate(agg.clone()));
    write_jsonl(out, &lines)?;
    Ok(agg)
}

/// Toy GRPO run over the first `num_prompts` prompts.
pub fn grpo_toy(
    prompts: &[PromptRecord],
    num_prompts: usize,
    config: &GrpoConfig,
    scorer: &dyn SentimentScorer,
    out: &Path,
) -> Result<Vec<IterationStats>> {
    let cases: Vec<PromptCase> = prompts
        .iter()
        .take(num_prompts)
        .map(|p| PromptCase {
            id: p.sample_id.clone(),
            prompt: p.prompt.clone(),
            truth: p.label,
        })
        .collect();
    let mut policy = toy_tag_policy(default_templates(), config.seed)?;
    let history = run_grpo(&mut policy, &cases, scorer, config)?;
    crate::report::write_grpo_history(out, &history)?;
    Ok(history)
}

pub fn build_embedder(config: &EmbedderConfig, cache_root: &Path) -> Result<Box<dyn TextEmbedder>> {
    Ok(match config.kind {
        EmbedderKind::Hashing => Box::new(HashingEmbedder::with_dim(config.seed, config.dim)),
        EmbedderKind::Http => {
            let e = HttpEmbedder::from_env(Rc::new(UreqTransport::default()), config.dim)?;
            Box::new(CachedEmbedder::new(e, cache_root))
        }
    })
}

/// Rebuilds the embedder a model was trained with.
pub fn embedder_for(
    identity: &EmbedderIdentity,
    cache_root: &Path,
) -> Result<Box<dyn TextEmbedder>> {
    if identity.name == HashingEmbedder::NAME {
        let seed = identity
            .seed
            .ok_or_else(|| Error::Config("hashing embedder identity has no seed".into()))?;
        return Ok(Box::new(HashingEmbedder::with_dim(seed, identity.dim)));
    }
    let e = build_embedder(
        &EmbedderConfig {
            kind: EmbedderKind::Http,
            seed: 0,
            dim: identity.dim,
        },
        cache_root,
    )?;
    clickcast_core::embedding::check_identity(identity, &e.identity())?;
    Ok(e)
}

/// Per-sample texts a method needs: summaries, change logs or nothing.
pub fn method_texts(
    method: Method,
    samples: &[&[ForecastSample]],
    summaries: Option<&BTreeMap<String, String>>,
) -> Result<Option<BTreeMap<String, String>>> {
    Ok(match method {
        Method::Copy | Method::Uni => None,
        Method::MultiChangelog => Some(changelog_texts(samples.iter().flat_map(|s| s.iter()))),
        Method::MultiSummary => Some(
            summaries
                .ok_or_else(|| {
                    Error::Config(format!("{} needs a summaries file", method.as_str()))
                })?
                .clone(),
        ),
    })
}

pub fn train_method(
    method: Method,
    train_samples: &[ForecastSample],
    summaries: Option<&BTreeMap<String, String>>,
    config: &TsfConfig,
    embedder: &dyn TextEmbedder,
) -> Result<FusionForecaster> {
    let mode = method
        .mode()
        .ok_or_else(|| Error::Config("the Copy baseline is not trained".into()))?;
    let texts = method_texts(method, &[train_samples], summaries)?;
    let (model, history) = train(train_samples, texts.as_ref(), mode, config, embedder)?;
    log::info!(
        "{} seed {}: final epoch loss {:.6}",
        method.as_str(),
        config.seed,
        history.epoch_loss.last().copied().unwrap_or(f64::NAN)
    );
    Ok(model)
}

/// Evaluates one method on the test set with one model per seed (`None`
/// for Copy).
pub fn evaluate_method(
    method: Method,
    seeds: &[u64],
    models: &[Option<&FusionForecaster>],
    test: &[ForecastSample],
    summaries: Option<&BTreeMap<String, String>>,
    embedder: Option<&dyn TextEmbedder>,
    fingerprint: &str,
    scale: f64,
) -> Result<RunReport> {
    let texts = method_texts(method, &[test], summaries)?;
    let mut report = RunReport {
        method,
        seeds: seeds.to_vec(),
        mae: Vec::new(),
        rmse: Vec::new(),
        scale,
        sample_count: test.len(),
        config_fingerprint: fingerprint.to_string(),
    };
    for model in models {
        let m = match model {
            None => evaluate_copy(test)?,
            Some(m) => evaluate_forecaster(m, test, texts.as_ref(), embedder)?,
        };
        report.mae.push(m.mae);
        report.rmse.push(m.rmse);
    }
    Ok(report)
}

/// File-name stem of a trained method.
pub fn method_slug(method: Method) -> &'static str {
    match method {
        Method::Copy => "copy",
        Method::Uni => "uni",
        Method::MultiChangelog => "multi-changelog",
        Method::MultiSummary => "multi-summary",
    }
}
