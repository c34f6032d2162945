//! `clickcast` command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::rc::Rc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use clickcast::config::RunConfig;
use clickcast::error::Error;
use clickcast::http::{HttpSentiment, UreqTransport, ENV_SENTIMENT_URL};
use clickcast::jsonl::{read_jsonl, PromptRecord, ResponseRecord};
use clickcast::meta::{input_fingerprint, read_meta, stage_fingerprint, write_meta, ArtifactMeta};
use clickcast::model_file::{load_model, save_model};
use clickcast::pipeline::run_pipeline;
use clickcast::report::{write_metrics, write_table};
use clickcast::stages::{self, in_stage, SummaryBackend};
use clickcast_core::eval::{format_table, Method};
use clickcast_core::forecaster::{FusionForecaster, Mode};
use clickcast_core::reward::{
    Lexicon, LexiconScorer, SentimentScorer, DEFAULT_NEGATIVE, DEFAULT_POSITIVE,
};
use clickcast_core::synth::GeneratorConfig;

#[derive(Parser)]
#[command(
    name = "clickcast",
    version,
    about = "Multimodal click forecasting toolkit"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic campaign dataset (JSONL).
    GenerateData(GenerateArgs),
    /// Render one forecasting prompt per sample.
    BuildPrompts(PromptsArgs),
    /// Produce reasoning + prediction summaries per sample.
    Summarize(SummarizeArgs),
    /// Score tagged responses with the composite reward.
    Score(ScoreArgs),
    /// Run GRPO on the canned-template toy policy.
    TrainGrpoToy(GrpoArgs),
    /// Train one forecaster on the training campaigns.
    TrainForecaster(TrainArgs),
    /// Evaluate saved forecasters on the held-out campaigns.
    Evaluate(EvaluateArgs),
    /// Train and evaluate Copy, Uni, Multi+Changelog and Multi+Summary.
    CompareBaselines(CompareArgs),
    /// Run the full workflow with stage caching.
    Pipeline(PipelineArgs),
}

#[derive(clap::Args)]
struct GenerateArgs {
    /// Run config whose `generator` section is the starting point.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    campaigns: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    #[arg(long)]
    event_rate: Option<f64>,
    #[arg(long)]
    effect_scale: Option<f64>,
    #[arg(long)]
    noise_std: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct PromptsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    lookback: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// Decimal places for click values.
    #[arg(long)]
    decimals: Option<usize>,
}

#[derive(clap::Args)]
#[command(group(clap::ArgGroup::new("backend").required(true).args(["mock", "endpoint"])))]
struct SummarizeArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Use the hermetic mock summariser.
    #[arg(long)]
    mock: bool,
    /// Chat completions URL; model and key come from CLICKCAST_LLM_MODEL
    /// and CLICKCAST_LLM_API_KEY.
    #[arg(long)]
    endpoint: Option<String>,
    /// Reformat non-compliant replies through CLICKCAST_FORMATTER_URL.
    #[arg(long)]
    external_formatter: bool,
    /// Reply cache for the external path.
    #[arg(long, default_value = ".clickcast-cache/llm")]
    cache_dir: PathBuf,
}

#[derive(clap::Args)]
struct LexiconArgs {
    /// Positive word list, one word per line.
    #[arg(long)]
    positive_lexicon: Option<PathBuf>,
    /// Negative word list, one word per line.
    #[arg(long)]
    negative_lexicon: Option<PathBuf>,
}

impl LexiconArgs {
    /// The scorer plus what identifies it in sidecars. Setting
    /// `CLICKCAST_SENTIMENT_URL` swaps in the remote classifier, with the
    /// lexicons as its fallback.
    fn load(&self) -> Result<(Box<dyn SentimentScorer>, serde_json::Value)> {
        let read = |p: &Option<PathBuf>, d: &str| -> Result<String> {
            match p {
                Some(p) => {
                    std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
                }
                None => Ok(d.to_string()),
            }
        };
        let pos = read(&self.positive_lexicon, DEFAULT_POSITIVE)?;
        let neg = read(&self.negative_lexicon, DEFAULT_NEGATIVE)?;
        let fp = clickcast::meta::sha256_hex(format!("{pos}\0{neg}").as_bytes());
        let lexicon = LexiconScorer::new(Lexicon::parse(&pos), Lexicon::parse(&neg));
        match std::env::var(ENV_SENTIMENT_URL) {
            Ok(url) => {
                let remote = HttpSentiment::from_env(Rc::new(UreqTransport::default()), lexicon)?;
                Ok((
                    Box::new(remote),
                    json!({"lexicons": fp, "sentiment_url": url}),
                ))
            }
            Err(_) => Ok((Box::new(lexicon), json!({"lexicons": fp}))),
        }
    }
}

#[derive(clap::Args)]
struct ScoreArgs {
    /// JSONL of {sample_id, response}; summary files work as is.
    #[arg(long)]
    responses: PathBuf,
    /// JSONL with sample_id and label, e.g. the prompts file.
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

#[derive(clap::Args)]
struct GrpoArgs {
    #[arg(long)]
    prompts: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 20)]
    num_prompts: usize,
    #[arg(long)]
    group_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    lexicons: LexiconArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uni,
    Multi,
}

#[derive(Clone, Copy, ValueEnum)]
enum TextSource {
    Summary,
    Changelog,
}

/// Forecaster settings shared by the training subcommands.
#[derive(clap::Args)]
struct TsfArgs {
    /// Run config whose `tsf`, `embedder` and `eval` sections are the
    /// starting point.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Number of trailing campaigns held out for testing.
    #[arg(long)]
    test_campaigns: Option<usize>,
}

impl TsfArgs {
    fn run_config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.alpha {
            c.tsf.alpha = v;
        }
        if let Some(v) = self.epochs {
            c.tsf.epochs = v;
        }
        if let Some(v) = self.learning_rate {
            c.tsf.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            c.tsf.batch_size = v;
        }
        if let Some(v) = self.test_campaigns {
            c.eval.test_campaigns = v;
        }
        c.tsf.validate()?;
        Ok(c)
    }
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    summaries: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "multi")]
    mode: ModeArg,
    /// Text paired with each sample in multi mode.
    #[arg(long, value_enum, default_value = "summary")]
    text_source: TextSource,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    tsf: TsfArgs,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Model file; `{seed}` in the path is replaced by each seed.
    #[arg(long)]
    model: String,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    summaries: Option<PathBuf>,
    /// Evaluate seeds 0..N.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 2)]
    test_campaigns: usize,
    #[arg(long, default_value_t = clickcast_core::eval::DEFAULT_SCALE)]
    scale: f64,
    /// Per-seed metrics CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CompareArgs {
    #[arg(long)]
    data: PathBuf,
    /// Needed for Multi+Summary.
    #[arg(long)]
    summaries: Option<PathBuf>,
    /// Table of mean and std per method.
    #[arg(long)]
    out: PathBuf,
    /// Per-seed metrics CSV.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Train with seeds 0..N.
    #[arg(long)]
    seeds: Option<u64>,
    /// Subset of Copy, Uni, Multi+Changelog, Multi+Summary.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    tsf: TsfArgs,
}

#[derive(clap::Args)]
struct PipelineArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; overrides `paths.out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    effect_scale: Option<f64>,
    #[arg(long)]
    campaigns: Option<usize>,
    #[arg(long)]
    days: Option<usize>,
    /// Use the external summariser instead of the mock.
    #[arg(long)]
    endpoint: Option<String>,
}

/// Writes a complete sidecar for a subcommand's output.
fn finish<T: Serialize>(
    stage: &str,
    artifact: &Path,
    config: &T,
    inputs: BTreeMap<String, String>,
) -> Result<String> {
    let fingerprint = stage_fingerprint(stage, config, &inputs)?;
    let config = serde_json::to_value(config)?;
    write_meta(
        artifact,
        &ArtifactMeta {
            stage: stage.into(),
            fingerprint: fingerprint.clone(),
            config,
            inputs,
            complete: true,
        },
    )?;
    Ok(fingerprint)
}

fn fingerprints(pairs: &[(&str, &Path)]) -> Result<BTreeMap<String, String>> {
    pairs
        .iter()
        .map(|(k, p)| Ok((k.to_string(), in_stage("ingest", input_fingerprint(p))?)))
        .collect()
}

/// Generator settings recorded in a dataset's sidecar, or the run defaults.
fn data_generator(data: &Path) -> Result<GeneratorConfig> {
    if let Some(meta) = read_meta(data)? {
        if meta.stage == "generate" {
            return Ok(serde_json::from_value(meta.config)?);
        }
    }
    log::warn!(
        "{} has no generator metadata; assuming default generator settings",
        data.display()
    );
    Ok(RunConfig::default().generator)
}

fn generate_data(a: GenerateArgs) -> Result<()> {
    let mut g = match &a.config {
        Some(p) => RunConfig::load(p)?.resolved()?.generator,
        None => RunConfig::default().generator,
    };
    if let Some(v) = a.campaigns {
        g.num_campaigns = v;
    }
    if let Some(v) = a.days {
        g.days_per_campaign = v;
    }
    if let Some(v) = a.event_rate {
        g.event_rate = v;
    }
    if let Some(v) = a.effect_scale {
        g.effect_scale = v;
    }
    if let Some(v) = a.noise_std {
        g.noise_std = v;
    }
    if let Some(v) = a.seed {
        g.base_seed = v;
    }
    let campaigns = in_stage("generate", stages::generate(&g, &a.out))?;
    finish("generate", &a.out, &g, BTreeMap::new())?;
    println!("wrote {} campaigns to {}", campaigns.len(), a.out.display());
    Ok(())
}

fn build_prompts(a: PromptsArgs) -> Result<()> {
    let g = data_generator(&a.data)?;
    let mut spec = RunConfig::default().prompt;
    if let Some(v) = a.lookback {
        spec.lookback = v;
    }
    if let Some(v) = a.horizon {
        spec.horizon = v;
    }
    if let Some(v) = a.decimals {
        spec.number_format = v;
    }
    let campaigns = stages::ingest(&a.data, g.rolling_window)?;
    let recs = in_stage("prompts", stages::build_prompts(&campaigns, &spec, &a.out))?;
    let cfg = json!({"prompt": spec, "rolling_window": g.rolling_window});
    finish("prompts", &a.out, &cfg, fingerprints(&[("data", &a.data)])?)?;
    println!("wrote {} prompts to {}", recs.len(), a.out.display());
    Ok(())
}

fn prompt_spec_of(prompts: &Path) -> Result<clickcast_core::prompt::PromptSpec> {
    if let Some(meta) = read_meta(prompts)? {
        if let Some(p) = meta.config.get("prompt") {
            return Ok(serde_json::from_value(p.clone())?);
        }
    }
    Ok(RunConfig::default().prompt)
}

fn summarize(a: SummarizeArgs) -> Result<()> {
    let g = data_generator(&a.data)?;
    let spec = prompt_spec_of(&a.prompts)?;
    let campaigns = stages::ingest(&a.data, g.rolling_window)?;
    let prompts: Vec<PromptRecord> = in_stage("ingest", read_jsonl(&a.prompts))?;
    let (backend, cfg) = if a.mock {
        (
            SummaryBackend::Mock(g.clone()),
            json!({"mock": true, "generator": g, "prompt": spec}),
        )
    } else {
        (
            SummaryBackend::External {
                endpoint: a.endpoint.clone(),
                external_formatter: a.external_formatter,
                cache_dir: a.cache_dir.clone(),
            },
            json!({"mock": false, "endpoint": a.endpoint, "external_formatter": a.external_formatter,
                   "prompt": spec, "rolling_window": g.rolling_window}),
        )
    };
    let recs = in_stage(
        "summarize",
        stages::summarize(&campaigns, &prompts, &spec, &backend, &a.out),
    )?;
    finish(
        "summarize",
        &a.out,
        &cfg,
        fingerprints(&[("data", &a.data), ("prompts", &a.prompts)])?,
    )?;
    let flagged = recs.iter().filter(|r| !r.compliant).count();
    println!(
        "wrote {} summaries ({flagged} flagged) to {}",
        recs.len(),
        a.out.display()
    );
    Ok(())
}

fn score(a: ScoreArgs) -> Result<()> {
    let (scorer, scorer_id) = a.lexicons.load()?;
    let responses: Vec<ResponseRecord> = in_stage("ingest", read_jsonl(&a.responses))?;
    let labels: Vec<PromptRecord> = in_stage("ingest", read_jsonl(&a.labels))?;
    let agg = in_stage(
        "score",
        stages::score(&responses, &labels, scorer.as_ref(), &a.out),
    )?;
    finish(
        "score",
        &a.out,
        &json!({"scorer": scorer_id}),
        fingerprints(&[("summaries", &a.responses), ("prompts", &a.labels)])?,
    )?;
    println!(
        "scored {} responses: mean reward {:.4}, mean prediction match {:.4}",
        agg.count, agg.mean_total, agg.mean_prediction_match
    );
    Ok(())
}

fn train_grpo_toy(a: GrpoArgs) -> Result<()> {
    let (scorer, scorer_id) = a.lexicons.load()?;
    let prompts: Vec<PromptRecord> = in_stage("ingest", read_jsonl(&a.prompts))?;
    let mut grpo = clickcast::config::GrpoToyConfig::default();
    grpo.grpo.seed = a.seed;
    grpo.grpo.iterations = a.iterations;
    grpo.num_prompts = a.num_prompts;
    if let Some(v) = a.group_size {
        grpo.grpo.group_size = v;
    }
    if let Some(v) = a.learning_rate {
        grpo.grpo.learning_rate = v;
    }
    let history = in_stage(
        "grpo",
        stages::grpo_toy(
            &prompts,
            grpo.num_prompts,
            &grpo.grpo,
            scorer.as_ref(),
            &a.out,
        ),
    )?;
    finish(
        "grpo",
        &a.out,
        &json!({"grpo": grpo, "scorer": scorer_id}),
        fingerprints(&[("prompts", &a.prompts)])?,
    )?;
    if let (Some(first), Some(last)) = (history.first(), history.last()) {
        println!(
            "mean reward {:.4} -> {:.4} over {} iterations",
            first.mean_reward,
            last.mean_reward,
            history.len()
        );
    }
    Ok(())
}

fn method_of(mode: ModeArg, text: TextSource) -> Method {
    match (mode, text) {
        (ModeArg::Uni, _) => Method::Uni,
        (ModeArg::Multi, TextSource::Summary) => Method::MultiSummary,
        (ModeArg::Multi, TextSource::Changelog) => Method::MultiChangelog,
    }
}

fn train_forecaster(a: TrainArgs) -> Result<()> {
    let rc = a.tsf.run_config()?;
    let method = method_of(a.mode, a.text_source);
    let g = data_generator(&a.data)?;
    let campaigns = stages::ingest(&a.data, g.rolling_window)?;
    let (l, h) = (rc.tsf.lookback, rc.tsf.horizon);
    let (train, _) = in_stage(
        "train",
        stages::split_samples(&campaigns, rc.eval.test_campaigns, l, h),
    )?;
    let mut inputs = fingerprints(&[("data", &a.data)])?;
    let summaries = match (&a.summaries, method) {
        (Some(p), Method::MultiSummary) => {
            inputs.insert(
                "summaries".into(),
                in_stage("ingest", input_fingerprint(p))?,
            );
            Some(in_stage("ingest", stages::load_summaries(p))?)
        }
        (None, Method::MultiSummary) => bail!("--summaries is required with --text-source summary"),
        _ => None,
    };
    let cache = a
        .out
        .parent()
        .unwrap_or(Path::new("."))
        .join(".clickcast-cache/embeddings");
    let embedder = stages::build_embedder(&rc.embedder, &cache)?;
    let tsf = clickcast_core::forecaster::TsfConfig {
        seed: a.seed,
        ..rc.tsf.clone()
    };
    let cfg = json!({"tsf": tsf, "embedder": rc.embedder, "method": method, "test_campaigns": rc.eval.test_campaigns});
    let fp = stage_fingerprint("train", &cfg, &inputs)?;
    let model = in_stage(
        "train",
        stages::train_method(method, &train, summaries.as_ref(), &tsf, embedder.as_ref()),
    )?;
    in_stage(
        "train",
        save_model(&a.out, &model, method.as_str(), &fp, inputs.clone()),
    )?;
    finish("train", &a.out, &cfg, inputs)?;
    println!(
        "trained {} ({} parameters) -> {}",
        method.as_str(),
        model.num_params(),
        a.out.display()
    );
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    if a.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if a.seeds > 1 && !a.model.contains("{seed}") {
        bail!(
            "--seeds {} needs a {{seed}} placeholder in --model",
            a.seeds
        );
    }
    let g = data_generator(&a.data)?;
    let campaigns = stages::ingest(&a.data, g.rolling_window)?;
    let data_fp = in_stage("ingest", input_fingerprint(&a.data))?;
    let summaries_fp = match &a.summaries {
        Some(p) => Some(in_stage("ingest", input_fingerprint(p))?),
        None => None,
    };
    let seeds: Vec<u64> = (0..a.seeds).collect();
    let mut models: Vec<FusionForecaster> = Vec::new();
    let mut method: Option<Method> = None;
    for seed in &seeds {
        let path = PathBuf::from(a.model.replace("{seed}", &seed.to_string()));
        let (model, header) = in_stage("evaluate", load_model(&path))?;
        let m = Method::parse(&header.method)
            .with_context(|| format!("unknown method {}", header.method))?;
        if method.is_some_and(|prev| prev != m) {
            bail!(
                "{} holds a {} model but earlier seeds were {}",
                path.display(),
                m.as_str(),
                method.unwrap().as_str()
            );
        }
        method = Some(m);
        for (name, found) in [
            ("data", Some(&data_fp)),
            ("summaries", summaries_fp.as_ref()),
        ] {
            if let (Some(expected), Some(found)) = (header.inputs.get(name), found) {
                if expected != found {
                    return Err(Error::FingerprintMismatch {
                        what: format!("{name} for {}", path.display()),
                        expected: expected.clone(),
                        found: found.clone(),
                    }
                    .into());
                }
            }
        }
        models.push(model);
    }
    let method = method.expect("at least one seed");
    let (l, h) = (models[0].config().lookback, models[0].config().horizon);
    let (_, test) = in_stage(
        "evaluate",
        stages::split_samples(&campaigns, a.test_campaigns, l, h),
    )?;
    let summaries = match &a.summaries {
        Some(p) => Some(in_stage("ingest", stages::load_summaries(p))?),
        None => None,
    };
    let cache = a
        .out
        .parent()
        .unwrap_or(Path::new("."))
        .join(".clickcast-cache/embeddings");
    let embedder = match models[0].embedder() {
        Some(id) if models[0].mode() == Mode::Multi => Some(stages::embedder_for(id, &cache)?),
        _ => None,
    };
    let cfg = json!({"model": a.model, "seeds": seeds, "test_campaigns": a.test_campaigns, "scale": a.scale});
    let mut inputs = BTreeMap::from([("data".to_string(), data_fp)]);
    if let Some(s) = summaries_fp {
        inputs.insert("summaries".into(), s);
    }
    let fp = stage_fingerprint("evaluate", &cfg, &inputs)?;
    let refs: Vec<Option<&FusionForecaster>> = models.iter().map(Some).collect();
    let report = in_stage(
        "evaluate",
        stages::evaluate_method(
            method,
            &seeds,
            &refs,
            &test,
            summaries.as_ref(),
            embedder.as_deref(),
            &fp,
            a.scale,
        ),
    )?;
    in_stage(
        "evaluate",
        write_metrics(&a.out, std::slice::from_ref(&report)),
    )?;
    finish("evaluate", &a.out, &cfg, inputs)?;
    print!("{}", format_table(&[report]));
    Ok(())
}

fn compare_baselines(a: CompareArgs) -> Result<()> {
    let mut rc = a.tsf.run_config()?;
    if let Some(n) = a.seeds {
        rc.eval.seeds = (0..n).collect();
    }
    if !a.methods.is_empty() {
        rc.eval.methods = a
            .methods
            .iter()
            .map(|m| Method::parse(m).with_context(|| format!("unknown method {m}")))
            .collect::<Result<_>>()?;
    }
    let g = data_generator(&a.data)?;
    let campaigns = stages::ingest(&a.data, g.rolling_window)?;
    let (l, h) = (rc.tsf.lookback, rc.tsf.horizon);
    let (train, test) = in_stage(
        "train",
        stages::split_samples(&campaigns, rc.eval.test_campaigns, l, h),
    )?;
    let mut inputs = fingerprints(&[("data", &a.data)])?;
    let summaries = match &a.summaries {
        Some(p) => {
            inputs.insert(
                "summaries".into(),
                in_stage("ingest", input_fingerprint(p))?,
            );
            Some(in_stage("ingest", stages::load_summaries(p))?)
        }
        None if rc.eval.methods.contains(&Method::MultiSummary) => {
            bail!("Multi+Summary needs --summaries (or leave it out with --methods)")
        }
        None => None,
    };
    let cache = a
        .out
        .parent()
        .unwrap_or(Path::new("."))
        .join(".clickcast-cache/embeddings");
    let embedder = stages::build_embedder(&rc.embedder, &cache)?;
    let cfg = json!({"tsf": rc.tsf, "embedder": rc.embedder, "eval": rc.eval});
    let fp = stage_fingerprint("compare", &cfg, &inputs)?;
    let mut reports = Vec::new();
    for &method in &rc.eval.methods {
        let mut models = Vec::new();
        if method.mode().is_some() {
            for &seed in &rc.eval.seeds {
                let c = clickcast_core::forecaster::TsfConfig {
                    seed,
                    ..rc.tsf.clone()
                };
                log::info!("training {} seed {seed}", method.as_str());
                models.push(in_stage(
                    "train",
                    stages::train_method(method, &train, summaries.as_ref(), &c, embedder.as_ref()),
                )?);
            }
        }
        let refs: Vec<Option<&FusionForecaster>> = if models.is_empty() {
            rc.eval.seeds.iter().map(|_| None).collect()
        } else {
            models.iter().map(Some).collect()
        };
        let report = in_stage(
            "evaluate",
            stages::evaluate_method(
                method,
                &rc.eval.seeds,
                &refs,
                &test,
                summaries.as_ref(),
                Some(embedder.as_ref()),
                &fp,
                rc.eval.scale,
            ),
        )?;
        reports.push(report);
    }
    in_stage("evaluate", write_table(&a.out, &reports))?;
    finish("compare", &a.out, &cfg, inputs.clone())?;
    if let Some(m) = &a.metrics {
        in_stage("evaluate", write_metrics(m, &reports))?;
        finish("compare", m, &cfg, inputs)?;
    }
    print!("{}", format_table(&reports));
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let mut c = match &a.config {
        Some(p) => in_stage("config", RunConfig::load(p))?,
        None => RunConfig::default(),
    };
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = a.alpha {
        c.tsf.alpha = v;
    }
    if let Some(v) = a.epochs {
        c.tsf.epochs = v;
    }
    if let Some(v) = a.effect_scale {
        c.generator.effect_scale = v;
    }
    if let Some(v) = a.campaigns {
        c.generator.num_campaigns = v;
    }
    if let Some(v) = a.days {
        c.generator.days_per_campaign = v;
    }
    if let Some(e) = a.endpoint {
        c.summarizer.mock = false;
        c.summarizer.endpoint = Some(e);
    }
    if let Some(o) = a.out {
        c.paths.out_dir = o;
    }
    let report = run_pipeline(&c, None)?;
    println!("executed: {}", report.executed.join(", "));
    println!("cached:   {}", report.cached.join(", "));
    let table = c.paths.out_dir.join(clickcast::pipeline::TABLE_TXT);
    if let Ok(t) = std::fs::read_to_string(&table) {
        print!("{t}");
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::GenerateData(a) => generate_data(a),
        Command::BuildPrompts(a) => build_prompts(a),
        Command::Summarize(a) => summarize(a),
        Command::Score(a) => score(a),
        Command::TrainGrpoToy(a) => train_grpo_toy(a),
        Command::TrainForecaster(a) => train_forecaster(a),
        Command::Evaluate(a) => evaluate(a),
        Command::CompareBaselines(a) => compare_baselines(a),
        Command::Pipeline(a) => pipeline(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
