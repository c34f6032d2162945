//! End-to-end acceptance checks.
//!
//! Runs every criterion, prints one `PASS`/`FAIL` line each and exits
//! non-zero if any failed. Built with `harness = false` so the lines are
//! always visible.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Deserialize;

use clickcast::config::RunConfig;
use clickcast::pipeline::{run_pipeline, METRICS, TABLE};
use clickcast::report::{read_csv, MetricRow};
use clickcast_core::data::{
    make_dataset_samples, CampaignRecord, ForecastSample, RawCampaign, TrendLabel,
};
use clickcast_core::embedding::{EmbedderIdentity, HashingEmbedder, TextEmbedding};
use clickcast_core::eval::{evaluate_copy, score_predictions, Comparison, Method, RunReport};
use clickcast_core::forecaster::{FusionForecaster, Mode, TsfConfig};
use clickcast_core::grpo::{
    default_templates, group_advantages, run_grpo, toy_tag_policy, GrpoConfig, PromptCase,
};
use clickcast_core::prompt::{build_prompt, PromptSpec};
use clickcast_core::reward::{
    compute_reward, LexiconScorer, Sentiment, SentimentResult, SentimentScorer,
};
use clickcast_core::rng::{self, StreamRng};
use clickcast_core::summarize::MockSummarizer;
use clickcast_core::synth::{effect_variance_share, generate_dataset, GeneratorConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- reward

#[derive(Deserialize)]
struct GoldenCase {
    name: String,
    response: String,
    truth: TrendLabel,
    sentiment: Sentiment,
    confidence: f64,
    format_score: f64,
    prediction_indicator: f64,
    alignment_term: f64,
    total: f64,
}

/// Returns the same sentiment for every text.
struct FixedSentiment(SentimentResult);

impl SentimentScorer for FixedSentiment {
    fn score(&self, _text: &str) -> SentimentResult {
        self.0
    }
}

fn reward_golden() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/reward_golden.json");
    let cases: Vec<GoldenCase> =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    let mut confidences = Vec::new();
    for c in &cases {
        let stub = FixedSentiment(SentimentResult {
            label: c.sentiment,
            confidence: c.confidence,
        });
        let b = compute_reward(&c.response, c.truth, &stub);
        let errs = [
            (b.format_score - c.format_score).abs(),
            (b.prediction_indicator - c.prediction_indicator).abs(),
            (b.alignment_term - c.alignment_term).abs(),
            (b.total - c.total).abs(),
        ];
        let e = errs.iter().copied().fold(0.0, f64::max);
        worst = worst.max(e);
        if e > 1e-9 {
            failures.push(format!("{} (got {b:?})", c.name));
        }
        if !confidences.contains(&c.confidence) {
            confidences.push(c.confidence);
        }
    }
    let formats: Vec<f64> = cases.iter().map(|c| c.format_score).collect();
    let covered = cases.len() >= 20
        && [0.0, -0.25, -0.5].iter().all(|f| formats.contains(f))
        && [TrendLabel::Increase, TrendLabel::Decrease]
            .iter()
            .all(|t| cases.iter().any(|c| c.truth == *t))
        && [Sentiment::Positive, Sentiment::Negative, Sentiment::Neutral]
            .iter()
            .all(|s| cases.iter().any(|c| c.sentiment == *s))
        && [0.0, 0.6, 1.0].iter().all(|c| confidences.contains(c));
    outcome(
        failures.is_empty() && covered,
        format!(
            "{} cases, max abs error {worst:.1e}, coverage {covered}, failures {failures:?}",
            cases.len()
        ),
    )
}

const FRAGMENTS: &[&str] = &[
    "<Reasoning>",
    "</Reasoning>",
    "<Prediction>",
    "</Prediction>",
    "<reasoning>",
    "</PREDICTION>",
    "Increase",
    "Decrease",
    "increase",
    "DECREASE",
    "maybe",
    "clicks",
    "growth",
    "decline",
    "drop",
    "strong",
    "weak",
    "recovery",
    "loss",
    "keyword",
    " ",
    "  ",
    "\n",
    "<",
    ">",
    "/",
    "é",
    "↓",
    ".",
];

fn random_response(rng: &mut StreamRng) -> String {
    let n = rng::below(rng, 24) as usize;
    let mut s = String::new();
    for _ in 0..n {
        if rng::uniform(rng) < 0.15 {
            s.push(char::from(b' ' + rng::below(rng, 95) as u8));
        } else {
            s.push_str(FRAGMENTS[rng::below(rng, FRAGMENTS.len() as u64) as usize]);
        }
    }
    s
}

fn reward_fuzz() -> Outcome {
    let scorer = LexiconScorer::default();
    let mut rng = rng::stream_rng(2024, &[1]);
    let mut bad = Vec::new();
    let mut seen_formats = [0usize; 3];
    for i in 0..10_000 {
        let r = random_response(&mut rng);
        let truth = if i % 2 == 0 {
            TrendLabel::Increase
        } else {
            TrendLabel::Decrease
        };
        let b = compute_reward(&r, truth, &scorer);
        let fi = [0.0, -0.25, -0.5].iter().position(|f| *f == b.format_score);
        if let Some(fi) = fi {
            seen_formats[fi] += 1;
        }
        let ok = (-0.5..=2.0).contains(&b.total)
            && fi.is_some()
            && b.total == b.format_score + b.prediction_indicator + b.alignment_term;
        if !ok && bad.len() < 3 {
            bad.push(format!("{r:?} -> {b:?}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!("10000 strings, format score counts {seen_formats:?}, violations {bad:?}"),
    )
}

// ---------------------------------------------------------------- grpo

/// Standardisation written out independently: two-pass mean and population
/// variance, zeros for a constant group.
fn oracle_advantages(r: &[f64], eps: f64) -> Vec<f64> {
    let first = r[0];
    if r.iter().all(|v| *v == first) {
        return vec![0.0; r.len()];
    }
    let mut mean = 0.0;
    for v in r {
        mean += v;
    }
    mean /= r.len() as f64;
    let mut ss = 0.0;
    for v in r {
        ss += (v - mean).powi(2);
    }
    let sd = (ss / r.len() as f64).sqrt();
    r.iter().map(|v| (v - mean) / (sd + eps)).collect()
}

fn population_sd(r: &[f64]) -> f64 {
    let m = r.iter().sum::<f64>() / r.len() as f64;
    (r.iter().map(|v| (v - m).powi(2)).sum::<f64>() / r.len() as f64).sqrt()
}

fn grpo_oracle() -> Outcome {
    let eps = clickcast_core::grpo::DEFAULT_EPSILON;
    let levels = [-0.5, -0.25, 0.0, 0.35, 0.6, 0.75, 1.0, 1.6, 2.0];
    let mut rng = rng::stream_rng(2024, &[3]);
    let (mut max_err, mut max_sum, mut max_scale) = (0.0f64, 0.0f64, 0.0f64);
    let mut constant_groups = 0;
    for _ in 0..1000 {
        let k = 2 + rng::below(&mut rng, 15) as usize;
        let style = rng::uniform(&mut rng);
        let r: Vec<f64> = if style < 0.1 {
            constant_groups += 1;
            vec![levels[rng::below(&mut rng, levels.len() as u64) as usize]; k]
        } else if style < 0.55 {
            (0..k)
                .map(|_| levels[rng::below(&mut rng, levels.len() as u64) as usize])
                .collect()
        } else {
            (0..k)
                .map(|_| rng::uniform_range(&mut rng, -0.5, 2.0))
                .collect()
        };
        let a = group_advantages(&r, eps).unwrap();
        let o = oracle_advantages(&r, eps);
        for (x, y) in a.iter().zip(&o) {
            max_err = max_err.max((x - y).abs());
        }
        max_sum = max_sum.max(a.iter().sum::<f64>().abs());
        // Scaling rewards changes advantages only through eps / sd.
        if population_sd(&r) > 0.05 {
            let c = rng::uniform_range(&mut rng, 0.5, 4.0);
            let scaled: Vec<f64> = r.iter().map(|v| v * c).collect();
            let b = group_advantages(&scaled, eps).unwrap();
            for (x, y) in a.iter().zip(&b) {
                max_scale = max_scale.max((x - y).abs());
            }
        }
    }
    outcome(
        max_err <= 1e-9 && max_sum <= 1e-9 && max_scale <= 1e-5,
        format!(
            "1000 groups ({constant_groups} constant): max |a - oracle| {max_err:.1e}, max |sum a| {max_sum:.1e}, max scale drift {max_scale:.1e}"
        ),
    )
}

fn toy_prompts() -> Vec<PromptCase> {
    let g = GeneratorConfig {
        num_campaigns: 4,
        days_per_campaign: 80,
        ..RunConfig::default().generator
    };
    let campaigns = generate_dataset(&g).unwrap();
    let spec = PromptSpec::default();
    let samples = make_dataset_samples(&campaigns, spec.lookback, spec.horizon)
        .unwrap()
        .samples;
    let step = samples.len() / 20;
    (0..20)
        .map(|i| {
            let s = &samples[i * step];
            PromptCase {
                id: s.sample_id(),
                prompt: build_prompt(s, &spec).unwrap(),
                truth: s.label,
            }
        })
        .collect()
}

fn grpo_toy() -> Outcome {
    let scorer = LexiconScorer::default();
    let prompts = toy_prompts();
    let templates = default_templates();
    let (mut initial, mut best) = (0.0, 0.0);
    for p in &prompts {
        let rewards: Vec<f64> = templates
            .iter()
            .map(|t| compute_reward(t, p.truth, &scorer).total)
            .collect();
        initial += rewards.iter().sum::<f64>() / rewards.len() as f64;
        best += rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    initial /= prompts.len() as f64;
    best /= prompts.len() as f64;
    let target = initial + 0.5 * (best - initial);
    let mut finals = Vec::new();
    for seed in 0..3 {
        let config = GrpoConfig {
            iterations: 200,
            seed,
            ..GrpoConfig::default()
        };
        let mut policy = toy_tag_policy(templates.clone(), seed).unwrap();
        let history = run_grpo(&mut policy, &prompts, &scorer, &config).unwrap();
        let tail = &history[history.len() - 10..];
        finals.push(tail.iter().map(|s| s.mean_reward).sum::<f64>() / tail.len() as f64);
    }
    let pass = finals.iter().all(|f| *f >= target);
    outcome(
        pass,
        format!(
            "initial {initial:.4}, max {best:.4}, target {target:.4}, last-10 mean per seed {}",
            finals
                .iter()
                .map(|f| format!("{f:.4}"))
                .collect::<Vec<_>>()
                .join(" / ")
        ),
    )
}

// ---------------------------------------------------------------- forecaster

fn random_embedding(rng: &mut StreamRng, dim: usize) -> TextEmbedding {
    TextEmbedding {
        vector: (0..dim)
            .map(|_| rng::uniform_range(rng, -1.0, 1.0) as f32)
            .collect(),
        source_text_hash: String::new(),
    }
}

fn identity(dim: usize) -> EmbedderIdentity {
    EmbedderIdentity {
        name: "acceptance".into(),
        version: "0".into(),
        seed: None,
        dim,
    }
}

fn random_model(config: TsfConfig, rng: &mut StreamRng, spread: f64) -> FusionForecaster {
    let n = FusionForecaster::new(
        config.clone(),
        Mode::Multi,
        Some(identity(config.embed_dim)),
    )
    .unwrap()
    .num_params();
    let params = (0..n)
        .map(|_| rng::uniform_range(rng, -spread, spread))
        .collect();
    FusionForecaster::from_parts(
        config.clone(),
        Mode::Multi,
        Some(identity(config.embed_dim)),
        None,
        params,
    )
    .unwrap()
}

fn fusion_identity() -> Outcome {
    let mut rng = rng::stream_rng(2024, &[5]);
    let config = TsfConfig::default();
    let mut model = random_model(config.clone(), &mut rng, 0.1);
    let (mut exact, mut worst, mut text_mag) = (true, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let x: Vec<f64> = (0..config.lookback)
            .map(|_| rng::uniform(&mut rng))
            .collect();
        let e = random_embedding(&mut rng, config.embed_dim);
        let tsf = model.numeric_branch(&x).unwrap();
        let mlp = model.text_branch(&e).unwrap();
        text_mag = text_mag.max(mlp.iter().fold(0.0, |m, v| m.max(v.abs())));
        model.set_alpha(0.0).unwrap();
        exact &= model.predict(&x, Some(&e)).unwrap() == tsf;
        model.set_alpha(0.5).unwrap();
        let fused = model.predict(&x, Some(&e)).unwrap();
        for i in 0..config.horizon {
            worst = worst.max((fused[i] - (tsf[i] + 0.5 * mlp[i])).abs());
        }
    }
    outcome(
        exact && worst <= 1e-6 && text_mag > 1e-3,
        format!(
            "alpha=0 exact: {exact}; alpha=0.5 max deviation {worst:.1e}; max |mlp| {text_mag:.3}"
        ),
    )
}

fn mse_loss(
    model: &FusionForecaster,
    xs: &[Vec<f64>],
    es: &[TextEmbedding],
    ys: &[Vec<f64>],
) -> f64 {
    let mut total = 0.0;
    let mut count = 0.0;
    for ((x, e), y) in xs.iter().zip(es).zip(ys) {
        let tsf = model.numeric_branch(x).unwrap();
        let mlp = model.text_branch(e).unwrap();
        for i in 0..y.len() {
            let p = tsf[i] + model.alpha() * mlp[i];
            total += (p - y[i]).powi(2);
            count += 1.0;
        }
    }
    total / count
}

fn gradient_check() -> Outcome {
    let config = TsfConfig {
        layers: 1,
        heads: 2,
        hidden: 2,
        ff_hidden: 2,
        lookback: 3,
        horizon: 2,
        embed_dim: 4,
        mlp_hidden: vec![3],
        ..TsfConfig::default()
    };
    let mut rng = rng::stream_rng(2024, &[6]);
    let model = random_model(config.clone(), &mut rng, 0.9);
    let n = model.num_params();
    let xs: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3).map(|_| rng::uniform(&mut rng)).collect())
        .collect();
    let es: Vec<TextEmbedding> = (0..3).map(|_| random_embedding(&mut rng, 4)).collect();
    let ys: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..2).map(|_| rng::uniform(&mut rng)).collect())
        .collect();
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let er: Vec<&TextEmbedding> = es.iter().collect();
    let yr: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let (_, grad) = model.loss_and_gradient(&xr, Some(&er), &yr).unwrap();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut nonzero = 0;
    for i in 0..n {
        let perturbed = |delta: f64| {
            let mut p = model.params().to_vec();
            p[i] += delta;
            let m = FusionForecaster::from_parts(
                config.clone(),
                Mode::Multi,
                Some(identity(4)),
                None,
                p,
            )
            .unwrap();
            mse_loss(&m, &xs, &es, &ys)
        };
        let numeric = (perturbed(h) - perturbed(-h)) / (2.0 * h);
        let rel = (numeric - grad[i]).abs() / numeric.abs().max(grad[i].abs()).max(1e-7);
        worst = worst.max(rel);
        if grad[i].abs() > 1e-6 {
            nonzero += 1;
        }
    }
    outcome(
        n < 100 && worst < 1e-4 && nonzero > n / 2,
        format!(
            "{n} parameters ({nonzero} with non-zero gradient), max relative error {worst:.2e}"
        ),
    )
}

// ---------------------------------------------------------------- evaluation

fn mock_summaries(
    samples: &[&ForecastSample],
    g: &GeneratorConfig,
    h: usize,
) -> BTreeMap<String, String> {
    let mock = MockSummarizer::for_generator(g, h);
    samples
        .iter()
        .map(|s| (s.sample_id(), mock.respond(s)))
        .collect()
}

fn split(
    campaigns: &[CampaignRecord],
    test: usize,
    l: usize,
    h: usize,
) -> (Vec<ForecastSample>, Vec<ForecastSample>) {
    let cut = campaigns.len() - test;
    (
        make_dataset_samples(&campaigns[..cut], l, h)
            .unwrap()
            .samples,
        make_dataset_samples(&campaigns[cut..], l, h)
            .unwrap()
            .samples,
    )
}

fn ordering(reports: &mut Vec<RunReport>) -> Outcome {
    let g = RunConfig::default().generator;
    let share = effect_variance_share(&g).unwrap();
    let campaigns = generate_dataset(&g).unwrap();
    let config = TsfConfig::default();
    let (train, test) = split(&campaigns, 2, config.lookback, config.horizon);
    let all: Vec<&ForecastSample> = train.iter().chain(&test).collect();
    let summaries = mock_summaries(&all, &g, config.horizon);
    let embedder = HashingEmbedder::default();
    let cmp = Comparison {
        train: &train,
        test: &test,
        summaries: Some(&summaries),
        embedder: &embedder,
        config,
        seeds: vec![0, 1, 2],
        config_fingerprint: "acceptance".into(),
    };
    let mut mae = BTreeMap::new();
    let mut lines = Vec::new();
    for method in [Method::Copy, Method::Uni, Method::MultiSummary] {
        let r = cmp.run(method).unwrap();
        mae.insert(method, r.mean_mae());
        lines.push(format!(
            "{} {:.5} [{}]",
            method.as_str(),
            r.mean_mae(),
            r.mae
                .iter()
                .map(|v| format!("{v:.5}"))
                .collect::<Vec<_>>()
                .join(" ")
        ));
        reports.push(r);
    }
    let (copy, uni, multi) = (
        mae[&Method::Copy],
        mae[&Method::Uni],
        mae[&Method::MultiSummary],
    );
    let gain = (uni - multi) / uni;
    outcome(
        share >= 0.15 && multi < uni && uni < copy && gain >= 0.02,
        format!(
            "event variance share {share:.3}; {} train / {} test samples; MAE {}; Multi vs Uni {:.2}%",
            train.len(),
            test.len(),
            lines.join(", "),
            gain * 100.0
        ),
    )
}

fn copy_oracle() -> Outcome {
    let g = RunConfig::default().generator;
    let campaigns = generate_dataset(&g).unwrap();
    let (l, h) = (14, 5);
    let (_, test) = split(&campaigns, 2, l, h);
    let metrics = evaluate_copy(&test).unwrap();
    // Brute force straight from the campaign series.
    let (mut abs, mut sq, mut n) = (0.0, 0.0, 0usize);
    for c in &campaigns[campaigns.len() - 2..] {
        let s = &c.clicks;
        for t in (l - 1)..(s.len() - h) {
            let recent: f64 = s[t + 1 - h..=t].iter().sum::<f64>() / h as f64;
            for k in 1..=h {
                let e = recent - s[t + k];
                abs += e.abs();
                sq += e * e;
                n += 1;
            }
        }
    }
    let (mae, rmse) = (abs / n as f64, (sq / n as f64).sqrt());
    let (dm, dr) = ((metrics.mae - mae).abs(), (metrics.rmse - rmse).abs());
    outcome(
        dm <= 1e-12 && dr <= 1e-12 && metrics.count == n,
        format!("{n} elements: MAE {:.6} vs {mae:.6} (diff {dm:.1e}), RMSE {:.6} vs {rmse:.6} (diff {dr:.1e})", metrics.mae, metrics.rmse),
    )
}

fn small_run_config() -> RunConfig {
    let mut c = RunConfig::default();
    c.generator.num_campaigns = 4;
    c.generator.days_per_campaign = 60;
    c.tsf = TsfConfig {
        hidden: 8,
        ff_hidden: 8,
        layers: 1,
        heads: 2,
        epochs: 2,
        embed_dim: 32,
        mlp_hidden: vec![16],
        ..TsfConfig::default()
    };
    c.embedder.dim = 32;
    c.eval.test_campaigns = 1;
    c.eval.seeds = vec![0, 1];
    c.grpo.grpo.iterations = 5;
    c
}

fn determinism(rows: &mut Vec<MetricRow>) -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let config = small_run_config();
    run_pipeline(&config, Some(a.path())).unwrap();
    run_pipeline(&config, Some(b.path())).unwrap();
    let again = run_pipeline(&config, Some(a.path())).unwrap();
    let mut same = true;
    for f in [METRICS, TABLE] {
        same &=
            std::fs::read(a.path().join(f)).unwrap() == std::fs::read(b.path().join(f)).unwrap();
    }
    rows.extend(read_csv::<MetricRow>(&a.path().join(METRICS)).unwrap());
    outcome(
        same,
        format!(
            "metrics.csv and table.csv identical across fresh runs: {same}; re-run executed {:?}",
            again.executed
        ),
    )
}

fn constant_campaign(id: &str, days: usize) -> CampaignRecord {
    let raw = RawCampaign {
        campaign_id: id.into(),
        ad_type: clickcast_core::data::AdType::Search,
        bidding_strategy: clickcast_core::data::BiddingStrategy::Cpc,
        raw_clicks: vec![120.0; days],
        events: Vec::new(),
    };
    CampaignRecord::from_raw(raw, 7).unwrap()
}

fn metric_sanity(reports: &[RunReport], rows: &[MetricRow]) -> Outcome {
    let mut runs = 0;
    let mut violations = 0;
    for r in reports {
        for (m, s) in r.mae.iter().zip(&r.rmse) {
            runs += 1;
            violations += usize::from(m > s);
        }
    }
    for row in rows {
        runs += 1;
        violations += usize::from(row.mae > row.rmse);
    }
    let campaigns = generate_dataset(&GeneratorConfig {
        num_campaigns: 2,
        days_per_campaign: 60,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let samples = make_dataset_samples(&campaigns, 14, 5).unwrap().samples;
    let truth: Vec<Vec<f64>> = samples.iter().map(|s| s.y.clone()).collect();
    let own = score_predictions(&truth, &samples).unwrap();
    let flat = make_dataset_samples(&[constant_campaign("flat", 40)], 14, 5)
        .unwrap()
        .samples;
    let copy = evaluate_copy(&flat).unwrap();
    let zero = own.mae == 0.0 && own.rmse == 0.0 && copy.mae == 0.0 && copy.rmse == 0.0;
    outcome(
        violations == 0 && runs > 0 && zero,
        format!("{runs} evaluation runs, {violations} with MAE > RMSE; self-forecast and flat-series Copy give zero: {zero}"),
    )
}

// ---------------------------------------------------------------- driver

fn run(id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f));
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass, o.detail),
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    let in_time = limit.map_or(true, |l| elapsed <= l);
    let pass = pass && in_time;
    let limit_note = limit.map_or(String::new(), |l| {
        format!(" / limit {:.0} s", l.as_secs_f64())
    });
    println!(
        "{} [{id:>2}] {name}: {detail} ({:.2} s{limit_note})",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    pass
}

fn main() {
    // `cargo test -- --list` and filters are meaningless here.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let secs = Duration::from_secs;
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    let results = [
        run(1, "reward golden suite", Some(secs(1)), reward_golden),
        run(2, "reward bounds fuzz", Some(secs(10)), reward_fuzz),
        run(3, "GRPO advantage oracle", None, grpo_oracle),
        run(4, "GRPO toy improvement", Some(secs(60)), grpo_toy),
        run(5, "fusion identity", None, fusion_identity),
        run(6, "gradient check", Some(secs(30)), gradient_check),
        run(
            7,
            "forecast ordering Multi < Uni < Copy",
            Some(secs(15 * 60)),
            || ordering(&mut reports),
        ),
        run(8, "Copy baseline oracle", None, copy_oracle),
        run(9, "pipeline determinism", None, || determinism(&mut rows)),
        run(10, "metric sanity", None, || metric_sanity(&reports, &rows)),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
