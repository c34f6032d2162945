//! Textual summaries (reasoning + prediction) for forecast samples.
//!
//! The mock summariser stands in for a fine-tuned LLM: it reads the sample's
//! own lookback and change log and writes a tagged two-sentence response.
//! Its prediction comes from comparing the two halves of the lookback, so it
//! is informative but often wrong, while the event sentence carries what the
//! change log implies for the coming days.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{mean, EventType, ForecastSample, TrendLabel};
use crate::embedding::text_hash;
use crate::error::{invalid, Result};
use crate::reward::{parse_response, reformat_response, ResponseFormatter};
use crate::synth::EffectKernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub sample_id: String,
    pub prompt_hash: String,
    pub response_text: String,
    /// `mock` or `model@version` of the external generator.
    pub generator: String,
    /// Unix seconds.
    pub created_at: u64,
    /// Whether `response_text` parses without a format penalty.
    pub compliant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A chat model that answers a prompt with free text.
pub trait LlmClient {
    /// `model@version` style identifier.
    fn identity(&self) -> String;
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// Halves rule: Increase iff the second half of the lookback averages
/// strictly higher than the first half.
pub fn halves_trend(x: &[f64]) -> TrendLabel {
    let mid = x.len() / 2;
    if mid == 0 {
        return TrendLabel::Decrease;
    }
    if mean(&x[x.len() - mid..]) > mean(&x[..mid]) {
        TrendLabel::Increase
    } else {
        TrendLabel::Decrease
    }
}

fn event_phrase(t: EventType) -> &'static str {
    match t {
        EventType::KeywordAdded => "keyword additions",
        EventType::KeywordRemoved => "keyword removals",
        EventType::KeywordPaused => "keyword pauses",
        EventType::AdTextChanged => "ad text updates",
        EventType::HeadlineModified => "headline changes",
        EventType::BudgetAdjusted => "budget cut",
        EventType::BidStrategyChanged => "bid strategy switch",
        EventType::BidValueUpdated => "bid increase",
        EventType::CpaTargetChanged => "target CPA increase",
        EventType::AssetCreated => "new assets",
    }
}

fn recency_phrase(days_ago: usize) -> &'static str {
    match days_ago {
        0 => "today",
        1 => "yesterday",
        2..=3 => "a few days ago",
        4..=7 => "last week",
        _ => "two weeks ago",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MockSummarizer {
    pub kernel: EffectKernel,
    pub horizon: usize,
    /// Rolling-average window of the click series the summary describes.
    pub rolling_window: usize,
}

impl MockSummarizer {
    pub const IDENTITY: &'static str = "mock";

    /// Minimum |impact| for an event to be mentioned.
    const MENTION_THRESHOLD: f64 = 0.005;

    pub fn new(kernel: EffectKernel, horizon: usize, rolling_window: usize) -> Self {
        Self {
            kernel,
            horizon,
            rolling_window: rolling_window.max(1),
        }
    }

    /// Shift an event causes in the (log) rolling-average level: mean over
    /// the next `h` days minus mean over the last `h` lookback days.
    fn impact(&self, sample: &ForecastSample, e: &crate::data::ChangeEvent) -> f64 {
        let l = sample.lookback() as i64;
        let h = self.horizon.min(sample.lookback()) as i64;
        let w = self.rolling_window as i64;
        let day = e.day_index as i64;
        let smoothed = |s: i64| {
            (s - w + 1..=s)
                .map(|u| self.kernel.log_effect(e, (u - day) as f64))
                .sum::<f64>()
                / w as f64
        };
        let recent = (l - h..l).map(smoothed).sum::<f64>() / h as f64;
        let future = (l..l + h).map(smoothed).sum::<f64>() / h as f64;
        future - recent
    }

    /// Mock that knows the generator's effect kernel, scaled as generated.
    pub fn for_generator(config: &crate::synth::GeneratorConfig, horizon: usize) -> Self {
        Self::new(
            config.kernel.scaled(config.effect_scale),
            horizon,
            config.rolling_window,
        )
    }

    pub fn respond(&self, sample: &ForecastSample) -> String {
        let l = sample.lookback();
        let trend = halves_trend(&sample.x);
        let direction = match trend {
            TrendLabel::Increase => "an upward",
            TrendLabel::Decrease => "a downward",
        };
        let first = format!(
            "The rolling average of clicks shows {direction} trend over the past {l} days."
        );
        let strongest = sample
            .events
            .iter()
            .map(|e| (self.impact(sample, e), e))
            .filter(|(v, _)| libm::fabs(*v) >= Self::MENTION_THRESHOLD)
            .fold(
                None::<(f64, &crate::data::ChangeEvent)>,
                |best, cur| match best {
                    Some(b) if libm::fabs(b.0) >= libm::fabs(cur.0) => Some(b),
                    _ => Some(cur),
                },
            );
        let second = match strongest {
            Some((impact, e)) => {
                let size = match libm::fabs(impact) {
                    v if v >= 0.1 => "strongly",
                    v if v >= 0.03 => "moderately",
                    _ => "slightly",
                };
                let ahead = if impact > 0.0 { "higher" } else { "lower" };
                format!(
                    "The {} {} point to {ahead} clicks ahead, {size}.",
                    event_phrase(e.event_type),
                    recency_phrase(l - 1 - e.day_index)
                )
            }
            None => "No recent change-log event is likely to move clicks.".to_string(),
        };
        format!("<Reasoning> {first} {second} </Reasoning><Prediction> {trend} </Prediction>")
    }
}

/// Where summaries come from.
pub enum SummarySource<'a> {
    Mock(&'a MockSummarizer),
    External {
        client: &'a dyn LlmClient,
        formatter: Option<&'a dyn ResponseFormatter>,
    },
}

/// Diagnostics raised while generating summaries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SummaryDiagnostics {
    pub warnings: Vec<String>,
    pub flagged: usize,
}

/// One summary per sample. External failures flag the record and the run
/// continues.
pub fn generate_summaries(
    samples: &[ForecastSample],
    prompts: &[String],
    source: &SummarySource<'_>,
    created_at: u64,
) -> Result<(Vec<SummaryRecord>, SummaryDiagnostics)> {
    if samples.len() != prompts.len() {
        return Err(invalid!(
            "{} samples but {} prompts",
            samples.len(),
            prompts.len()
        ));
    }
    let mut diag = SummaryDiagnostics::default();
    let mut out = Vec::with_capacity(samples.len());
    for (sample, prompt) in samples.iter().zip(prompts) {
        let prompt_hash = text_hash(prompt);
        let sample_id = sample.sample_id();
        let (generator, response, error) = match source {
            SummarySource::Mock(m) => (
                MockSummarizer::IDENTITY.to_string(),
                m.respond(sample),
                None,
            ),
            SummarySource::External { client, formatter } => match client.complete(prompt) {
                Ok(raw) => {
                    let r = reformat_response(&raw, *formatter);
                    if let Some(w) = r.warning {
                        diag.warnings.push(format!("{sample_id}: {w}"));
                    }
                    (client.identity(), r.text, None)
                }
                Err(e) => (client.identity(), String::new(), Some(format!("{e}"))),
            },
        };
        let compliant = error.is_none() && parse_response(&response).is_compliant();
        if !compliant {
            diag.flagged += 1;
        }
        out.push(SummaryRecord {
            sample_id,
            prompt_hash,
            response_text: response,
            generator,
            created_at,
            compliant,
            error,
        });
    }
    Ok((out, diag))
}
