//! Composite reward for tagged forecast responses.
//!
//! `R = S_format + 1[prediction == truth] + 1[sentiment(reasoning) agrees with truth] * confidence`
//!
//! `S_format` starts at 0 and loses 0.25 for each of the two blocks
//! (`<Reasoning>`, `<Prediction>`) that is missing, unclosed or, for the
//! prediction, does not hold exactly `Increase` or `Decrease`.

mod parse;
mod reformat;
mod sentiment;

use serde::{Deserialize, Serialize};

use crate::data::TrendLabel;

pub use parse::{parse_response, ParsedResponse, BLOCK_PENALTY};
pub use reformat::{
    reformat_response, rule_based_reformat, FormatSource, Reformatted, ResponseFormatter,
};
pub use sentiment::{
    lexicon_sentiment, tokenize, Lexicon, LexiconScorer, Sentiment, SentimentResult,
    SentimentScorer, DEFAULT_NEGATIVE, DEFAULT_POSITIVE,
};

/// Decomposition of one response's reward into its three terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub format_score: f64,
    pub prediction_indicator: f64,
    pub alignment_term: f64,
    pub total: f64,
}

impl RewardBreakdown {
    /// Format compliance plus prediction accuracy, without the sentiment term.
    pub fn prediction_match(&self) -> f64 {
        self.format_score + self.prediction_indicator
    }
}

/// Whether `sentiment` agrees with the realised trend.
pub fn sentiment_aligned(sentiment: Sentiment, truth: TrendLabel) -> bool {
    matches!(
        (sentiment, truth),
        (Sentiment::Positive, TrendLabel::Increase) | (Sentiment::Negative, TrendLabel::Decrease)
    )
}

/// Scores a raw response against the ground-truth trend.
///
/// Sentiment is computed on the extracted reasoning only; a response without
/// a reasoning block gets no alignment credit.
pub fn compute_reward(
    raw: &str,
    truth: TrendLabel,
    scorer: &dyn SentimentScorer,
) -> RewardBreakdown {
    let parsed = parse_response(raw);
    reward_from_parsed(&parsed, truth, scorer)
}

pub fn reward_from_parsed(
    parsed: &ParsedResponse,
    truth: TrendLabel,
    scorer: &dyn SentimentScorer,
) -> RewardBreakdown {
    let format_score = parsed.format_penalty;
    let prediction_indicator = if parsed.prediction == Some(truth) {
        1.0
    } else {
        0.0
    };
    let alignment_term = match parsed.reasoning.as_deref() {
        Some(r) if !r.trim().is_empty() => {
            let s = scorer.score(r);
            if sentiment_aligned(s.label, truth) {
                s.confidence.clamp(0.0, 1.0)
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    RewardBreakdown {
        format_score,
        prediction_indicator,
        alignment_term,
        total: format_score + prediction_indicator + alignment_term,
    }
}
