use alloc::collections::BTreeSet;
use alloc::string::String;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentResult {
    pub label: Sentiment,
    /// In `[0, 1]`.
    pub confidence: f64,
}

impl SentimentResult {
    pub const NEUTRAL: Self = Self {
        label: Sentiment::Neutral,
        confidence: 0.0,
    };
}

/// Sentiment model applied to generated reasoning. Implementations must
/// return a result for every input.
pub trait SentimentScorer {
    fn score(&self, text: &str) -> SentimentResult;
}

/// Lowercased alphanumeric words.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}

/// A word list: one word per line, blank lines and `#` comments ignored.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Lexicon {
    words: BTreeSet<String>,
}

impl Lexicon {
    pub fn parse(list: &str) -> Self {
        let words = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

pub const DEFAULT_POSITIVE: &str = include_str!("../../lexicon/positive.txt");
pub const DEFAULT_NEGATIVE: &str = include_str!("../../lexicon/negative.txt");

/// Deterministic word-count sentiment scorer.
///
/// The label follows the sign of `pos - neg`; confidence is
/// `|pos - neg| / (pos + neg)`. No hits, or a tie, is neutral.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconScorer {
    pub positive: Lexicon,
    pub negative: Lexicon,
}

impl Default for LexiconScorer {
    fn default() -> Self {
        Self::new(
            Lexicon::parse(DEFAULT_POSITIVE),
            Lexicon::parse(DEFAULT_NEGATIVE),
        )
    }
}

impl LexiconScorer {
    pub fn new(positive: Lexicon, negative: Lexicon) -> Self {
        Self { positive, negative }
    }

    pub fn counts(&self, text: &str) -> (usize, usize) {
        tokenize(text).fold((0, 0), |(p, n), w| {
            (
                p + usize::from(self.positive.contains(&w)),
                n + usize::from(self.negative.contains(&w)),
            )
        })
    }
}

impl SentimentScorer for LexiconScorer {
    fn score(&self, text: &str) -> SentimentResult {
        let (pos, neg) = self.counts(text);
        if pos == neg {
            return SentimentResult::NEUTRAL;
        }
        let confidence = pos.abs_diff(neg) as f64 / (pos + neg) as f64;
        let label = if pos > neg {
            Sentiment::Positive
        } else {
            Sentiment::Negative
        };
        SentimentResult { label, confidence }
    }
}

/// [`LexiconScorer::default`] applied to `text`.
pub fn lexicon_sentiment(text: &str) -> SentimentResult {
    LexiconScorer::default().score(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(
            lexicon_sentiment("steady upward growth and recovery"),
            SentimentResult {
                label: Sentiment::Positive,
                confidence: 1.0
            }
        );
        assert_eq!(
            lexicon_sentiment("decline due to keyword removal"),
            SentimentResult {
                label: Sentiment::Negative,
                confidence: 1.0
            }
        );
        assert_eq!(
            lexicon_sentiment("the campaign runs search ads"),
            SentimentResult::NEUTRAL
        );
    }

    #[test]
    fn mixed_text_confidence() {
        // 1 positive (recovery), 2 negative (decline, removal) -> 1/3.
        let s = lexicon_sentiment("Decline after the removal, then a slight Recovery.");
        assert_eq!(s.label, Sentiment::Negative);
        assert!((s.confidence - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn word_boundaries() {
        // "increasingly" and "dropbox" are not lexicon words.
        assert_eq!(
            lexicon_sentiment("increasingly dropbox"),
            SentimentResult::NEUTRAL
        );
    }

    #[test]
    fn custom_lexicon() {
        let scorer = LexiconScorer::new(Lexicon::parse("# c\nUp\n\n"), Lexicon::parse("down"));
        assert_eq!(scorer.positive.len(), 1);
        assert_eq!(scorer.score("UP up down").label, Sentiment::Positive);
    }
}
