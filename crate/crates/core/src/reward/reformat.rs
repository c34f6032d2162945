use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::parse::parse_response;
use super::sentiment::tokenize;
use crate::data::TrendLabel;
use crate::error::Result;

/// An external model that rewrites a response into the tagged structure.
///
/// Implementations receive only the raw response, never the prompt that
/// produced it.
pub trait ResponseFormatter {
    fn reformat(&self, raw: &str) -> Result<String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatSource {
    /// Already compliant; returned untouched.
    Unchanged,
    External,
    RuleBased,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reformatted {
    pub text: String,
    pub source: FormatSource,
    pub warning: Option<String>,
}

const UP_WORDS: &[&str] = &[
    "increase",
    "increases",
    "increased",
    "increasing",
    "rise",
    "rises",
    "rising",
    "rose",
    "grow",
    "grows",
    "growing",
    "growth",
    "grew",
    "up",
    "upward",
    "upwards",
    "recover",
    "recovers",
    "recovery",
    "recovering",
    "improve",
    "improves",
    "improvement",
    "improving",
    "gain",
    "gains",
    "climb",
    "climbs",
    "climbing",
    "higher",
    "boost",
    "rebound",
    "surge",
];

const DOWN_WORDS: &[&str] = &[
    "decrease",
    "decreases",
    "decreased",
    "decreasing",
    "decline",
    "declines",
    "declined",
    "declining",
    "drop",
    "drops",
    "dropped",
    "dropping",
    "fall",
    "falls",
    "falling",
    "fell",
    "down",
    "downward",
    "downwards",
    "lower",
    "reduce",
    "reduced",
    "reduction",
    "shrink",
    "shrinking",
    "dip",
    "dips",
    "loss",
    "slump",
];

const TAGS: [&str; 4] = [
    "<reasoning>",
    "</reasoning>",
    "<prediction>",
    "</prediction>",
];

fn strip_tags(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let lower = raw.to_ascii_lowercase();
    let mut i = 0;
    while i < raw.len() {
        if let Some(tag) = TAGS.iter().find(|t| lower[i..].starts_with(*t)) {
            out.push(' ');
            i += tag.len();
        } else {
            let ch = raw[i..].chars().next().unwrap_or(' ');
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}

/// Splits on `.`, `!` or `?` followed by whitespace (or the end), keeping the
/// terminator and collapsing internal whitespace.
fn sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        current.push(c);
        let boundary =
            matches!(c, '.' | '!' | '?') && chars.get(i + 1).map_or(true, |n| n.is_whitespace());
        if boundary {
            push_sentence(&mut out, &current);
            current.clear();
        }
    }
    push_sentence(&mut out, &current);
    out
}

fn push_sentence(out: &mut Vec<String>, raw: &str) {
    let s = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if !s.is_empty() {
        out.push(s);
    }
}

/// Majority trend keyword; ties and no hits give `None`.
fn trend_keyword(text: &str) -> Option<TrendLabel> {
    let (up, down) = tokenize(text).fold((0usize, 0usize), |(u, d), w| {
        (
            u + usize::from(UP_WORDS.contains(&w.as_str())),
            d + usize::from(DOWN_WORDS.contains(&w.as_str())),
        )
    });
    match up.cmp(&down) {
        core::cmp::Ordering::Greater => Some(TrendLabel::Increase),
        core::cmp::Ordering::Less => Some(TrendLabel::Decrease),
        core::cmp::Ordering::Equal => None,
    }
}

/// Rebuilds the tagged structure from free text: the longest declarative
/// sentence becomes the reasoning, the majority trend keyword the prediction.
/// Without a trend keyword the prediction block is left out, and the reasoning
/// is drawn from sentences that carry no net trend either, so a second pass
/// cannot invent one.
pub fn rule_based_reformat(raw: &str) -> String {
    let text = strip_tags(raw);
    let all = sentences(&text);
    let label = trend_keyword(&text);
    let eligible: Vec<&String> = match label {
        Some(_) => all.iter().collect(),
        None => all.iter().filter(|s| trend_keyword(s).is_none()).collect(),
    };
    let longest = |declarative: bool| {
        eligible
            .iter()
            .filter(|s| !declarative || !s.ends_with('?'))
            .fold(None::<&String>, |best, s| match best {
                Some(b) if b.chars().count() >= s.chars().count() => Some(b),
                _ => Some(*s),
            })
            .cloned()
    };
    let reasoning = longest(true)
        .or_else(|| longest(false))
        .unwrap_or_else(|| all.join(" "));
    let mut out = format!("<Reasoning> {reasoning} </Reasoning>");
    if let Some(label) = label {
        out.push_str(&format!("<Prediction> {label} </Prediction>"));
    }
    out
}

/// Returns compliant responses unchanged; otherwise asks `formatter` (if any)
/// and falls back to [`rule_based_reformat`] when it fails or returns
/// non-compliant text.
pub fn reformat_response(raw: &str, formatter: Option<&dyn ResponseFormatter>) -> Reformatted {
    if parse_response(raw).is_compliant() {
        return Reformatted {
            text: raw.to_string(),
            source: FormatSource::Unchanged,
            warning: None,
        };
    }
    let mut warning = None;
    if let Some(f) = formatter {
        match f.reformat(raw) {
            Ok(text) if parse_response(&text).is_compliant() => {
                return Reformatted {
                    text,
                    source: FormatSource::External,
                    warning: None,
                };
            }
            Ok(_) => {
                warning = Some("external formatter returned a non-compliant response".to_string())
            }
            Err(e) => warning = Some(format!("external formatter failed: {e}")),
        }
    }
    Reformatted {
        text: rule_based_reformat(raw),
        source: FormatSource::RuleBased,
        warning,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use core::cell::RefCell;
    use proptest::prelude::*;

    #[test]
    fn compliant_text_untouched() {
        let raw = "<Reasoning> x </Reasoning><Prediction> Increase </Prediction>";
        let r = reformat_response(raw, None);
        assert_eq!(r.text, raw);
        assert_eq!(r.source, FormatSource::Unchanged);
    }

    #[test]
    fn free_text_is_restructured() {
        let r = reformat_response(
            "Clicks will likely drop because many keywords were removed.",
            None,
        );
        assert_eq!(
            r.text,
            "<Reasoning> Clicks will likely drop because many keywords were removed. </Reasoning><Prediction> Decrease </Prediction>"
        );
        assert!(parse_response(&r.text).is_compliant());
    }

    #[test]
    fn longest_declarative_sentence_wins() {
        let out = rule_based_reformat(
            "Why would clicks rise this quickly after the change? They rise. Short one!",
        );
        assert!(
            out.starts_with("<Reasoning> They rise. </Reasoning>"),
            "{out}"
        );
    }

    #[test]
    fn no_trend_word_means_no_prediction() {
        let out = rule_based_reformat("The campaign runs search ads.");
        let p = parse_response(&out);
        assert_eq!(p.prediction, None);
        assert_eq!(
            p.reasoning.as_deref(),
            Some("The campaign runs search ads.")
        );
    }

    struct Recorder {
        seen: RefCell<Vec<String>>,
        reply: Result<String>,
    }
    impl ResponseFormatter for Recorder {
        fn reformat(&self, raw: &str) -> Result<String> {
            self.seen.borrow_mut().push(raw.to_string());
            self.reply.clone()
        }
    }

    #[test]
    fn external_formatter_sees_only_the_response() {
        let f = Recorder {
            seen: RefCell::new(Vec::new()),
            reply: Ok("<Reasoning> up </Reasoning><Prediction> Increase </Prediction>".into()),
        };
        let r = reformat_response("clicks will rise", Some(&f));
        assert_eq!(r.source, FormatSource::External);
        assert_eq!(f.seen.borrow().as_slice(), ["clicks will rise"]);
    }

    #[test]
    fn external_failure_falls_back_with_warning() {
        let f = Recorder {
            seen: RefCell::new(Vec::new()),
            reply: Err(Error::External("timeout".into())),
        };
        let r = reformat_response("clicks will rise", Some(&f));
        assert_eq!(r.source, FormatSource::RuleBased);
        assert!(r.warning.unwrap().contains("timeout"));
        assert_eq!(
            parse_response(&r.text).prediction,
            Some(TrendLabel::Increase)
        );
    }

    proptest! {
        #[test]
        fn rule_based_path_is_idempotent(raw in "(<(/)?(Reasoning|Prediction)>|[a-zA-Z ]{0,12}|[.!?]|drop|rise|\n){0,12}") {
            let once = reformat_response(&raw, None).text;
            let twice = reformat_response(&once, None).text;
            prop_assert_eq!(once, twice);
        }
    }
}
