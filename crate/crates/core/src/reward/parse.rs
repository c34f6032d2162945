use alloc::string::{String, ToString};

use crate::data::TrendLabel;

/// Penalty for one missing or malformed block.
pub const BLOCK_PENALTY: f64 = -0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub reasoning: Option<String>,
    pub prediction: Option<TrendLabel>,
    /// One of 0, -0.25, -0.5.
    pub format_penalty: f64,
}

impl ParsedResponse {
    pub fn is_compliant(&self) -> bool {
        self.format_penalty == 0.0
    }
}

/// Trimmed content of the first `<tag>...</tag>` block, matched
/// case-insensitively. `None` when the opening tag is absent or never closed.
pub(crate) fn first_block<'a>(raw: &'a str, lower: &str, tag: &str) -> Option<&'a str> {
    let open = alloc::format!("<{tag}>");
    let close = alloc::format!("</{tag}>");
    let start = lower.find(&open)? + open.len();
    let end = start + lower[start..].find(&close)?;
    Some(raw[start..end].trim())
}

/// Extracts the reasoning and prediction blocks and the format penalty.
pub fn parse_response(raw: &str) -> ParsedResponse {
    // ASCII lowercasing keeps byte offsets aligned with `raw`.
    let lower = raw.to_ascii_lowercase();
    let mut penalty = 0.0;

    let reasoning = first_block(raw, &lower, "reasoning").map(ToString::to_string);
    if reasoning.is_none() {
        penalty += BLOCK_PENALTY;
    }
    let prediction = first_block(raw, &lower, "prediction").and_then(TrendLabel::parse);
    if prediction.is_none() {
        penalty += BLOCK_PENALTY;
    }
    ParsedResponse {
        reasoning,
        prediction,
        format_penalty: penalty,
    }
}
