//! Rendering forecast samples into the LLM forecasting prompt.

use alloc::format;
use alloc::string::String;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::ForecastSample;
use crate::error::{invalid, Result};
use crate::{DEFAULT_HORIZON, DEFAULT_LOOKBACK};

pub const TEMPLATE_VERSION: &str = "v1";

const PREAMBLE: &str = "You are an expert in data analysis and forecasting. I will provide you with a time \
series of rolling averages of daily clicks for a campaign, recent change logs, the type of ad being \
delivered, and the bidding strategy.";

pub const REASONING_INSTRUCTION: &str = "<Reasoning> Your reasoning sentence </Reasoning>";
pub const PREDICTION_INSTRUCTION: &str = "<Prediction> Increase/Decrease </Prediction>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptSpec {
    pub lookback: usize,
    pub horizon: usize,
    /// Decimal places used for click values.
    pub number_format: usize,
    pub template_version: String,
}

impl Default for PromptSpec {
    fn default() -> Self {
        Self {
            lookback: DEFAULT_LOOKBACK,
            horizon: DEFAULT_HORIZON,
            number_format: 3,
            template_version: TEMPLATE_VERSION.into(),
        }
    }
}

impl PromptSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(invalid!("prompt lookback and horizon must be at least 1"));
        }
        if self.number_format == 0 {
            return Err(invalid!("number_format must be at least 1 decimal place"));
        }
        if self.template_version != TEMPLATE_VERSION {
            return Err(invalid!(
                "unknown prompt template version {}",
                self.template_version
            ));
        }
        Ok(())
    }
}

/// Renders `sample` into the forecasting prompt.
///
/// Clicks are listed on one line as `Day i: value`, oldest day first; change
/// logs get one `Day i: text` line per day.
pub fn build_prompt(sample: &ForecastSample, spec: &PromptSpec) -> Result<String> {
    spec.validate()?;
    if sample.x.len() != spec.lookback || sample.texts.len() != spec.lookback {
        return Err(invalid!(
            "sample has {} values and {} texts, prompt expects {}",
            sample.x.len(),
            sample.texts.len(),
            spec.lookback
        ));
    }
    let l = spec.lookback;
    let prec = spec.number_format;
    let mut out = String::with_capacity(1024 + 40 * l);
    out.push_str(PREAMBLE);
    out.push_str("\n\nInputs:\n");
    let _ = write!(out, "1. Rolling average of clicks (past {l} days): ");
    for (i, v) in sample.x.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "Day {i}: {v:.prec$}");
    }
    let _ = write!(out, "\n2. Change logs (past {l} days):");
    for (i, text) in sample.texts.iter().enumerate() {
        let _ = write!(out, "\nDay {i}: {text}");
    }
    let _ = write!(out, "\n3. Ad type: {}", sample.ad_type.as_str());
    let _ = write!(
        out,
        "\n4. Bidding strategy: {}",
        sample.bidding_strategy.as_str()
    );
    let _ = write!(
        out,
        "\n\nTask: Analyze the data and provide a **concise** two-sentence reasoning. Provide **exactly \
one-word** as the prediction (Increase/Decrease) for click trend on average over next {} days. \
Format your response strictly as follows:\n{}\n{}",
        spec.horizon, REASONING_INSTRUCTION, PREDICTION_INSTRUCTION
    );
    Ok(out)
}

/// Line prefix used for the change-log entry of day `i`.
pub fn changelog_line(i: usize, text: &str) -> String {
    format!("Day {i}: {text}")
}
