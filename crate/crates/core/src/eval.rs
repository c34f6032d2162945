//! Forecast and response metrics, plus the baseline comparison harness.
//!
//! Errors are aggregated at element level: every predicted step of every
//! sample counts once. Reports keep raw values; the scale factor (100 by
//! default) is applied only when presenting them.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::{ForecastSample, TrendLabel};
use crate::embedding::TextEmbedder;
use crate::error::{invalid, Result};
use crate::forecaster::{
    copy_baseline, forecast_samples, train, FusionForecaster, Mode, TsfConfig,
};
use crate::reward::{compute_reward, SentimentScorer};

pub const DEFAULT_SCALE: f64 = 100.0;

fn check_pair(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(invalid!(
            "prediction has {} values, truth has {}",
            pred.len(),
            truth.len()
        ));
    }
    if pred.is_empty() {
        return Err(invalid!("metrics need at least one value"));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| libm::fabs(p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth)?;
    let sq = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>();
    Ok(libm::sqrt(sq / pred.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    Copy,
    Uni,
    #[serde(rename = "Multi+Changelog")]
    MultiChangelog,
    #[serde(rename = "Multi+Summary")]
    MultiSummary,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Copy,
        Method::Uni,
        Method::MultiChangelog,
        Method::MultiSummary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Copy => "Copy",
            Method::Uni => "Uni",
            Method::MultiChangelog => "Multi+Changelog",
            Method::MultiSummary => "Multi+Summary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
    }

    /// Training mode of the learned methods.
    pub fn mode(self) -> Option<Mode> {
        match self {
            Method::Copy => None,
            Method::Uni => Some(Mode::Uni),
            Method::MultiChangelog | Method::MultiSummary => Some(Mode::Multi),
        }
    }
}

/// MAE and RMSE over every predicted element of a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// Number of predicted elements.
    pub count: usize,
}

/// Flattens aligned predictions and targets and scores them.
pub fn score_predictions(preds: &[Vec<f64>], samples: &[ForecastSample]) -> Result<ErrorMetrics> {
    if preds.len() != samples.len() {
        return Err(invalid!(
            "{} predictions for {} samples",
            preds.len(),
            samples.len()
        ));
    }
    if samples.is_empty() {
        return Err(invalid!("evaluation set is empty"));
    }
    let mut p = Vec::new();
    let mut t = Vec::new();
    for (pred, s) in preds.iter().zip(samples) {
        if pred.len() != s.y.len() {
            return Err(invalid!(
                "sample {} expects {} steps, got {}",
                s.sample_id(),
                s.y.len(),
                pred.len()
            ));
        }
        p.extend_from_slice(pred);
        t.extend_from_slice(&s.y);
    }
    Ok(ErrorMetrics {
        mae: mae(&p, &t)?,
        rmse: rmse(&p, &t)?,
        count: p.len(),
    })
}

/// Copy baseline over `samples`.
pub fn evaluate_copy(samples: &[ForecastSample]) -> Result<ErrorMetrics> {
    let preds = samples
        .iter()
        .map(|s| copy_baseline(&s.x, s.y.len()))
        .collect::<Result<Vec<_>>>()?;
    score_predictions(&preds, samples)
}

/// A trained model over `samples`. Multimodal models need the per-sample
/// texts and the embedder they were trained with.
pub fn evaluate_forecaster(
    model: &FusionForecaster,
    samples: &[ForecastSample],
    texts: Option<&BTreeMap<String, String>>,
    embedder: Option<&dyn TextEmbedder>,
) -> Result<ErrorMetrics> {
    if samples.is_empty() {
        return Err(invalid!("evaluation set is empty"));
    }
    let preds = forecast_samples(model, samples, texts, embedder)?;
    score_predictions(&preds, samples)
}

/// One method's results across seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub method: Method,
    pub seeds: Vec<u64>,
    pub mae: Vec<f64>,
    pub rmse: Vec<f64>,
    pub scale: f64,
    pub sample_count: usize,
    pub config_fingerprint: String,
}

/// Mean and sample standard deviation (absent with fewer than 2 values).
pub fn mean_std(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, None);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, Some(libm::sqrt(var)))
}

impl RunReport {
    pub fn mae_summary(&self) -> (f64, Option<f64>) {
        mean_std(&self.mae)
    }

    pub fn rmse_summary(&self) -> (f64, Option<f64>) {
        mean_std(&self.rmse)
    }

    pub fn mean_mae(&self) -> f64 {
        self.mae_summary().0
    }

    fn scaled(&self, (m, s): (f64, Option<f64>)) -> String {
        match s {
            Some(s) => format!("{:.3} ± {:.3}", m * self.scale, s * self.scale),
            None => format!("{:.3}", m * self.scale),
        }
    }
}

/// Plain-text table of reports, values multiplied by each report's scale.
pub fn format_table(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let scale = reports.first().map_or(DEFAULT_SCALE, |r| r.scale);
    let _ = writeln!(
        out,
        "{:<18} {:>18} {:>18}  (x{scale}, element-level)",
        "Method", "MAE", "RMSE"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:<18} {:>18} {:>18}",
            r.method.as_str(),
            r.scaled(r.mae_summary()),
            r.scaled(r.rmse_summary())
        );
    }
    out
}

/// Averages of the per-response reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseAggregate {
    pub mean_prediction_match: f64,
    pub mean_reward: f64,
    pub count: usize,
}

pub fn evaluate_llm_responses(
    responses: &[&str],
    truths: &[TrendLabel],
    scorer: &dyn SentimentScorer,
) -> Result<ResponseAggregate> {
    if responses.len() != truths.len() {
        return Err(invalid!(
            "{} responses for {} labels",
            responses.len(),
            truths.len()
        ));
    }
    if responses.is_empty() {
        return Ok(ResponseAggregate {
            mean_prediction_match: 0.0,
            mean_reward: 0.0,
            count: 0,
        });
    }
    let (mut pm, mut total) = (0.0, 0.0);
    for (r, t) in responses.iter().zip(truths) {
        let b = compute_reward(r, *t, scorer);
        pm += b.prediction_match();
        total += b.total;
    }
    let n = responses.len() as f64;
    Ok(ResponseAggregate {
        mean_prediction_match: pm / n,
        mean_reward: total / n,
        count: responses.len(),
    })
}

/// Inputs shared by every method of one comparison.
pub struct Comparison<'a> {
    pub train: &'a [ForecastSample],
    pub test: &'a [ForecastSample],
    /// Per-sample summaries covering train and test samples.
    pub summaries: Option<&'a BTreeMap<String, String>>,
    pub embedder: &'a dyn TextEmbedder,
    pub config: TsfConfig,
    pub seeds: Vec<u64>,
    pub config_fingerprint: String,
}

/// Per-sample raw change-log text, the input of the changelog baseline.
pub fn changelog_texts<'a, I>(samples: I) -> BTreeMap<String, String>
where
    I: IntoIterator<Item = &'a ForecastSample>,
{
    samples
        .into_iter()
        .map(|s| (s.sample_id(), s.changelog_text()))
        .collect()
}

impl Comparison<'_> {
    /// Trains and evaluates `method` once per seed.
    pub fn run(&self, method: Method) -> Result<RunReport> {
        if self.test.is_empty() {
            return Err(invalid!("test set is empty"));
        }
        if self.seeds.is_empty() {
            return Err(invalid!("at least one seed is required"));
        }
        let changelogs;
        let texts = match method {
            Method::Copy | Method::Uni => None,
            Method::MultiChangelog => {
                changelogs = changelog_texts(self.train.iter().chain(self.test));
                Some(&changelogs)
            }
            Method::MultiSummary => Some(
                self.summaries
                    .ok_or_else(|| invalid!("{} needs summaries", method.as_str()))?,
            ),
        };
        let mut report = RunReport {
            method,
            seeds: self.seeds.clone(),
            mae: Vec::new(),
            rmse: Vec::new(),
            scale: DEFAULT_SCALE,
            sample_count: self.test.len(),
            config_fingerprint: self.config_fingerprint.clone(),
        };
        for &seed in &self.seeds {
            let m = match method.mode() {
                None => evaluate_copy(self.test)?,
                Some(mode) => {
                    let config = TsfConfig {
                        seed,
                        ..self.config.clone()
                    };
                    let (model, _) = train(self.train, texts, mode, &config, self.embedder)?;
                    evaluate_forecaster(&model, self.test, texts, Some(self.embedder))?
                }
            };
            report.mae.push(m.mae);
            report.rmse.push(m.rmse);
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{AdType, BiddingStrategy};
    use crate::reward::LexiconScorer;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 3.5);
        assert!((mae(&[0.2], &[0.5]).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), libm::sqrt(12.5));
        assert!((rmse(&[1.25, 2.25], &[1.0, 2.0]).unwrap() - 0.25).abs() < 1e-15);
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn metric_identities(pairs in proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50), shift in -5.0f64..5.0) {
            let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let a = mae(&p, &t).unwrap();
            let r = rmse(&p, &t).unwrap();
            prop_assert!(a <= r + 1e-12);
            let sse: f64 = p.iter().zip(&t).map(|(x, y)| (x - y) * (x - y)).sum();
            prop_assert!((r * r * p.len() as f64 - sse).abs() <= 1e-9 * sse.max(1.0));
            let ps: Vec<f64> = p.iter().map(|x| x + shift).collect();
            let ts: Vec<f64> = t.iter().map(|x| x + shift).collect();
            prop_assert!((mae(&ps, &ts).unwrap() - a).abs() < 1e-9);
        }
    }

    fn sample(x: Vec<f64>, y: Vec<f64>) -> ForecastSample {
        ForecastSample {
            campaign_id: "c".into(),
            t: 0,
            texts: vec!["no changes".to_string(); x.len()],
            x,
            y,
            events: Vec::new(),
            ad_type: AdType::Video,
            bidding_strategy: BiddingStrategy::Cpc,
            label: TrendLabel::Decrease,
        }
    }

    #[test]
    fn copy_is_exact_when_future_repeats_the_tail_mean() {
        let s = sample(vec![0.1, 0.3, 0.5], vec![0.4, 0.4]);
        let m = evaluate_copy(&[s]).unwrap();
        assert_eq!((m.mae, m.rmse, m.count), (0.0, 0.0, 2));
    }

    #[test]
    fn response_aggregate_examples() {
        let scorer = LexiconScorer::default();
        let good = "<Reasoning> Clicks were recorded daily. </Reasoning><Prediction> Increase </Prediction>";
        let bad = "I think so";
        let t = TrendLabel::Increase;
        let a = evaluate_llm_responses(&[good, good], &[t, t], &scorer).unwrap();
        assert_eq!((a.mean_prediction_match, a.mean_reward), (1.0, 1.0));
        let b = evaluate_llm_responses(&[bad], &[t], &scorer).unwrap();
        assert_eq!((b.mean_prediction_match, b.mean_reward), (-0.5, -0.5));
        let c = evaluate_llm_responses(&[good, bad], &[t, t], &scorer).unwrap();
        assert_eq!((c.mean_prediction_match, c.mean_reward), (0.25, 0.25));
        assert!(evaluate_llm_responses(&[good], &[], &scorer).is_err());
    }

    #[test]
    fn std_needs_two_values() {
        assert_eq!(mean_std(&[2.0]), (2.0, None));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s.unwrap() - libm::sqrt(2.0)).abs() < 1e-15);
    }

    #[test]
    fn method_names() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.as_str()), Some(m));
        }
        assert_eq!(Method::parse("multi+summary"), Some(Method::MultiSummary));
    }

    #[test]
    fn table_scales_values() {
        let r = RunReport {
            method: Method::Copy,
            seeds: vec![0, 1],
            mae: vec![0.05, 0.05],
            rmse: vec![0.07, 0.07],
            scale: DEFAULT_SCALE,
            sample_count: 1,
            config_fingerprint: String::new(),
        };
        let t = format_table(&[r]);
        assert!(
            t.contains("5.000 ± 0.000") && t.contains("7.000 ± 0.000"),
            "{t}"
        );
    }
}
