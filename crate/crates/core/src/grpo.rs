//! Group-relative policy optimisation.
//!
//! For every prompt the policy samples a group of `k` completions; each is
//! scored with the composite reward, rewards are standardised within the
//! group, and the policy ascends `sum_i a_i * log p(completion_i)`. No critic
//! is involved. [`TemplatePolicy`] is a small categorical policy over canned
//! responses that exercises the loop end to end; real LLM trainers plug in
//! through [`Policy`].

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::TrendLabel;
use crate::error::{invalid, Error, Result};
use crate::reward::{compute_reward, SentimentScorer};
use crate::rng::{self, stream, StreamRng};

pub const DEFAULT_EPSILON: f64 = 1e-8;

/// `k` completions for one prompt with their rewards and advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutGroup {
    pub prompt_id: String,
    pub completions: Vec<String>,
    pub rewards: Vec<f64>,
    pub advantages: Vec<f64>,
}

/// `(r_i - mean) / (population_std + epsilon)`; a zero-variance group gets
/// all-zero advantages.
pub fn group_advantages(rewards: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    if rewards.len() < 2 {
        return Err(invalid!(
            "a group needs at least 2 rewards, got {}",
            rewards.len()
        ));
    }
    if let Some(r) = rewards.iter().find(|r| !r.is_finite()) {
        return Err(invalid!("non-finite reward {r}"));
    }
    // Identical rewards: the rounded mean need not equal them exactly.
    if rewards.iter().all(|r| *r == rewards[0]) {
        return Ok(vec![0.0; rewards.len()]);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    let denom = libm::sqrt(var) + epsilon;
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateParams {
    pub learning_rate: f64,
    /// Weight of the KL penalty towards the policy's reference distribution.
    pub kl_coef: f64,
}

/// A trainable sampler of completions.
pub trait Policy {
    type Snapshot: Clone;

    /// Draws `k` completions for a prompt.
    fn sample(&mut self, prompt_id: &str, prompt: &str, k: usize) -> Result<Vec<String>>;

    /// One advantage-weighted update over all groups of an iteration. Returns
    /// a scalar training diagnostic.
    fn update(&mut self, groups: &[RolloutGroup], params: &UpdateParams) -> Result<f64>;

    /// Resets the sampling stream.
    fn reseed(&mut self, seed: u64);

    fn snapshot(&self) -> Self::Snapshot;

    fn restore(&mut self, snapshot: &Self::Snapshot) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GrpoConfig {
    pub group_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    pub kl_coef: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            iterations: 200,
            learning_rate: 0.5,
            kl_coef: 0.0,
            epsilon: DEFAULT_EPSILON,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptCase {
    pub id: String,
    pub prompt: String,
    pub truth: TrendLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub mean_reward: f64,
    pub max_reward: f64,
    pub diagnostic: f64,
}

/// Runs `config.iterations` rounds of sample, score, standardise, update.
pub fn run_grpo<P: Policy>(
    policy: &mut P,
    prompts: &[PromptCase],
    scorer: &dyn SentimentScorer,
    config: &GrpoConfig,
) -> Result<Vec<IterationStats>> {
    if prompts.is_empty() {
        return Err(invalid!("run_grpo needs at least one prompt"));
    }
    if config.group_size < 2 {
        return Err(invalid!("group size must be at least 2"));
    }
    policy.reseed(config.seed);
    let params = UpdateParams {
        learning_rate: config.learning_rate,
        kl_coef: config.kl_coef,
    };
    let mut history = Vec::with_capacity(config.iterations);
    for iteration in 0..config.iterations {
        let mut groups = Vec::with_capacity(prompts.len());
        let mut sum = 0.0;
        let mut count = 0usize;
        let mut max = f64::NEG_INFINITY;
        for case in prompts {
            let completions = policy.sample(&case.id, &case.prompt, config.group_size)?;
            let rewards: Vec<f64> = completions
                .iter()
                .map(|c| compute_reward(c, case.truth, scorer).total)
                .collect();
            let advantages = group_advantages(&rewards, config.epsilon)?;
            sum += rewards.iter().sum::<f64>();
            count += rewards.len();
            max = rewards.iter().copied().fold(max, f64::max);
            groups.push(RolloutGroup {
                prompt_id: case.id.clone(),
                completions,
                rewards,
                advantages,
            });
        }
        let diagnostic = policy.update(&groups, &params)?;
        history.push(IterationStats {
            iteration,
            mean_reward: sum / count as f64,
            max_reward: max,
            diagnostic,
        });
    }
    Ok(history)
}

/// Canned responses covering compliant/correct, contradictory and
/// malformed outputs.
pub fn default_templates() -> Vec<String> {
    [
        "<Reasoning> Clicks show steady upward growth and recovery after new keywords were added. </Reasoning><Prediction> Increase </Prediction>",
        "<Reasoning> Clicks decline after the removal of many keywords and a budget reduction. </Reasoning><Prediction> Decrease </Prediction>",
        "<Reasoning> Clicks decline after the keyword removal. </Reasoning><Prediction> Increase </Prediction>",
        "<Prediction> Increase </Prediction>",
        "<Prediction> Decrease </Prediction>",
        "Clicks will probably change a bit over the next days.",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

/// Per-prompt categorical distribution over fixed templates, parameterised by
/// softmax logits that start at zero (uniform).
#[derive(Debug, Clone)]
pub struct TemplatePolicy {
    templates: Vec<String>,
    logits: BTreeMap<String, Vec<f64>>,
    rng: StreamRng,
}

impl TemplatePolicy {
    pub fn new(templates: Vec<String>, seed: u64) -> Result<Self> {
        if templates.len() < 2 {
            return Err(invalid!("template policy needs at least 2 templates"));
        }
        for (i, t) in templates.iter().enumerate() {
            if templates[..i].contains(t) {
                return Err(invalid!("duplicate template {t:?}"));
            }
        }
        Ok(Self {
            templates,
            logits: BTreeMap::new(),
            rng: rng::stream_rng(seed, &[stream::POLICY]),
        })
    }

    pub fn templates(&self) -> &[String] {
        &self.templates
    }

    /// Template probabilities for a prompt.
    pub fn probabilities(&self, prompt_id: &str) -> Vec<f64> {
        match self.logits.get(prompt_id) {
            Some(z) => softmax(z),
            None => vec![1.0 / self.templates.len() as f64; self.templates.len()],
        }
    }

    fn index_of(&self, completion: &str) -> Result<usize> {
        self.templates
            .iter()
            .position(|t| t == completion)
            .ok_or_else(|| {
                Error::Policy("completion is not one of the policy templates".to_string())
            })
    }
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| libm::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Builds the canned-template toy policy.
pub fn toy_tag_policy(templates: Vec<String>, seed: u64) -> Result<TemplatePolicy> {
    TemplatePolicy::new(templates, seed)
}

impl Policy for TemplatePolicy {
    type Snapshot = BTreeMap<String, Vec<f64>>;

    fn sample(&mut self, prompt_id: &str, _prompt: &str, k: usize) -> Result<Vec<String>> {
        let p = self.probabilities(prompt_id);
        (0..k)
            .map(|_| {
                let i = rng::weighted_index(&mut self.rng, &p)
                    .ok_or_else(|| Error::Policy("degenerate template distribution".to_string()))?;
                Ok(self.templates[i].clone())
            })
            .collect()
    }

    /// Gradient ascent on `mean_i a_i log p(c_i) - kl_coef * KL(p || uniform)`
    /// with respect to each prompt's logits.
    fn update(&mut self, groups: &[RolloutGroup], params: &UpdateParams) -> Result<f64> {
        let n = self.templates.len();
        let mut objective = 0.0;
        for g in groups {
            if g.completions.len() != g.advantages.len() || g.completions.is_empty() {
                return Err(Error::Policy(
                    "group completions and advantages differ in length".into(),
                ));
            }
            let p = self.probabilities(&g.prompt_id);
            let k = g.completions.len() as f64;
            let mut grad = vec![0.0; n];
            for (c, a) in g.completions.iter().zip(&g.advantages) {
                let j = self.index_of(c)?;
                objective += a * libm::log(p[j]) / k;
                for (i, gi) in grad.iter_mut().enumerate() {
                    let onehot = if i == j { 1.0 } else { 0.0 };
                    *gi += a * (onehot - p[i]) / k;
                }
            }
            if params.kl_coef != 0.0 {
                let entropy_term: f64 = p.iter().map(|pi| pi * libm::log(*pi)).sum();
                for (gi, pi) in grad.iter_mut().zip(&p) {
                    *gi -= params.kl_coef * pi * (libm::log(*pi) - entropy_term);
                }
            }
            let z = self
                .logits
                .entry(g.prompt_id.clone())
                .or_insert_with(|| vec![0.0; n]);
            for (zi, gi) in z.iter_mut().zip(&grad) {
                *zi += params.learning_rate * gi;
            }
        }
        Ok(objective / groups.len().max(1) as f64)
    }

    fn reseed(&mut self, seed: u64) {
        self.rng = rng::stream_rng(seed, &[stream::POLICY]);
    }

    fn snapshot(&self) -> Self::Snapshot {
        self.logits.clone()
    }

    fn restore(&mut self, snapshot: &Self::Snapshot) -> Result<()> {
        if snapshot.values().any(|z| z.len() != self.templates.len()) {
            return Err(Error::Policy(
                "snapshot does not match the template count".into(),
            ));
        }
        self.logits = snapshot.clone();
        Ok(())
    }
}
