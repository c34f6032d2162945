//! Synthetic campaign generator with a known text-to-clicks causal link.
//!
//! Each campaign draws from three independent streams derived from
//! `(base_seed, index)`: one for the base click series, one for the change
//! events and their effects, and one for static attributes. Because the
//! streams are independent, switching effects off (or events off) leaves the
//! base series bit-identical, which makes exact counterfactuals possible.
//!
//! Base series: `level * (1 + trend + drift + weekly + noise)`, clipped at 0.
//! Each event multiplies clicks from its day onwards by
//! `exp(direction * amplitude * magnitude * effect_scale * 0.5^(dt / half_life))`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::data::{
    AdType, BiddingStrategy, CampaignRecord, ChangeEvent, EventType, RawCampaign,
    DEFAULT_ROLLING_WINDOW,
};
use crate::error::{invalid, Result};
use crate::rng::{self, stream, StreamRng};
use crate::{DEFAULT_HORIZON, DEFAULT_LOOKBACK};

/// Default decay half-life of every event effect. A week-long effect outlasts
/// the 7-day rolling window, so its future course is not already written in
/// the smoothed series.
pub const DEFAULT_HALF_LIFE_DAYS: f64 = 7.0;

/// How one event type moves clicks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSpec {
    /// +1 or -1.
    pub direction: i8,
    /// Log-multiplier per unit of event magnitude.
    pub base_amplitude: f64,
    pub half_life_days: f64,
}

impl EffectSpec {
    const fn new(direction: i8, base_amplitude: f64) -> Self {
        Self {
            direction,
            base_amplitude,
            half_life_days: DEFAULT_HALF_LIFE_DAYS,
        }
    }

    /// Log-multiplier `dt` days after an event of the given magnitude, before
    /// the global effect scale.
    pub fn log_effect(&self, magnitude: f64, dt: f64) -> f64 {
        if dt < 0.0 {
            return 0.0;
        }
        f64::from(self.direction)
            * self.base_amplitude
            * magnitude
            * libm::exp2(-dt / self.half_life_days)
    }
}

/// Per-event-type effect table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectKernel {
    pub effects: BTreeMap<EventType, EffectSpec>,
}

impl Default for EffectKernel {
    fn default() -> Self {
        use EventType::*;
        let effects = [
            (KeywordAdded, EffectSpec::new(1, 0.002)),
            (KeywordRemoved, EffectSpec::new(-1, 0.003)),
            (KeywordPaused, EffectSpec::new(-1, 0.003)),
            (AdTextChanged, EffectSpec::new(1, 0.03)),
            (HeadlineModified, EffectSpec::new(1, 0.03)),
            (BudgetAdjusted, EffectSpec::new(-1, 0.008)),
            (BidStrategyChanged, EffectSpec::new(-1, 0.15)),
            (BidValueUpdated, EffectSpec::new(1, 0.006)),
            (CpaTargetChanged, EffectSpec::new(-1, 0.006)),
            (AssetCreated, EffectSpec::new(1, 0.04)),
        ]
        .into_iter()
        .collect();
        Self { effects }
    }
}

impl EffectKernel {
    pub fn spec(&self, t: EventType) -> EffectSpec {
        self.effects.get(&t).copied().unwrap_or(EffectSpec {
            direction: 1,
            base_amplitude: 0.0,
            half_life_days: DEFAULT_HALF_LIFE_DAYS,
        })
    }

    /// Log-multiplier of `event` observed `dt` days after it happened.
    pub fn log_effect(&self, event: &ChangeEvent, dt: f64) -> f64 {
        self.spec(event.event_type)
            .log_effect(event.magnitude.unwrap_or(1.0), dt)
    }

    /// The same kernel with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut k = self.clone();
        k.effects
            .values_mut()
            .for_each(|s| s.base_amplitude *= factor);
        k
    }

    /// The same kernel with every half-life set to `days`.
    pub fn with_half_life(&self, days: f64) -> Self {
        let mut k = self.clone();
        k.effects.values_mut().for_each(|s| s.half_life_days = days);
        k
    }

    fn validate(&self) -> Result<()> {
        for (t, s) in &self.effects {
            if !(s.half_life_days > 0.0 && s.half_life_days.is_finite()) {
                return Err(invalid!("half_life_days for {t} must be positive"));
            }
            if !s.base_amplitude.is_finite() {
                return Err(invalid!("amplitude for {t} must be finite"));
            }
            if s.direction != 1 && s.direction != -1 {
                return Err(invalid!("direction for {t} must be +1 or -1"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub num_campaigns: usize,
    pub days_per_campaign: usize,
    /// Probability that a day carries a change event.
    pub event_rate: f64,
    pub event_type_weights: BTreeMap<EventType, f64>,
    pub effect_scale: f64,
    /// Relative std of the multiplicative daily noise.
    pub noise_std: f64,
    pub base_seed: u64,
    pub campaign_type_weights: BTreeMap<AdType, f64>,
    pub bidding_weights: BTreeMap<BiddingStrategy, f64>,
    /// Maximum relative change of the linear trend across the campaign.
    pub trend_strength: f64,
    /// Amplitude of the slow (20-60 day) drift component.
    pub drift_amplitude: f64,
    /// Amplitude of the weekly component.
    pub weekly_amplitude: f64,
    pub rolling_window: usize,
    pub kernel: EffectKernel,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        use EventType::*;
        Self {
            num_campaigns: 20,
            days_per_campaign: 200,
            event_rate: 0.1,
            event_type_weights: [
                (KeywordAdded, 0.20),
                (KeywordRemoved, 0.20),
                (KeywordPaused, 0.12),
                (AdTextChanged, 0.10),
                (HeadlineModified, 0.08),
                (BudgetAdjusted, 0.10),
                (BidStrategyChanged, 0.04),
                (BidValueUpdated, 0.08),
                (CpaTargetChanged, 0.04),
                (AssetCreated, 0.04),
            ]
            .into_iter()
            .collect(),
            effect_scale: 1.0,
            noise_std: 0.2,
            base_seed: 0,
            campaign_type_weights: [
                (AdType::Search, 0.5),
                (AdType::Display, 0.2),
                (AdType::Discovery, 0.15),
                (AdType::Video, 0.15),
            ]
            .into_iter()
            .collect(),
            bidding_weights: [
                (BiddingStrategy::MaximizeConversions, 0.35),
                (BiddingStrategy::Cpa, 0.25),
                (BiddingStrategy::Cpc, 0.2),
                (BiddingStrategy::MaximizeClicks, 0.2),
            ]
            .into_iter()
            .collect(),
            trend_strength: 0.4,
            drift_amplitude: 0.15,
            weekly_amplitude: 0.1,
            rolling_window: DEFAULT_ROLLING_WINDOW,
            kernel: EffectKernel::default(),
        }
    }
}

fn check_weights<K: core::fmt::Debug>(name: &str, w: &BTreeMap<K, f64>) -> Result<()> {
    if w.values().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid!("{name} must be finite and non-negative"));
    }
    if !w.values().any(|v| *v > 0.0) {
        return Err(invalid!("{name} must not be all zero"));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_campaigns == 0 {
            return Err(invalid!("num_campaigns must be positive"));
        }
        let min_days = DEFAULT_LOOKBACK + DEFAULT_HORIZON;
        if self.days_per_campaign < min_days {
            return Err(invalid!("days_per_campaign must be at least {min_days}"));
        }
        if !(0.0..=1.0).contains(&self.event_rate) {
            return Err(invalid!(
                "event_rate must lie in [0, 1], got {}",
                self.event_rate
            ));
        }
        for (name, v) in [
            ("effect_scale", self.effect_scale),
            ("noise_std", self.noise_std),
            ("trend_strength", self.trend_strength),
            ("drift_amplitude", self.drift_amplitude),
            ("weekly_amplitude", self.weekly_amplitude),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid!("{name} must be finite and non-negative, got {v}"));
            }
        }
        if self.rolling_window == 0 {
            return Err(invalid!("rolling_window must be positive"));
        }
        check_weights("event_type_weights", &self.event_type_weights)?;
        check_weights("campaign_type_weights", &self.campaign_type_weights)?;
        check_weights("bidding_weights", &self.bidding_weights)?;
        self.kernel.validate()
    }
}

fn pick<K: Copy>(rng: &mut StreamRng, w: &BTreeMap<K, f64>) -> K {
    let keys: Vec<K> = w.keys().copied().collect();
    let weights: Vec<f64> = w.values().copied().collect();
    // validated: at least one positive weight
    keys[rng::weighted_index(rng, &weights).unwrap_or(0)]
}

fn int_between(rng: &mut StreamRng, lo: u64, hi: u64) -> u64 {
    lo + rng::below(rng, hi - lo + 1)
}

/// Draws a magnitude and a description for an event of type `t`.
fn describe(rng: &mut StreamRng, t: EventType) -> (Option<f64>, String) {
    const MATCH: [&str; 3] = ["phrase", "broad", "exact"];
    const STRATEGIES: [&str; 4] = [
        "target CPA",
        "maximize conversions",
        "maximize clicks",
        "manual CPC",
    ];
    match t {
        EventType::KeywordAdded => {
            let n = int_between(rng, 5, 150);
            let m = MATCH[rng::below(rng, 3) as usize];
            (Some(n as f64), format!("added {n} {m} match keywords"))
        }
        EventType::KeywordRemoved => {
            let n = int_between(rng, 5, 150);
            let m = MATCH[rng::below(rng, 3) as usize];
            (Some(n as f64), format!("removed {n} {m} match keywords"))
        }
        EventType::KeywordPaused => {
            let n = int_between(rng, 5, 120);
            (Some(n as f64), format!("paused {n} keywords"))
        }
        EventType::AdTextChanged => {
            let n = int_between(rng, 1, 10);
            (Some(n as f64), format!("updated ad text on {n} ads"))
        }
        EventType::HeadlineModified => {
            let n = int_between(rng, 1, 5);
            (Some(n as f64), format!("modified {n} ad headlines"))
        }
        EventType::BudgetAdjusted => {
            let p = int_between(rng, 5, 50);
            (Some(p as f64), format!("decreased daily budget by {p}%"))
        }
        EventType::BidStrategyChanged => {
            let s = STRATEGIES[rng::below(rng, 4) as usize];
            (None, format!("changed bid strategy to {s}"))
        }
        EventType::BidValueUpdated => {
            let p = int_between(rng, 5, 40);
            (Some(p as f64), format!("increased max CPC bid by {p}%"))
        }
        EventType::CpaTargetChanged => {
            let p = int_between(rng, 5, 40);
            (Some(p as f64), format!("increased target CPA by {p}%"))
        }
        EventType::AssetCreated => {
            let n = int_between(rng, 1, 5);
            (Some(n as f64), format!("created {n} new image assets"))
        }
    }
}

pub fn campaign_id(index: usize) -> String {
    format!("camp-{index:03}")
}

/// The event-free click series of campaign `index`.
pub fn base_series(config: &GeneratorConfig, index: usize) -> Vec<f64> {
    let mut r = rng::stream_rng(config.base_seed, &[index as u64, stream::BASE_SERIES]);
    let days = config.days_per_campaign;
    let level = libm::exp(rng::uniform_range(
        &mut r,
        libm::log(200.0),
        libm::log(5000.0),
    ));
    let slope = rng::uniform_range(&mut r, -1.0, 1.0) * config.trend_strength / days as f64;
    let weekly_phase = rng::uniform_range(&mut r, 0.0, TAU);
    let drift_period = rng::uniform_range(&mut r, 20.0, 60.0);
    let drift_phase = rng::uniform_range(&mut r, 0.0, TAU);
    let mid = days as f64 / 2.0;
    (0..days)
        .map(|t| {
            let tf = t as f64;
            let shape = 1.0
                + slope * (tf - mid)
                + config.drift_amplitude * libm::sin(TAU * tf / drift_period + drift_phase)
                + config.weekly_amplitude * libm::sin(TAU * tf / 7.0 + weekly_phase)
                + config.noise_std * rng::standard_normal(&mut r);
            (level * shape).max(0.0)
        })
        .collect()
}

/// Change events of campaign `index`: at most one per day, with probability
/// `event_rate`.
pub fn sample_events(config: &GeneratorConfig, index: usize) -> Vec<ChangeEvent> {
    let mut r = rng::stream_rng(config.base_seed, &[index as u64, stream::EVENTS]);
    let mut events = Vec::new();
    for day in 0..config.days_per_campaign {
        // Always consume the same draws per day so event_rate does not shift
        // the stream for later days.
        let u = rng::uniform(&mut r);
        let t = pick(&mut r, &config.event_type_weights);
        let (magnitude, description) = describe(&mut r, t);
        if u < config.event_rate {
            events.push(ChangeEvent {
                day_index: day,
                event_type: t,
                description,
                magnitude,
            });
        }
    }
    events
}

/// Multiplies `base` by the decaying effect of every event.
pub fn apply_effects(
    base: &[f64],
    events: &[ChangeEvent],
    kernel: &EffectKernel,
    effect_scale: f64,
) -> Vec<f64> {
    base.iter()
        .enumerate()
        .map(|(t, &b)| {
            let log_m: f64 = events
                .iter()
                .filter(|e| e.day_index <= t)
                .map(|e| kernel.log_effect(e, (t - e.day_index) as f64))
                .sum::<f64>()
                * effect_scale;
            (b * libm::exp(log_m)).max(0.0)
        })
        .collect()
}

pub fn generate_raw_campaign(config: &GeneratorConfig, index: usize) -> Result<RawCampaign> {
    config.validate()?;
    let mut attrs = rng::stream_rng(config.base_seed, &[index as u64, stream::ATTRIBUTES]);
    let ad_type = pick(&mut attrs, &config.campaign_type_weights);
    let bidding_strategy = pick(&mut attrs, &config.bidding_weights);
    let base = base_series(config, index);
    let events = sample_events(config, index);
    let raw_clicks = apply_effects(&base, &events, &config.kernel, config.effect_scale);
    Ok(RawCampaign {
        campaign_id: campaign_id(index),
        ad_type,
        bidding_strategy,
        raw_clicks,
        events,
    })
}

/// Deterministic in `(config, index)`.
pub fn generate_campaign(config: &GeneratorConfig, index: usize) -> Result<CampaignRecord> {
    CampaignRecord::from_raw(generate_raw_campaign(config, index)?, config.rolling_window)
}

pub fn generate_dataset(config: &GeneratorConfig) -> Result<Vec<CampaignRecord>> {
    config.validate()?;
    (0..config.num_campaigns)
        .map(|i| generate_campaign(config, i))
        .collect()
}

/// Mean over campaigns of `Var(raw - counterfactual) / Var(raw)`, where the
/// counterfactual is the same campaign with `effect_scale = 0`.
pub fn effect_variance_share(config: &GeneratorConfig) -> Result<f64> {
    config.validate()?;
    let mut total = 0.0;
    for i in 0..config.num_campaigns {
        let base = base_series(config, i);
        let events = sample_events(config, i);
        let full = apply_effects(&base, &events, &config.kernel, config.effect_scale);
        let diff: Vec<f64> = full.iter().zip(&base).map(|(f, b)| f - b).collect();
        let var_full = variance(&full);
        total += if var_full > 0.0 {
            variance(&diff) / var_full
        } else {
            0.0
        };
    }
    Ok(total / config.num_campaigns as f64)
}

fn variance(v: &[f64]) -> f64 {
    let m = crate::data::mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetStatistics {
    pub campaigns: usize,
    pub total_days: usize,
    pub change_days: usize,
    pub no_change_days: usize,
    pub total_events: usize,
    pub event_types: BTreeMap<EventType, usize>,
    pub campaign_types: BTreeMap<AdType, usize>,
    pub bidding_strategies: BTreeMap<BiddingStrategy, usize>,
}

impl DatasetStatistics {
    pub fn change_fraction(&self) -> f64 {
        if self.total_days == 0 {
            0.0
        } else {
            self.change_days as f64 / self.total_days as f64
        }
    }
}

/// Change vs. no-change day counts and categorical histograms.
pub fn dataset_statistics(campaigns: &[CampaignRecord]) -> DatasetStatistics {
    let mut s = DatasetStatistics {
        campaigns: campaigns.len(),
        ..Default::default()
    };
    for c in campaigns {
        s.total_days += c.len();
        let changed = c
            .day_texts
            .iter()
            .filter(|t| *t != crate::data::NO_CHANGES)
            .count();
        s.change_days += changed;
        s.no_change_days += c.len() - changed;
        s.total_events += c.events.len();
        for e in &c.events {
            *s.event_types.entry(e.event_type).or_default() += 1;
        }
        *s.campaign_types.entry(c.ad_type).or_default() += 1;
        *s.bidding_strategies.entry(c.bidding_strategy).or_default() += 1;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::NO_CHANGES;

    fn small(seed: u64) -> GeneratorConfig {
        GeneratorConfig {
            num_campaigns: 3,
            days_per_campaign: 60,
            base_seed: seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        let cfg = small(42);
        assert_eq!(
            generate_campaign(&cfg, 1).unwrap(),
            generate_campaign(&cfg, 1).unwrap()
        );
        assert_ne!(
            generate_campaign(&cfg, 1).unwrap(),
            generate_campaign(&cfg, 2).unwrap()
        );
    }

    #[test]
    fn zero_event_rate_has_no_changes() {
        let cfg = GeneratorConfig {
            event_rate: 0.0,
            ..small(1)
        };
        let c = generate_campaign(&cfg, 0).unwrap();
        assert!(c.events.is_empty());
        assert!(c.day_texts.iter().all(|t| t == NO_CHANGES));
    }

    #[test]
    fn zero_effect_matches_zero_rate() {
        let a = generate_campaign(
            &GeneratorConfig {
                effect_scale: 0.0,
                event_rate: 0.3,
                ..small(9)
            },
            2,
        )
        .unwrap();
        let b = generate_campaign(
            &GeneratorConfig {
                event_rate: 0.0,
                ..small(9)
            },
            2,
        )
        .unwrap();
        assert!(!a.events.is_empty());
        assert_eq!(a.raw_clicks, b.raw_clicks);
    }

    #[test]
    fn keyword_removal_lowers_following_days() {
        let cfg = small(5);
        let base = base_series(&cfg, 0);
        let event = ChangeEvent {
            day_index: 30,
            event_type: EventType::KeywordRemoved,
            description: "removed 113 phrase match keywords".into(),
            magnitude: Some(113.0),
        };
        let with = apply_effects(&base, core::slice::from_ref(&event), &cfg.kernel, 1.0);
        let without = apply_effects(&base, core::slice::from_ref(&event), &cfg.kernel, 0.0);
        let m = |v: &[f64]| v[31..36].iter().sum::<f64>() / 5.0;
        assert!(m(&with) < m(&without));
        assert_eq!(&with[..30], &without[..30]);
    }

    #[test]
    fn clicks_non_negative_and_normalised() {
        let cfg = GeneratorConfig {
            noise_std: 2.0,
            effect_scale: 5.0,
            ..small(3)
        };
        for c in generate_dataset(&cfg).unwrap() {
            assert!(c.raw_clicks.iter().all(|v| *v >= 0.0));
            assert!(c.clicks.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn statistics_counts() {
        let mut c = generate_campaign(
            &GeneratorConfig {
                event_rate: 0.0,
                days_per_campaign: 19,
                ..small(0)
            },
            0,
        )
        .unwrap()
        .to_raw();
        c.raw_clicks.truncate(10);
        c.events = alloc::vec![
            ChangeEvent {
                day_index: 2,
                event_type: EventType::KeywordAdded,
                description: "a".into(),
                magnitude: None
            },
            ChangeEvent {
                day_index: 7,
                event_type: EventType::AssetCreated,
                description: "b".into(),
                magnitude: None
            },
        ];
        let rec = CampaignRecord::from_raw(c, 7).unwrap();
        let s = dataset_statistics(core::slice::from_ref(&rec));
        assert_eq!((s.change_days, s.no_change_days), (2, 8));
        assert_eq!(s.event_types.values().sum::<usize>(), s.total_events);
    }

    #[test]
    fn sparsity_matches_event_rate() {
        let cfg = GeneratorConfig {
            num_campaigns: 50,
            days_per_campaign: 200,
            event_rate: 0.1,
            ..small(11)
        };
        let s = dataset_statistics(&generate_dataset(&cfg).unwrap());
        assert_eq!(s.total_days, 10_000);
        assert!(
            (0.08..=0.12).contains(&s.change_fraction()),
            "{}",
            s.change_fraction()
        );
        assert_eq!(s.event_types.values().sum::<usize>(), s.total_events);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(GeneratorConfig {
            event_rate: 1.5,
            ..small(0)
        }
        .validate()
        .is_err());
        assert!(GeneratorConfig {
            days_per_campaign: 10,
            ..small(0)
        }
        .validate()
        .is_err());
        let mut cfg = small(0);
        cfg.event_type_weights.values_mut().for_each(|w| *w = 0.0);
        assert!(cfg.validate().is_err());
        let mut cfg = small(0);
        cfg.kernel
            .effects
            .get_mut(&EventType::KeywordAdded)
            .unwrap()
            .half_life_days = 0.0;
        assert!(cfg.validate().is_err());
    }
}
