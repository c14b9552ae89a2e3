//! Post-classification steps: entity synonym canonicalization and the
//! fallback classifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::EntitySpan;
use crate::diet::IntentRanking;

pub const DEFAULT_FALLBACK_INTENT: &str = "nlu_fallback";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("fallback thresholds must lie in [0, 1], got {threshold} and {ambiguity_threshold}")]
pub struct InvalidThresholds {
    pub threshold: f64,
    pub ambiguity_threshold: f64,
}

/// Case-folded surface form to canonical value. Every canonical value maps
/// to itself, so mapping is idempotent.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SynonymTable {
    map: BTreeMap<String, String>,
}

impl SynonymTable {
    pub fn new<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut map = BTreeMap::new();
        let mut canonical = Vec::new();
        for (surface, value) in pairs {
            map.insert(surface.to_lowercase(), value.to_string());
            canonical.push(value.to_string());
        }
        for value in canonical {
            map.insert(value.to_lowercase(), value);
        }
        SynonymTable { map }
    }

    pub fn lookup(&self, value: &str) -> Option<&str> {
        self.map.get(&value.to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

pub fn map_synonyms(entities: &[EntitySpan], table: &SynonymTable) -> Vec<EntitySpan> {
    entities
        .iter()
        .map(|e| EntitySpan {
            value: table.lookup(&e.value).map(str::to_string).unwrap_or_else(|| e.value.clone()),
            ..e.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallbackConfig {
    pub threshold: f64,
    pub ambiguity_threshold: f64,
    pub fallback_intent_name: String,
}

impl Default for FallbackConfig {
    fn default() -> Self {
        FallbackConfig {
            threshold: 0.3,
            ambiguity_threshold: 0.1,
            fallback_intent_name: DEFAULT_FALLBACK_INTENT.to_string(),
        }
    }
}

impl FallbackConfig {
    pub fn validate(&self) -> Result<(), InvalidThresholds> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        if ok(self.threshold) && ok(self.ambiguity_threshold) {
            Ok(())
        } else {
            Err(InvalidThresholds {
                threshold: self.threshold,
                ambiguity_threshold: self.ambiguity_threshold,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackReason {
    LowConfidence,
    Ambiguous,
}

pub fn fallback_reason(ranking: &IntentRanking, config: &FallbackConfig) -> Option<FallbackReason> {
    let top = ranking.ranking.first()?.1;
    if top < config.threshold {
        return Some(FallbackReason::LowConfidence);
    }
    match ranking.ranking.get(1) {
        Some(&(_, second)) if top - second < config.ambiguity_threshold => Some(FallbackReason::Ambiguous),
        _ => None,
    }
}

/// Prepends the fallback intent, carrying the displaced top confidence, when
/// the top intent is weak or ambiguous.
pub fn apply_fallback(ranking: &IntentRanking, config: &FallbackConfig) -> IntentRanking {
    match fallback_reason(ranking, config) {
        Some(_) => {
            let mut out = Vec::with_capacity(ranking.ranking.len() + 1);
            out.push((config.fallback_intent_name.clone(), ranking.ranking[0].1));
            out.extend(ranking.ranking.iter().cloned());
            IntentRanking { ranking: out }
        }
        None => ranking.clone(),
    }
}
