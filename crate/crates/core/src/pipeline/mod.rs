//! Configured NLU pipelines: tokenizer, featurizers, classifier and
//! post-processing, plus the eight shipped presets.

mod config;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{EntitySpan, TrainingSet};
use crate::diet::{self, bio_tag_set, encode_bio, DietError, DietExample, IntentRanking, LossBreakdown, NluModel};
use crate::exec::Execution;
use crate::featurize::{DenseSource, FeaturizeError, FeaturizerChain, FeaturizerSpec, PretrainedTable, RegexPatternSet};
use crate::post::{apply_fallback, fallback_reason, map_synonyms, FallbackConfig, FallbackReason, SynonymTable};

pub use config::{ConfigError, DenseConfig, DenseKind, FeaturizerConfig, PipelineConfig, ReferenceMetrics};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Featurize(#[from] FeaturizeError),
    #[error(transparent)]
    Classifier(#[from] DietError),
    #[error("training set is empty")]
    EmptyTrainingSet,
}

const PRESET_SOURCES: [(&str, &str); 8] = [
    ("P1", include_str!("../../../../presets/p1.cfg")),
    ("P2", include_str!("../../../../presets/p2.cfg")),
    ("P3", include_str!("../../../../presets/p3.cfg")),
    ("P4", include_str!("../../../../presets/p4.cfg")),
    ("P5", include_str!("../../../../presets/p5.cfg")),
    ("P6", include_str!("../../../../presets/p6.cfg")),
    ("P7", include_str!("../../../../presets/p7.cfg")),
    ("P8", include_str!("../../../../presets/p8.cfg")),
];

/// The eight shipped presets in order.
pub fn presets() -> Vec<PipelineConfig> {
    PRESET_SOURCES
        .iter()
        .map(|(_, src)| PipelineConfig::parse(src).expect("shipped presets parse"))
        .collect()
}

/// Looks a preset up by name, case-insensitively.
pub fn preset(name: &str) -> Option<PipelineConfig> {
    PRESET_SOURCES
        .iter()
        .find(|(n, _)| n.eq_ignore_ascii_case(name))
        .map(|(_, src)| PipelineConfig::parse(src).expect("shipped presets parse"))
}

/// External inputs that featurizers may draw on.
#[derive(Debug, Clone)]
pub struct Resources {
    pub regex: RegexPatternSet,
    pub vectors: Option<PretrainedTable>,
}

impl Default for Resources {
    fn default() -> Self {
        Resources {
            regex: RegexPatternSet::builtin(),
            vectors: None,
        }
    }
}

fn featurizer_specs(config: &PipelineConfig, resources: &Resources) -> Vec<FeaturizerSpec> {
    config
        .featurizers
        .iter()
        .map(|f| match f {
            FeaturizerConfig::Regex => FeaturizerSpec::Regex(resources.regex.clone()),
            FeaturizerConfig::LexicalSyntactic => FeaturizerSpec::LexicalSyntactic,
            FeaturizerConfig::CountVector(p) => FeaturizerSpec::CountVector(p.clone()),
            FeaturizerConfig::Dense(d) => FeaturizerSpec::Dense(match (&d.kind, &resources.vectors) {
                (DenseKind::Fasttext, Some(table)) => DenseSource::PretrainedTable(table.clone()),
                _ => DenseSource::HashedNGram { dim: d.dim, seed: d.seed },
            }),
        })
        .collect()
}

/// Structured NLU output for one message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedMessage {
    pub text: String,
    pub intent: String,
    pub confidence: f64,
    pub intent_ranking: IntentRanking,
    pub entities: Vec<EntitySpan>,
    pub fallback: Option<FallbackReason>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NluPipeline {
    pub config: PipelineConfig,
    pub featurizers: FeaturizerChain,
    pub model: NluModel,
    pub synonyms: SynonymTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub pipeline: NluPipeline,
    pub loss_curve: Vec<LossBreakdown>,
}

impl NluPipeline {
    /// Fits featurizers on `train` only and trains the classifier.
    pub fn train(
        config: &PipelineConfig,
        train: &TrainingSet,
        resources: &Resources,
        exec: Execution,
    ) -> Result<TrainedPipeline, PipelineError> {
        config.validate()?;
        if train.is_empty() {
            return Err(PipelineError::EmptyTrainingSet);
        }
        let texts: Vec<&str> = train.examples.iter().map(|e| e.text.as_str()).collect();
        let featurizers = FeaturizerChain::fit(config.tokenizer, featurizer_specs(config, resources), &texts)?;

        let mut intents: Vec<String> = train.examples.iter().map(|e| e.intent.clone()).collect();
        intents.sort();
        intents.dedup();
        let tags = bio_tag_set(&train.entity_types);
        let examples: Vec<DietExample> = exec.map(&train.examples, |ex| {
            let features = featurizers.featurize(&ex.text);
            let tag_ids = encode_bio(&features.tokens, &ex.entities)
                .iter()
                .map(|t| tags.iter().position(|x| x == t).expect("entity type is in the tag set"))
                .collect();
            DietExample {
                intent: intents.binary_search(&ex.intent).expect("intent collected above"),
                tags: tag_ids,
                features,
            }
        });
        let trained = diet::train(&examples, intents, tags, config.classifier.clone(), exec)?;
        let synonyms = if config.synonyms {
            SynonymTable::new(train.synonyms.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        } else {
            SynonymTable::default()
        };
        Ok(TrainedPipeline {
            pipeline: NluPipeline {
                config: config.clone(),
                featurizers,
                model: trained.model,
                synonyms,
            },
            loss_curve: trained.loss_curve,
        })
    }

    pub fn fallback(&self) -> Option<&FallbackConfig> {
        self.config.fallback.as_ref()
    }

    /// Intent labels this pipeline can emit, including the fallback intent.
    pub fn labels(&self) -> Vec<String> {
        let mut labels = self.model.intents.clone();
        if let Some(fb) = self.fallback() {
            if !labels.contains(&fb.fallback_intent_name) {
                labels.push(fb.fallback_intent_name.clone());
            }
        }
        labels
    }

    pub fn parse(&self, text: &str) -> ParsedMessage {
        let features = self.featurizers.featurize(text);
        let prediction = self.model.predict(&features).expect("features come from the pipeline's own chain");
        let chars: Vec<char> = text.chars().collect();
        let entities: Vec<EntitySpan> = prediction
            .entities
            .into_iter()
            .map(|e| EntitySpan {
                value: chars[e.start..e.end].iter().collect(),
                ..e
            })
            .collect();
        let entities = map_synonyms(&entities, &self.synonyms);
        let (ranking, reason) = match self.fallback() {
            Some(fb) => (apply_fallback(&prediction.ranking, fb), fallback_reason(&prediction.ranking, fb)),
            None => (prediction.ranking, None),
        };
        let (intent, confidence) = ranking.top().map(|(n, c)| (n.to_string(), c)).unwrap_or_default();
        ParsedMessage {
            text: text.to_string(),
            intent,
            confidence,
            intent_ranking: ranking,
            entities,
            fallback: reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_mirror_the_component_table() {
        let all = presets();
        assert_eq!(all.iter().map(|p| p.name.as_str()).collect::<Vec<_>>(), ["P1", "P2", "P3", "P4", "P5", "P6", "P7", "P8"]);
        let keys = |p: &PipelineConfig| p.featurizers.iter().map(FeaturizerConfig::key).collect::<Vec<_>>().join("+");
        let sparse = "regex+lexical_syntactic+count_vector";
        assert_eq!(keys(&all[0]), sparse);
        assert_eq!(keys(&all[1]), sparse);
        assert_eq!(keys(&all[2]), sparse);
        assert_eq!(keys(&all[3]), format!("{sparse}+dense"));
        assert_eq!(keys(&all[4]), "lexical_syntactic+count_vector+dense");
        assert_eq!(keys(&all[5]), "lexical_syntactic+count_vector+dense");
        assert_eq!(keys(&all[6]), "dense+lexical_syntactic+count_vector");
        assert_eq!(keys(&all[7]), "dense+regex+lexical_syntactic+count_vector");

        use crate::tokenize::TokenizerKind::*;
        let tok: Vec<_> = all.iter().map(|p| p.tokenizer).collect();
        assert_eq!(tok, [Whitespace, BanglaCustom, Whitespace, Whitespace, Whitespace, BanglaCustom, BanglaCustom, BanglaCustom]);
        for (i, p) in all.iter().enumerate() {
            assert_eq!(p.synonyms, i >= 2, "{}", p.name);
            assert_eq!(p.fallback.is_some(), i >= 2, "{}", p.name);
            assert_eq!(p.classifier.epochs, 500);
            assert_eq!(p.classifier.learning_rate, 0.05);
            if let Some(fb) = &p.fallback {
                assert_eq!((fb.threshold, fb.ambiguity_threshold), (0.3, 0.1));
            }
            for f in &p.featurizers {
                if let FeaturizerConfig::CountVector(c) = f {
                    assert_eq!((c.min_ngram, c.max_ngram), (1, 4));
                }
                if let FeaturizerConfig::Dense(d) = f {
                    let expected = if i >= 6 { DenseKind::LmStandin } else { DenseKind::Fasttext };
                    assert_eq!(d.kind, expected);
                }
            }
        }
        let r = all[7].reference.unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (83.02, 80.82, 83.02, 80.0));
        assert_eq!(all[0].reference.unwrap().f1, 67.75);
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(preset("p6").unwrap().name, "P6");
        assert!(preset("P9").is_none());
    }
}
