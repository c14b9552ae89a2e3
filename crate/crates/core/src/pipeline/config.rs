//! Flat `key = value` pipeline files.
//!
//! ```text
//! # comment
//! name = P1
//! tokenizer = whitespace
//! featurizers = regex, lexical_syntactic, count_vector
//! count_vector.max_ngram = 4
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diet::NluModelConfig;
use crate::featurize::{Analyzer, CountVectorParams};
use crate::post::FallbackConfig;
use crate::tokenize::TokenizerKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenseKind {
    /// Pretrained word vectors when a vector file is supplied, otherwise the
    /// hashed stand-in.
    Fasttext,
    /// Hashed n-gram vectors standing in for a contextual language model.
    LmStandin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseConfig {
    pub kind: DenseKind,
    pub dim: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturizerConfig {
    Regex,
    LexicalSyntactic,
    CountVector(CountVectorParams),
    Dense(DenseConfig),
}

impl FeaturizerConfig {
    pub fn key(&self) -> &'static str {
        match self {
            FeaturizerConfig::Regex => "regex",
            FeaturizerConfig::LexicalSyntactic => "lexical_syntactic",
            FeaturizerConfig::CountVector(_) => "count_vector",
            FeaturizerConfig::Dense(_) => "dense",
        }
    }
}

/// Published metrics for a configuration, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub name: String,
    pub description: String,
    pub tokenizer: TokenizerKind,
    pub featurizers: Vec<FeaturizerConfig>,
    pub classifier: NluModelConfig,
    pub synonyms: bool,
    pub fallback: Option<FallbackConfig>,
    pub reference: Option<ReferenceMetrics>,
}

const KEYS: &[&str] = &[
    "name",
    "description",
    "tokenizer",
    "featurizers",
    "count_vector.analyzer",
    "count_vector.min_ngram",
    "count_vector.max_ngram",
    "count_vector.lowercase",
    "dense.source",
    "dense.dim",
    "dense.seed",
    "classifier.embed_dim",
    "classifier.feedforward_dim",
    "classifier.transformer_layers",
    "classifier.attention_heads",
    "classifier.label_embed_dim",
    "classifier.epochs",
    "classifier.learning_rate",
    "classifier.batch_size",
    "classifier.drop_rate",
    "classifier.weight_decay",
    "classifier.seed",
    "synonyms",
    "fallback",
    "fallback.threshold",
    "fallback.ambiguity_threshold",
    "fallback.intent",
    "reference.accuracy",
    "reference.precision",
    "reference.recall",
    "reference.f1",
];

struct Entries {
    values: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.values.get(key)
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.values.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse().map_err(|_| ConfigError::InvalidValue {
                line: *line,
                key: key.to_string(),
                value: v.clone(),
            }),
        }
    }

    fn invalid(&self, key: &str) -> ConfigError {
        let (line, value) = self.values.get(key).cloned().unwrap_or_default();
        ConfigError::InvalidValue {
            line,
            key: key.to_string(),
            value,
        }
    }
}

impl PipelineConfig {
    pub fn parse(contents: &str) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in contents.lines().enumerate() {
            let line = i + 1;
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let (key, value) = text.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if values.insert(key.to_string(), (line, value.to_string())).is_some() {
                return Err(ConfigError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        let e = Entries { values };

        let name = e.raw("name").ok_or(ConfigError::MissingKey("name"))?.1.clone();
        let tokenizer_raw = &e.raw("tokenizer").ok_or(ConfigError::MissingKey("tokenizer"))?.1;
        let tokenizer = TokenizerKind::from_name(tokenizer_raw).ok_or_else(|| e.invalid("tokenizer"))?;

        let count_defaults = CountVectorParams::default();
        let analyzer = match e.raw("count_vector.analyzer").map(|(_, v)| v.as_str()) {
            None | Some("char_wb") => Analyzer::CharWb,
            Some("word") => Analyzer::Word,
            Some(_) => return Err(e.invalid("count_vector.analyzer")),
        };
        let count = CountVectorParams {
            analyzer,
            min_ngram: e.get("count_vector.min_ngram", count_defaults.min_ngram)?,
            max_ngram: e.get("count_vector.max_ngram", count_defaults.max_ngram)?,
            lowercase: e.get("count_vector.lowercase", count_defaults.lowercase)?,
        };
        let dense_kind = match e.raw("dense.source").map(|(_, v)| v.as_str()) {
            None | Some("fasttext") => DenseKind::Fasttext,
            Some("lm_standin") => DenseKind::LmStandin,
            Some(_) => return Err(e.invalid("dense.source")),
        };
        let dense = DenseConfig {
            kind: dense_kind,
            dim: e.get("dense.dim", 64)?,
            seed: e.get("dense.seed", 7)?,
        };

        let list = &e.raw("featurizers").ok_or(ConfigError::MissingKey("featurizers"))?.1;
        let mut featurizers = Vec::new();
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let f = match item {
                "regex" => FeaturizerConfig::Regex,
                "lexical_syntactic" => FeaturizerConfig::LexicalSyntactic,
                "count_vector" => FeaturizerConfig::CountVector(count.clone()),
                "dense" => FeaturizerConfig::Dense(dense.clone()),
                _ => return Err(e.invalid("featurizers")),
            };
            if featurizers.iter().any(|g: &FeaturizerConfig| g.key() == f.key()) {
                return Err(e.invalid("featurizers"));
            }
            featurizers.push(f);
        }

        let d = NluModelConfig::default();
        let classifier = NluModelConfig {
            embed_dim: e.get("classifier.embed_dim", d.embed_dim)?,
            feedforward_dim: e.get("classifier.feedforward_dim", d.feedforward_dim)?,
            transformer_layers: e.get("classifier.transformer_layers", d.transformer_layers)?,
            attention_heads: e.get("classifier.attention_heads", d.attention_heads)?,
            label_embed_dim: e.get("classifier.label_embed_dim", d.label_embed_dim)?,
            epochs: e.get("classifier.epochs", d.epochs)?,
            learning_rate: e.get("classifier.learning_rate", d.learning_rate)?,
            batch_size: e.get("classifier.batch_size", d.batch_size)?,
            drop_rate: e.get("classifier.drop_rate", d.drop_rate)?,
            weight_decay: e.get("classifier.weight_decay", d.weight_decay)?,
            seed: e.get("classifier.seed", d.seed)?,
        };

        let fb = FallbackConfig::default();
        let fallback = if e.get("fallback", false)? {
            Some(FallbackConfig {
                threshold: e.get("fallback.threshold", fb.threshold)?,
                ambiguity_threshold: e.get("fallback.ambiguity_threshold", fb.ambiguity_threshold)?,
                fallback_intent_name: e.raw("fallback.intent").map(|(_, v)| v.clone()).unwrap_or(fb.fallback_intent_name),
            })
        } else {
            None
        };

        let reference = match e.raw("reference.accuracy") {
            None => None,
            Some(_) => Some(ReferenceMetrics {
                accuracy: e.get("reference.accuracy", 0.0)?,
                precision: e.get("reference.precision", 0.0)?,
                recall: e.get("reference.recall", 0.0)?,
                f1: e.get("reference.f1", 0.0)?,
            }),
        };

        let config = PipelineConfig {
            name,
            description: e.raw("description").map(|(_, v)| v.clone()).unwrap_or_default(),
            tokenizer,
            featurizers,
            classifier,
            synonyms: e.get("synonyms", false)?,
            fallback,
            reference,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.name.is_empty() {
            return Err(ConfigError::Invalid("pipeline name is empty".into()));
        }
        if self.featurizers.is_empty() {
            return Err(ConfigError::Invalid("at least one featurizer is required".into()));
        }
        for f in &self.featurizers {
            match f {
                FeaturizerConfig::CountVector(p) if p.min_ngram == 0 || p.min_ngram > p.max_ngram => {
                    return Err(ConfigError::Invalid(format!("invalid n-gram range {}..={}", p.min_ngram, p.max_ngram)));
                }
                FeaturizerConfig::Dense(d) if d.dim == 0 => {
                    return Err(ConfigError::Invalid("dense.dim must be positive".into()));
                }
                _ => {}
            }
        }
        self.classifier.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if let Some(fb) = &self.fallback {
            fb.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        Ok(())
    }

    /// Renders the config back into the file format; `parse` of the result
    /// yields an equal config.
    pub fn to_cfg(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("name", self.name.clone());
        if !self.description.is_empty() {
            kv("description", self.description.clone());
        }
        kv("tokenizer", self.tokenizer.name().to_string());
        kv(
            "featurizers",
            self.featurizers.iter().map(FeaturizerConfig::key).collect::<Vec<_>>().join(", "),
        );
        for f in &self.featurizers {
            match f {
                FeaturizerConfig::CountVector(p) => {
                    let analyzer = match p.analyzer {
                        Analyzer::CharWb => "char_wb",
                        Analyzer::Word => "word",
                    };
                    kv("count_vector.analyzer", analyzer.into());
                    kv("count_vector.min_ngram", p.min_ngram.to_string());
                    kv("count_vector.max_ngram", p.max_ngram.to_string());
                    kv("count_vector.lowercase", p.lowercase.to_string());
                }
                FeaturizerConfig::Dense(d) => {
                    let source = match d.kind {
                        DenseKind::Fasttext => "fasttext",
                        DenseKind::LmStandin => "lm_standin",
                    };
                    kv("dense.source", source.into());
                    kv("dense.dim", d.dim.to_string());
                    kv("dense.seed", d.seed.to_string());
                }
                _ => {}
            }
        }
        let c = &self.classifier;
        kv("classifier.embed_dim", c.embed_dim.to_string());
        kv("classifier.feedforward_dim", c.feedforward_dim.to_string());
        kv("classifier.transformer_layers", c.transformer_layers.to_string());
        kv("classifier.attention_heads", c.attention_heads.to_string());
        kv("classifier.label_embed_dim", c.label_embed_dim.to_string());
        kv("classifier.epochs", c.epochs.to_string());
        kv("classifier.learning_rate", format!("{:?}", c.learning_rate));
        kv("classifier.batch_size", c.batch_size.to_string());
        kv("classifier.drop_rate", format!("{:?}", c.drop_rate));
        kv("classifier.weight_decay", format!("{:?}", c.weight_decay));
        kv("classifier.seed", c.seed.to_string());
        kv("synonyms", self.synonyms.to_string());
        kv("fallback", self.fallback.is_some().to_string());
        if let Some(fb) = &self.fallback {
            kv("fallback.threshold", format!("{:?}", fb.threshold));
            kv("fallback.ambiguity_threshold", format!("{:?}", fb.ambiguity_threshold));
            kv("fallback.intent", fb.fallback_intent_name.clone());
        }
        if let Some(r) = &self.reference {
            kv("reference.accuracy", format!("{:?}", r.accuracy));
            kv("reference.precision", format!("{:?}", r.precision));
            kv("reference.recall", format!("{:?}", r.recall));
            kv("reference.f1", format!("{:?}", r.f1));
        }
        out
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.classifier.seed = seed;
        self
    }

    pub fn fallback_intent(&self) -> Option<&str> {
        self.fallback.as_ref().map(|f| f.fallback_intent_name.as_str())
    }
}
