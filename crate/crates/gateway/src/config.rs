use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::translit::{IdentityStub, RuleTable, TransliterationClient};

pub const PORT_ENV: &str = "BNLU_PORT";
pub const MODEL_ENV: &str = "BNLU_MODEL";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("invalid gateway config: {0}")]
    Parse(String),
    #[error("{var} must be {expected}, got `{value}`")]
    Env {
        var: &'static str,
        expected: &'static str,
        value: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransliterationKind {
    /// Keeps Latin input as is; right for models trained on both scripts.
    #[default]
    Identity,
    RuleTable,
}

impl TransliterationKind {
    pub fn client(self) -> Box<dyn TransliterationClient> {
        match self {
            TransliterationKind::Identity => Box::new(IdentityStub),
            TransliterationKind::RuleTable => Box::new(RuleTable::builtin()),
        }
    }
}

/// TOML file; every key is optional.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    pub host: String,
    pub port: u16,
    /// Archive directory or `model.json`; without one every model endpoint
    /// answers 503.
    pub model: Option<PathBuf>,
    pub feedback_log: Option<PathBuf>,
    pub transliteration: TransliterationKind,
    /// Offsets response-variant rotation.
    pub variant_seed: u64,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            host: "127.0.0.1".into(),
            port: 5005,
            model: None,
            feedback_log: Some(PathBuf::from("feedback.ndjson")),
            transliteration: TransliterationKind::default(),
            variant_seed: 0,
        }
    }
}

impl GatewayConfig {
    pub fn parse(contents: &str) -> Result<Self, ConfigError> {
        toml::from_str(contents).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let contents = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&contents)
    }

    /// `BNLU_PORT` and `BNLU_MODEL` override the file.
    pub fn apply_env(mut self, var: impl Fn(&str) -> Option<String>) -> Result<Self, ConfigError> {
        if let Some(value) = var(PORT_ENV) {
            self.port = value.trim().parse().map_err(|_| ConfigError::Env {
                var: PORT_ENV,
                expected: "a port number",
                value,
            })?;
        }
        if let Some(value) = var(MODEL_ENV) {
            self.model = Some(PathBuf::from(value));
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_env() {
        let c = GatewayConfig::parse("port = 8080\nmodel = \"m/\"\ntransliteration = \"rule_table\"\n").unwrap();
        assert_eq!((c.port, c.transliteration), (8080, TransliterationKind::RuleTable));
        assert_eq!(c.host, "127.0.0.1");
        let env = |k: &str| match k {
            PORT_ENV => Some("9000".to_string()),
            MODEL_ENV => Some("other".to_string()),
            _ => None,
        };
        let c = c.apply_env(env).unwrap();
        assert_eq!((c.port, c.model.unwrap()), (9000, PathBuf::from("other")));
        assert_eq!(GatewayConfig::default().apply_env(|_| None).unwrap(), GatewayConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(GatewayConfig::parse("prot = 1"), Err(ConfigError::Parse(_))));
        let err = GatewayConfig::default().apply_env(|k| (k == PORT_ENV).then(|| "x".to_string())).unwrap_err();
        assert!(matches!(err, ConfigError::Env { var: PORT_ENV, .. }));
    }
}
