//! Trained bot archive: one `model.json` holding the NLU pipeline (config,
//! fitted vocabularies, parameter tensors, intent and tag lists), the domain
//! and the dialogue policies. Pretrained vector tables are stored by path and
//! reloaded on open.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Domain;
use crate::dialogue::{DialogueError, DialoguePolicies, PolicyConfig};
use crate::diet::LossBreakdown;
use crate::exec::Execution;
use crate::featurize::FeaturizeError;
use crate::pipeline::{NluPipeline, PipelineConfig, PipelineError, Resources};
use crate::post::DEFAULT_FALLBACK_INTENT;
use crate::project::Project;

pub const ARCHIVE_VERSION: u32 = 1;
pub const ARCHIVE_FILE: &str = "model.json";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("malformed archive: {0}")]
    Format(#[from] serde_json::Error),
    #[error("archive version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(transparent)]
    Resources(#[from] FeaturizeError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Dialogue(#[from] DialogueError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArchive {
    pub version: u32,
    pub pipeline: NluPipeline,
    pub domain: Domain,
    pub dialogue: DialoguePolicies,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedBot {
    pub archive: ModelArchive,
    pub loss_curve: Vec<LossBreakdown>,
}

/// Trains the NLU pipeline on every example and the policies on every story.
pub fn train_bot(
    project: &Project,
    config: &PipelineConfig,
    resources: &Resources,
    policy: PolicyConfig,
    exec: Execution,
) -> Result<TrainedBot, ArchiveError> {
    let trained = NluPipeline::train(config, &project.training, resources, exec)?;
    let fallback_intent = config.fallback_intent().unwrap_or(DEFAULT_FALLBACK_INTENT);
    let dialogue = DialoguePolicies::train(&project.stories, &project.domain, fallback_intent, policy, exec)?;
    Ok(TrainedBot {
        archive: ModelArchive {
            version: ARCHIVE_VERSION,
            pipeline: trained.pipeline,
            domain: project.domain.clone(),
            dialogue,
        },
        loss_curve: trained.loss_curve,
    })
}

impl ModelArchive {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("archive serializes")
    }

    pub fn from_json(json: &str) -> Result<Self, ArchiveError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(json)?;
        if header.version != ARCHIVE_VERSION {
            return Err(ArchiveError::Version {
                found: header.version,
                expected: ARCHIVE_VERSION,
            });
        }
        let mut archive: ModelArchive = serde_json::from_str(json)?;
        archive.pipeline.featurizers.reload_resources()?;
        Ok(archive)
    }

    /// Writes `dir/model.json`, creating `dir` if needed.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, ArchiveError> {
        let io = |path: &Path| {
            let path = path.to_path_buf();
            move |e: std::io::Error| ArchiveError::Io {
                message: e.to_string(),
                path,
            }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let path = dir.join(ARCHIVE_FILE);
        std::fs::write(&path, self.to_json()).map_err(io(&path))?;
        Ok(path)
    }

    /// Accepts either the archive directory or the `model.json` path.
    pub fn load(path: &Path) -> Result<Self, ArchiveError> {
        let file = if path.is_dir() { path.join(ARCHIVE_FILE) } else { path.to_path_buf() };
        let json = std::fs::read_to_string(&file).map_err(|e| ArchiveError::Io {
            path: file.clone(),
            message: e.to_string(),
        })?;
        Self::from_json(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic_corpus;
    use crate::pipeline::preset;

    fn quick_bot() -> TrainedBot {
        let project = Project::from_synthetic(&generate_synthetic_corpus(3, 3, 4, 1)).unwrap();
        let mut config = preset("P8").unwrap();
        config.classifier.epochs = 5;
        let policy = PolicyConfig {
            ted_epochs: 3,
            ..PolicyConfig::default()
        };
        train_bot(&project, &config, &Resources::default(), policy, Execution::default()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let bot = quick_bot();
        let json = bot.archive.to_json();
        let back = ModelArchive::from_json(&json).unwrap();
        assert_eq!(back, bot.archive);
        assert_eq!(back.to_json(), json);
        let text = "hello";
        assert_eq!(back.pipeline.parse(text), bot.archive.pipeline.parse(text));
    }

    #[test]
    fn rejects_other_versions() {
        let mut archive = quick_bot().archive;
        archive.version = 99;
        let err = ModelArchive::from_json(&archive.to_json()).unwrap_err();
        assert!(matches!(err, ArchiveError::Version { found: 99, expected: ARCHIVE_VERSION }));
        assert!(matches!(ModelArchive::from_json("{\"version\":1}"), Err(ArchiveError::Format(_))));
    }

    #[test]
    fn save_and_load_from_directory_or_file() {
        let archive = quick_bot().archive;
        let dir = std::env::temp_dir().join(format!("bnlu-archive-{}", std::process::id()));
        let file = archive.save(&dir).unwrap();
        assert_eq!(ModelArchive::load(&dir).unwrap(), archive);
        assert_eq!(ModelArchive::load(&file).unwrap(), archive);
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(ModelArchive::load(&dir), Err(ArchiveError::Io { .. })));
    }
}
