//! A bot project on disk: `nlu.yml`, `domain.yml` and an optional
//! `stories.yml` in one directory. Validation and training share this loader.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::corpus::{
    parse_domain_file, parse_nlu_file, parse_stories_file, validate_project, CorpusError, Domain, StorySet,
    SyntheticCorpus, TrainingSet,
};

pub const NLU_FILE: &str = "nlu.yml";
pub const DOMAIN_FILE: &str = "domain.yml";
pub const STORIES_FILE: &str = "stories.yml";

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{NLU_FILE}: no training examples")]
    NoExamples,
    #[error("{file}: {source}")]
    Corpus {
        file: &'static str,
        #[source]
        source: CorpusError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Project {
    pub training: TrainingSet,
    pub domain: Domain,
    pub stories: StorySet,
}

fn read(path: &Path) -> Result<String, ProjectError> {
    std::fs::read_to_string(path).map_err(|e| ProjectError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

impl Project {
    pub fn load(dir: &Path) -> Result<Self, ProjectError> {
        let nlu = read(&dir.join(NLU_FILE))?;
        let domain = read(&dir.join(DOMAIN_FILE))?;
        let stories_path = dir.join(STORIES_FILE);
        let stories = if stories_path.exists() {
            Some(read(&stories_path)?)
        } else {
            None
        };
        Self::from_sources(&nlu, &domain, stories.as_deref())
    }

    pub fn from_sources(nlu: &str, domain: &str, stories: Option<&str>) -> Result<Self, ProjectError> {
        let at = |file| move |source| ProjectError::Corpus { file, source };
        let training = parse_nlu_file(nlu).map_err(at(NLU_FILE))?;
        if training.is_empty() {
            return Err(ProjectError::NoExamples);
        }
        let domain = parse_domain_file(domain).map_err(at(DOMAIN_FILE))?;
        validate_project(&training, &domain).map_err(at(NLU_FILE))?;
        let stories = match stories {
            Some(s) => parse_stories_file(s, &domain, &training).map_err(at(STORIES_FILE))?,
            None => StorySet::default(),
        };
        Ok(Project {
            training,
            domain,
            stories,
        })
    }

    pub fn from_synthetic(corpus: &SyntheticCorpus) -> Result<Self, ProjectError> {
        Self::from_sources(&corpus.nlu, &corpus.domain, Some(&corpus.stories))
    }
}

pub fn write_synthetic(corpus: &SyntheticCorpus, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(NLU_FILE), &corpus.nlu)?;
    std::fs::write(dir.join(DOMAIN_FILE), &corpus.domain)?;
    std::fs::write(dir.join(STORIES_FILE), &corpus.stories)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::generate_synthetic_corpus;

    #[test]
    fn synthetic_round_trip_through_disk() {
        let corpus = generate_synthetic_corpus(5, 4, 4, 1);
        let dir = std::env::temp_dir().join(format!("bnlu-project-{}", std::process::id()));
        write_synthetic(&corpus, &dir).unwrap();
        let loaded = Project::load(&dir).unwrap();
        assert_eq!(loaded, Project::from_synthetic(&corpus).unwrap());
        assert_eq!(loaded.training.intents.len(), 4);
        assert_eq!(loaded.stories.stories.len(), 5);

        std::fs::remove_file(dir.join(STORIES_FILE)).unwrap();
        assert!(Project::load(&dir).unwrap().stories.stories.is_empty());
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(Project::load(&dir), Err(ProjectError::Io { .. })));
    }

    #[test]
    fn errors_name_the_file() {
        let corpus = generate_synthetic_corpus(5, 4, 4, 1);
        let bad_stories = format!("{}- story: x\n  steps:\n  - intent: nope\n", corpus.stories);
        let err = Project::from_sources(&corpus.nlu, &corpus.domain, Some(&bad_stories)).unwrap_err();
        assert!(err.to_string().starts_with("stories.yml:"), "{err}");
        let err = Project::from_sources(&corpus.nlu, "version: \"3.1\"\nintents:\n  - greet\n", None).unwrap_err();
        assert!(matches!(err, ProjectError::Corpus { file: NLU_FILE, source: CorpusError::IntentNotInDomain(_) }));
        let err = Project::from_sources("version: \"3.1\"\nnlu:\n", &corpus.domain, None).unwrap_err();
        assert!(matches!(err, ProjectError::NoExamples), "{err}");
    }
}
