//! Training data: NLU examples with entity annotations, the bot domain, and
//! dialogue stories, plus the three text formats they are stored in.

mod block;
mod domain;
mod markup;
mod nlu;
mod split;
mod stories;
mod synthetic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use domain::parse_domain_file;
pub use markup::{parse_entity_markup, render_entity_markup};
pub use nlu::{parse_nlu_file, write_nlu_file};
pub use split::{split_hash, split_train_test};
pub use stories::{parse_stories_file, StoryStep};
pub use synthetic::{generate_synthetic_corpus, SyntheticCorpus};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("syntax error on line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unbalanced entity markup at char {position} in `{markup}`")]
    UnbalancedMarkup { markup: String, position: usize },
    #[error("empty entity name in `{markup}`")]
    EmptyEntityName { markup: String },
    #[error("intent `{intent}` is declared more than once (line {line})")]
    DuplicateIntentBlock { intent: String, line: usize },
    #[error("intent `{intent}` has no examples (line {line})")]
    IntentWithNoExamples { intent: String, line: usize },
    #[error("story `{story}` references unknown intent `{intent}`")]
    UnknownIntentInStory { story: String, intent: String },
    #[error("story `{story}` references unknown action `{action}`")]
    UnknownActionInStory { story: String, action: String },
    #[error("story `{story}` references undeclared entity type `{entity}`")]
    UnknownEntityInStory { story: String, entity: String },
    #[error("duplicate story name `{0}`")]
    DuplicateStory(String),
    #[error("response name `{0}` must start with `utter_`")]
    InvalidResponseName(String),
    #[error("intent `{intent}` has only {count} example(s); splitting needs at least 2")]
    IntentTooSmall { intent: String, count: usize },
    #[error("invalid test fraction {0}; expected 0 < fraction < 1")]
    InvalidFraction(f64),
    #[error("example `{text}` has an entity span outside the text or overlapping another span")]
    InvalidSpan { text: String },
    #[error("example text is empty after stripping markup (line {line})")]
    EmptyExample { line: usize },
    #[error("intent `{0}` appears in the nlu file but is not declared in the domain")]
    IntentNotInDomain(String),
}

/// A typed entity occurrence; offsets are char offsets, `end` exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub entity: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingExample {
    pub text: String,
    pub intent: String,
    pub entities: Vec<EntitySpan>,
}

impl TrainingExample {
    /// Parses one markup line into an example and checks span invariants.
    pub fn from_markup(raw: &str, intent: &str) -> Result<Self, CorpusError> {
        let (text, entities) = parse_entity_markup(raw)?;
        let example = TrainingExample {
            text,
            intent: intent.to_string(),
            entities,
        };
        example.check_spans()?;
        Ok(example)
    }

    pub fn check_spans(&self) -> Result<(), CorpusError> {
        let chars: Vec<char> = self.text.chars().collect();
        let mut last_end = 0;
        for span in &self.entities {
            let ok = span.start < span.end
                && span.end <= chars.len()
                && span.start >= last_end
                && chars[span.start..span.end].iter().collect::<String>() == span.value;
            if !ok {
                return Err(CorpusError::InvalidSpan {
                    text: self.text.clone(),
                });
            }
            last_end = span.end;
        }
        Ok(())
    }

    pub fn markup(&self) -> String {
        render_entity_markup(&self.text, &self.entities)
    }
}

/// Parsed nlu file. `intents` and `entity_types` are sorted.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingSet {
    pub examples: Vec<TrainingExample>,
    pub intents: Vec<String>,
    pub entity_types: Vec<String>,
    /// Surface variant -> canonical value.
    pub synonyms: BTreeMap<String, String>,
}

impl TrainingSet {
    /// Builds a set from examples, deriving sorted intent and entity lists.
    pub fn from_examples(
        examples: Vec<TrainingExample>,
        synonyms: BTreeMap<String, String>,
    ) -> Self {
        let mut intents: Vec<String> = examples.iter().map(|e| e.intent.clone()).collect();
        intents.sort();
        intents.dedup();
        let mut entity_types: Vec<String> = examples
            .iter()
            .flat_map(|e| e.entities.iter().map(|s| s.entity.clone()))
            .collect();
        entity_types.sort();
        entity_types.dedup();
        TrainingSet {
            examples,
            intents,
            entity_types,
            synonyms,
        }
    }

    pub fn examples_for<'a>(&'a self, intent: &'a str) -> impl Iterator<Item = &'a TrainingExample> {
        self.examples.iter().filter(move |e| e.intent == intent)
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Domain {
    pub intents: Vec<String>,
    pub entity_types: Vec<String>,
    pub responses: BTreeMap<String, Vec<String>>,
    /// Every response name plus every custom action, sorted, no duplicates.
    pub actions: Vec<String>,
}

impl Domain {
    pub fn has_action(&self, name: &str) -> bool {
        self.actions.binary_search_by(|a| a.as_str().cmp(name)).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub name: String,
    pub steps: Vec<StoryStep>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StorySet {
    pub stories: Vec<Story>,
    pub rules: Vec<Story>,
}

/// Cross-file checks shared by data validation and training.
pub fn validate_project(
    ts: &TrainingSet,
    domain: &Domain,
) -> Result<(), CorpusError> {
    for intent in &ts.intents {
        if !domain.intents.contains(intent) {
            return Err(CorpusError::IntentNotInDomain(intent.clone()));
        }
    }
    Ok(())
}
