use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::block::{self, syntax, Node};
use super::nlu::check_keys;
use super::{CorpusError, Domain, Story, StorySet, TrainingSet};
use crate::dialogue::{ACTION_DEFAULT_FALLBACK, ACTION_LISTEN};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StoryStep {
    /// A user turn; `entities` lists entity types that must be present.
    User { intent: String, entities: Vec<String> },
    Action(String),
}

/// Parses `stories:` and optional `rules:` sections, cross-checking every
/// intent against the training set / domain and every action against the
/// domain.
pub fn parse_stories_file(
    contents: &str,
    domain: &Domain,
    ts: &TrainingSet,
) -> Result<StorySet, CorpusError> {
    let root = block::parse(contents)?;
    check_keys(&root, &["version", "stories", "rules"])?;
    let mut names = HashSet::new();
    let mut set = StorySet::default();
    for (section, key, target) in [
        ("stories", "story", &mut set.stories),
        ("rules", "rule", &mut set.rules),
    ] {
        let Some(node) = root.get(section) else { continue };
        for item in node.as_list()? {
            check_keys(item, &[key, "steps"])?;
            let name = item
                .get(key)
                .ok_or_else(|| syntax(item.line(), format!("expected `- {key}: <name>`")))?
                .as_scalar()?
                .trim()
                .to_string();
            if !names.insert(name.clone()) {
                return Err(CorpusError::DuplicateStory(name));
            }
            let steps = parse_steps(item.get("steps"), &name, item.line())?;
            if key == "rule" {
                let user_turns = steps.iter().filter(|s| matches!(s, StoryStep::User { .. })).count();
                if user_turns != 1 {
                    return Err(syntax(item.line(), format!("rule `{name}` must have exactly one user step")));
                }
            }
            let story = Story { name, steps };
            check_references(&story, domain, ts)?;
            target.push(story);
        }
    }
    Ok(set)
}

fn parse_steps(node: Option<&Node>, name: &str, line: usize) -> Result<Vec<StoryStep>, CorpusError> {
    let node = node.ok_or_else(|| syntax(line, format!("`{name}` has no steps")))?;
    let mut steps = Vec::new();
    for step in node.as_list()? {
        if let Some(intent) = step.get("intent") {
            check_keys(step, &["intent", "entities"])?;
            let entities = match step.get("entities") {
                Some(list) => {
                    let mut e = list
                        .as_list()?
                        .iter()
                        .map(|n| n.as_scalar().map(|s| s.trim().to_string()))
                        .collect::<Result<Vec<_>, _>>()?;
                    e.sort();
                    e.dedup();
                    e
                }
                None => Vec::new(),
            };
            if matches!(steps.last(), Some(StoryStep::User { .. })) {
                return Err(syntax(step.line(), "two consecutive user steps"));
            }
            steps.push(StoryStep::User {
                intent: intent.as_scalar()?.trim().to_string(),
                entities,
            });
        } else if let Some(action) = step.get("action") {
            check_keys(step, &["action"])?;
            if steps.is_empty() {
                return Err(syntax(step.line(), format!("`{name}` must start with a user step")));
            }
            steps.push(StoryStep::Action(action.as_scalar()?.trim().to_string()));
        } else {
            return Err(syntax(step.line(), "expected `- intent:` or `- action:`"));
        }
    }
    if steps.is_empty() {
        return Err(syntax(line, format!("`{name}` has no steps")));
    }
    Ok(steps)
}

fn check_references(story: &Story, domain: &Domain, ts: &TrainingSet) -> Result<(), CorpusError> {
    for step in &story.steps {
        match step {
            StoryStep::User { intent, entities } => {
                if !ts.intents.contains(intent) && !domain.intents.contains(intent) {
                    return Err(CorpusError::UnknownIntentInStory {
                        story: story.name.clone(),
                        intent: intent.clone(),
                    });
                }
                for e in entities {
                    if !ts.entity_types.contains(e) && !domain.entity_types.contains(e) {
                        return Err(CorpusError::UnknownEntityInStory {
                            story: story.name.clone(),
                            entity: e.clone(),
                        });
                    }
                }
            }
            StoryStep::Action(action) => {
                let builtin = action == ACTION_LISTEN || action == ACTION_DEFAULT_FALLBACK;
                if !builtin && !domain.has_action(action) {
                    return Err(CorpusError::UnknownActionInStory {
                        story: story.name.clone(),
                        action: action.clone(),
                    });
                }
            }
        }
    }
    Ok(())
}
