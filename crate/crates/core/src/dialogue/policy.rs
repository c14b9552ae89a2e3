use serde::{Deserialize, Serialize};

use super::state::{expand_story, Item};
use super::{ACTION_DEFAULT_FALLBACK, ACTION_LISTEN};
use crate::corpus::{Story, StoryStep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Rule,
    Memoization,
    Ted,
    /// No policy fired; the bot listens.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyPrediction {
    pub action: String,
    pub confidence: f64,
    pub policy: PolicyKind,
}

/// A story window and the action that followed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MemoEntry {
    window: Vec<Item>,
    /// The window is the whole story prefix, so it must also be the whole
    /// conversation.
    from_start: bool,
    action: String,
}

/// Exact recall of training-story continuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoizationPolicy {
    max_history: usize,
    entries: Vec<MemoEntry>,
}

impl MemoizationPolicy {
    pub fn new(stories: &[Story], max_history: usize) -> Self {
        let max_history = max_history.max(1);
        let mut entries = Vec::new();
        for story in stories {
            let items = expand_story(story);
            for (i, item) in items.iter().enumerate() {
                let Item::Action(action) = item else { continue };
                let start = i.saturating_sub(max_history);
                entries.push(MemoEntry {
                    window: items[start..i].to_vec(),
                    from_start: start == 0,
                    action: action.clone(),
                });
            }
        }
        MemoizationPolicy { max_history, entries }
    }

    pub fn max_history(&self) -> usize {
        self.max_history
    }

    /// First matching story in file order wins.
    pub fn predict(&self, history: &[Item]) -> Option<PolicyPrediction> {
        self.entries
            .iter()
            .find(|e| {
                let n = e.window.len();
                let fits = if e.from_start { history.len() == n } else { history.len() >= n };
                fits && e.window.iter().zip(&history[history.len() - n..]).all(|(w, h)| w.admits(h))
            })
            .map(|e| PolicyPrediction {
                action: e.action.clone(),
                confidence: 1.0,
                policy: PolicyKind::Memoization,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Rule {
    trigger: Item,
    actions: Vec<String>,
}

/// Single-turn rules plus the fallback rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulePolicy {
    fallback_intent: String,
    rules: Vec<Rule>,
}

impl RulePolicy {
    /// `rules` must each hold exactly one user step, which the stories
    /// parser already enforces; leading action steps are ignored.
    pub fn new(rules: &[Story], fallback_intent: impl Into<String>) -> Self {
        let rules = rules
            .iter()
            .filter_map(|r| {
                let at = r.steps.iter().position(|s| matches!(s, StoryStep::User { .. }))?;
                let StoryStep::User { intent, entities } = &r.steps[at] else { unreachable!() };
                let actions = r.steps[at + 1..]
                    .iter()
                    .filter_map(|s| match s {
                        StoryStep::Action(a) if a != ACTION_LISTEN => Some(a.clone()),
                        _ => None,
                    })
                    .collect();
                Some(Rule {
                    trigger: Item::User {
                        intent: intent.clone(),
                        entities: entities.clone(),
                    },
                    actions,
                })
            })
            .collect();
        RulePolicy {
            fallback_intent: fallback_intent.into(),
            rules,
        }
    }

    pub fn fallback_intent(&self) -> &str {
        &self.fallback_intent
    }

    /// Continues the rule that matches the latest user turn, then listens.
    pub fn predict(&self, history: &[Item]) -> Option<PolicyPrediction> {
        let at = history.iter().rposition(|i| matches!(i, Item::User { .. }))?;
        let Item::User { intent, .. } = &history[at] else { unreachable!() };
        let done: Vec<&str> = history[at + 1..]
            .iter()
            .filter_map(|i| match i {
                Item::Action(a) => Some(a.as_str()),
                Item::User { .. } => None,
            })
            .collect();
        if done.contains(&ACTION_LISTEN) {
            return None;
        }
        let hit = |action: &str| PolicyPrediction {
            action: action.to_string(),
            confidence: 1.0,
            policy: PolicyKind::Rule,
        };
        if *intent == self.fallback_intent {
            let next = if done.is_empty() { ACTION_DEFAULT_FALLBACK } else { ACTION_LISTEN };
            return Some(hit(next));
        }
        self.rules
            .iter()
            .filter(|r| r.trigger.admits(&history[at]))
            .find(|r| done.len() <= r.actions.len() && r.actions.iter().zip(&done).all(|(a, d)| a == d))
            .map(|r| hit(r.actions.get(done.len()).map_or(ACTION_LISTEN, String::as_str)))
    }
}
