use serde::{Deserialize, Serialize};

use super::policy::{MemoizationPolicy, PolicyKind, PolicyPrediction, RulePolicy};
use super::state::{tracker_items, Item};
use super::ted::{train_ted, TedModel, TurnVocabulary};
use super::tracker::{EventKind, Tracker};
use super::{DialogueError, PolicyConfig, ACTION_DEFAULT_FALLBACK, ACTION_LISTEN};
use crate::corpus::{Domain, StorySet, StoryStep};
use crate::exec::Execution;
use crate::pipeline::{NluPipeline, ParsedMessage};

/// A turn runs at most this many actions before `action_listen`.
pub const MAX_ACTIONS_PER_TURN: usize = 10;

/// The one built-in custom action: repeats the latest user message.
pub const ACTION_ECHO: &str = "action_echo";

const UTTER_DEFAULT: &str = "utter_default";
const BUILTIN_FALLBACK_TEXT: &str = "দুঃখিত, বুঝতে পারিনি। আবার বলবেন? (Sorry, I did not understand.)";

/// Turns raw text into a structured message.
pub trait MessageParser {
    fn parse_message(&self, text: &str) -> ParsedMessage;
}

impl MessageParser for NluPipeline {
    fn parse_message(&self, text: &str) -> ParsedMessage {
        self.parse(text)
    }
}

/// Rule > Memoization > Ted; the first present, non-zero prediction is used
/// unchanged, otherwise the bot listens.
pub fn select_action(predictions: &[Option<PolicyPrediction>]) -> PolicyPrediction {
    let live = |kind: PolicyKind| {
        predictions
            .iter()
            .flatten()
            .find(|p| p.policy == kind && p.confidence > 0.0)
    };
    [PolicyKind::Rule, PolicyKind::Memoization, PolicyKind::Ted]
        .into_iter()
        .find_map(live)
        .cloned()
        .unwrap_or_else(|| PolicyPrediction {
            action: ACTION_LISTEN.to_string(),
            confidence: 0.0,
            policy: PolicyKind::Default,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialoguePolicies {
    pub config: PolicyConfig,
    pub rules: RulePolicy,
    pub memoization: MemoizationPolicy,
    /// Absent when there are no stories to learn from.
    pub ted: Option<TedModel>,
}

fn sorted(mut v: Vec<String>) -> Vec<String> {
    v.sort();
    v.dedup();
    v
}

impl DialoguePolicies {
    pub fn train(
        stories: &StorySet,
        domain: &Domain,
        fallback_intent: &str,
        config: PolicyConfig,
        exec: Execution,
    ) -> Result<Self, DialogueError> {
        config.validate()?;
        let mut intents = domain.intents.clone();
        let mut entity_types = domain.entity_types.clone();
        let mut actions = domain.actions.clone();
        intents.push(fallback_intent.to_string());
        actions.extend([ACTION_LISTEN.to_string(), ACTION_DEFAULT_FALLBACK.to_string()]);
        for step in stories.stories.iter().chain(&stories.rules).flat_map(|s| &s.steps) {
            match step {
                StoryStep::User { intent, entities } => {
                    intents.push(intent.clone());
                    entity_types.extend(entities.iter().cloned());
                }
                StoryStep::Action(a) => actions.push(a.clone()),
            }
        }
        let vocabulary = TurnVocabulary {
            intents: sorted(intents),
            entity_types: sorted(entity_types),
            actions: sorted(actions),
        };
        let ted = if stories.stories.is_empty() {
            None
        } else {
            Some(train_ted(&stories.stories, vocabulary, &config, exec)?)
        };
        Ok(DialoguePolicies {
            rules: RulePolicy::new(&stories.rules, fallback_intent),
            memoization: MemoizationPolicy::new(&stories.stories, config.max_history),
            ted,
            config,
        })
    }

    pub fn predictions(&self, history: &[Item]) -> Vec<Option<PolicyPrediction>> {
        vec![
            self.rules.predict(history),
            self.memoization.predict(history),
            self.ted.as_ref().map(|t| t.predict(history)),
        ]
    }

    pub fn next_action(&self, tracker: &Tracker) -> PolicyPrediction {
        select_action(&self.predictions(&tracker_items(tracker)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotResponse {
    pub action: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnOutcome {
    pub parsed: ParsedMessage,
    /// Actions in execution order, ending with `action_listen`.
    pub actions: Vec<PolicyPrediction>,
    pub responses: Vec<BotResponse>,
}

/// Everything a turn needs besides the session state.
pub struct DialogueEngine<'a> {
    pub parser: &'a dyn MessageParser,
    pub policies: &'a DialoguePolicies,
    pub domain: &'a Domain,
    /// Offsets the response-variant rotation.
    pub variant_seed: u64,
}

impl DialogueEngine<'_> {
    /// Parses `text`, records it, and runs actions until the bot listens.
    pub fn run_turn(&self, tracker: &mut Tracker, text: &str) -> Result<TurnOutcome, DialogueError> {
        if tracker.events().is_empty() {
            tracker.push(EventKind::SessionStarted);
        }
        let parsed = self.parser.parse_message(text);
        tracker.push(EventKind::UserUttered {
            intent: parsed.intent.clone(),
            entities: parsed.entities.clone(),
            text: parsed.text.clone(),
            ranking: parsed.intent_ranking.clone(),
        });
        let mut actions = Vec::new();
        let mut responses = Vec::new();
        for _ in 0..=MAX_ACTIONS_PER_TURN {
            let next = self.policies.next_action(tracker);
            tracker.push(EventKind::ActionExecuted {
                action: next.action.clone(),
            });
            let done = next.action == ACTION_LISTEN;
            if !done {
                if let Some(text) = self.respond(tracker, &next.action) {
                    tracker.push(EventKind::BotUttered {
                        action: next.action.clone(),
                        text: text.clone(),
                    });
                    responses.push(BotResponse {
                        action: next.action.clone(),
                        text,
                    });
                }
            }
            actions.push(next);
            if done {
                return Ok(TurnOutcome {
                    parsed,
                    actions,
                    responses,
                });
            }
        }
        Err(DialogueError::ActionLoopLimit {
            limit: MAX_ACTIONS_PER_TURN,
        })
    }

    /// Text the action utters, if any. Unknown custom actions are no-ops.
    fn respond(&self, tracker: &Tracker, action: &str) -> Option<String> {
        if action == ACTION_ECHO {
            return tracker.latest_user_message().and_then(|e| match &e.kind {
                EventKind::UserUttered { text, .. } => Some(text.clone()),
                _ => None,
            });
        }
        let (name, fallback_text) = if action == ACTION_DEFAULT_FALLBACK {
            (UTTER_DEFAULT, Some(BUILTIN_FALLBACK_TEXT))
        } else {
            (action, None)
        };
        match self.domain.responses.get(name) {
            Some(variants) => {
                let said_before = tracker
                    .events()
                    .iter()
                    .filter(|e| matches!(&e.kind, EventKind::BotUttered { action: a, .. } if a == action))
                    .count() as u64;
                let k = (said_before.wrapping_add(self.variant_seed) % variants.len() as u64) as usize;
                Some(variants[k].clone())
            }
            None => fallback_text.map(str::to_string),
        }
    }
}
