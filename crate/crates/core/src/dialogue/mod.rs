//! Dialogue core: per-session trackers, the rule, memoization and learned
//! policies, arbitration between them, and turn execution.

mod engine;
mod policy;
mod state;
mod ted;
mod tracker;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use engine::{
    select_action, BotResponse, DialogueEngine, DialoguePolicies, MessageParser, TurnOutcome, ACTION_ECHO,
    MAX_ACTIONS_PER_TURN,
};
pub use policy::{MemoizationPolicy, PolicyKind, PolicyPrediction, RulePolicy};
pub use state::{expand_story, tracker_items, Item};
pub use ted::{train_ted, TedExample, TedModel, TedParams, TurnVocabulary};
pub use tracker::{Event, EventKind, Tracker};

pub const ACTION_LISTEN: &str = "action_listen";
pub const ACTION_DEFAULT_FALLBACK: &str = "action_default_fallback";

#[derive(Debug, Error)]
pub enum DialogueError {
    #[error("event timestamp {got} does not follow {last}")]
    NonMonotonicTimestamp { last: u64, got: u64 },
    #[error("event log line {line}: {message}")]
    EventLog { line: usize, message: String },
    #[error("no stories to train on")]
    EmptyStorySet,
    #[error("policy training diverged at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("more than {limit} actions in one turn; the policies are cycling")]
    ActionLoopLimit { limit: usize },
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub max_history: usize,
    pub ted_epochs: usize,
    pub ted_learning_rate: f64,
    pub ted_transformer_layers: usize,
    pub ted_embed_dim: usize,
    pub ted_attention_heads: usize,
    pub ted_label_dim: usize,
    pub ted_batch_size: usize,
    /// Random story concatenations per story added to the learned
    /// policy's training data.
    pub augmentation_factor: usize,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            max_history: 5,
            ted_epochs: 200,
            ted_learning_rate: 0.05,
            ted_transformer_layers: 2,
            ted_embed_dim: 32,
            ted_attention_heads: 4,
            ted_label_dim: 20,
            ted_batch_size: 32,
            augmentation_factor: 5,
            seed: 42,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<(), DialogueError> {
        let bad = |m: &str| Err(DialogueError::InvalidConfig(m.to_string()));
        if self.max_history == 0 {
            return bad("max_history must be at least 1");
        }
        if self.ted_attention_heads == 0 || !self.ted_embed_dim.is_multiple_of(self.ted_attention_heads) {
            return bad("ted_embed_dim must be a positive multiple of ted_attention_heads");
        }
        if self.ted_epochs == 0 || self.ted_batch_size == 0 || self.ted_label_dim == 0 {
            return bad("ted_epochs, ted_batch_size and ted_label_dim must be positive");
        }
        if !(self.ted_learning_rate > 0.0 && self.ted_learning_rate.is_finite()) {
            return bad("ted_learning_rate must be positive");
        }
        Ok(())
    }
}
