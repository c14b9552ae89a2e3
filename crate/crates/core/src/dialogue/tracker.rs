use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DialogueError;
use crate::corpus::EntitySpan;
use crate::diet::IntentRanking;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventKind {
    SessionStarted,
    UserUttered {
        intent: String,
        entities: Vec<EntitySpan>,
        text: String,
        ranking: IntentRanking,
    },
    BotUttered {
        action: String,
        text: String,
    },
    ActionExecuted {
        action: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub timestamp: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Append-only conversation state for one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tracker {
    pub session_id: String,
    events: Vec<Event>,
    slots: BTreeMap<String, String>,
}

impl Tracker {
    pub fn new(session_id: impl Into<String>) -> Self {
        Tracker {
            session_id: session_id.into(),
            events: Vec::new(),
            slots: BTreeMap::new(),
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Entity type to the value of its most recent mention.
    pub fn slots(&self) -> &BTreeMap<String, String> {
        &self.slots
    }

    pub fn next_timestamp(&self) -> u64 {
        self.events.last().map_or(0, |e| e.timestamp + 1)
    }

    pub fn apply(&mut self, event: Event) -> Result<(), DialogueError> {
        if let Some(last) = self.events.last() {
            if event.timestamp <= last.timestamp {
                return Err(DialogueError::NonMonotonicTimestamp {
                    last: last.timestamp,
                    got: event.timestamp,
                });
            }
        }
        if let EventKind::UserUttered { entities, .. } = &event.kind {
            for e in entities {
                self.slots.insert(e.entity.clone(), e.value.clone());
            }
        }
        self.events.push(event);
        Ok(())
    }

    /// Appends `kind` with the next timestamp.
    pub fn push(&mut self, kind: EventKind) {
        let timestamp = self.next_timestamp();
        self.apply(Event { timestamp, kind }).expect("next timestamp is monotonic");
    }

    /// Rebuilds a tracker, and therefore its slots, from an event list.
    pub fn replay(session_id: impl Into<String>, events: impl IntoIterator<Item = Event>) -> Result<Self, DialogueError> {
        let mut tracker = Tracker::new(session_id);
        for e in events {
            tracker.apply(e)?;
        }
        Ok(tracker)
    }

    pub fn latest_user_message(&self) -> Option<&Event> {
        self.events.iter().rev().find(|e| matches!(e.kind, EventKind::UserUttered { .. }))
    }

    /// One JSON object per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(session_id: impl Into<String>, log: &str) -> Result<Self, DialogueError> {
        let events = log
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str::<Event>(l).map_err(|e| DialogueError::EventLog {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Tracker::replay(session_id, events)
    }
}
