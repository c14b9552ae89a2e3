use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use bnlu_core::dialogue::{EventKind, Tracker};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Wrong,
}

/// One line of the feedback log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackRecord {
    pub session_id: String,
    pub message_index: usize,
    pub verdict: Verdict,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Error)]
pub enum FeedbackError {
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("message index {index} out of range; the session has {count} messages")]
    UnknownMessage { index: usize, count: usize },
    #[error("cannot append to the feedback log: {0}")]
    Log(String),
}

/// Number of user and bot messages in a tracker; feedback indexes these in
/// event order.
pub fn message_count(tracker: &Tracker) -> usize {
    tracker
        .events()
        .iter()
        .filter(|e| matches!(e.kind, EventKind::UserUttered { .. } | EventKind::BotUttered { .. }))
        .count()
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

/// Trackers by session id, each behind its own lock so one session's turns
/// are serialized while different sessions proceed in parallel.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: Mutex<HashMap<String, Arc<Mutex<Tracker>>>>,
    feedback: Mutex<Vec<FeedbackRecord>>,
    feedback_log: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(feedback_log: Option<PathBuf>) -> Self {
        SessionStore {
            feedback_log,
            ..Default::default()
        }
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<Tracker>>> {
        lock(&self.sessions).get(id).cloned()
    }

    pub fn get_or_create(&self, id: &str) -> Arc<Mutex<Tracker>> {
        lock(&self.sessions)
            .entry(id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Tracker::new(id))))
            .clone()
    }

    /// A copy of the session's tracker.
    pub fn snapshot(&self, id: &str) -> Option<Tracker> {
        self.get(id).map(|t| lock(&t).clone())
    }

    pub fn with_tracker<R>(&self, id: &str, f: impl FnOnce(&mut Tracker) -> R) -> R {
        let tracker = self.get_or_create(id);
        let mut guard = lock(&tracker);
        f(&mut guard)
    }

    /// Validates the reference, appends the record to the log file (when one
    /// is configured) and keeps it in memory.
    pub fn record_feedback(&self, id: &str, message_index: usize, verdict: Verdict) -> Result<FeedbackRecord, FeedbackError> {
        let tracker = self.get(id).ok_or_else(|| FeedbackError::UnknownSession(id.to_string()))?;
        let count = message_count(&lock(&tracker));
        if message_index >= count {
            return Err(FeedbackError::UnknownMessage {
                index: message_index,
                count,
            });
        }
        let record = FeedbackRecord {
            session_id: id.to_string(),
            message_index,
            verdict,
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64),
        };
        let mut records = lock(&self.feedback);
        if let Some(path) = &self.feedback_log {
            let line = serde_json::to_string(&record).expect("record serializes");
            std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .and_then(|mut f| writeln!(f, "{line}"))
                .map_err(|e| FeedbackError::Log(format!("{}: {e}", path.display())))?;
        }
        records.push(record.clone());
        Ok(record)
    }

    pub fn feedback(&self) -> Vec<FeedbackRecord> {
        lock(&self.feedback).clone()
    }
}
