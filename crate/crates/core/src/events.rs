//! Per-project ordered event log feeding the live stream.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    RevisionCommitted,
    CommentPosted,
    TagsChanged,
    SettingsChanged,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::RevisionCommitted => "RevisionCommitted",
            EventKind::CommentPosted => "CommentPosted",
            EventKind::TagsChanged => "TagsChanged",
            EventKind::SettingsChanged => "SettingsChanged",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventEnvelope {
    pub seq: u64,
    pub kind: EventKind,
    pub at: DateTime<Utc>,
    pub payload: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("events after {from} were compacted; oldest retained seq is {oldest}")]
pub struct SeqTooOld {
    pub from: u64,
    pub oldest: u64,
}

/// Gapless sequence starting at 1. Compaction drops a prefix; readers that
/// fall behind it get [`SeqTooOld`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<EventEnvelope>,
    /// Seq of the first retained event minus one.
    compacted_through: u64,
}

impl EventLog {
    pub fn from_events(events: Vec<EventEnvelope>) -> Self {
        let compacted_through = events.first().map_or(0, |e| e.seq - 1);
        EventLog { events, compacted_through }
    }

    pub fn last_seq(&self) -> u64 {
        self.compacted_through + self.events.len() as u64
    }

    pub fn retained(&self) -> &[EventEnvelope] {
        &self.events
    }

    pub fn append(&mut self, kind: EventKind, at: DateTime<Utc>, payload: serde_json::Value) -> &EventEnvelope {
        let seq = self.last_seq() + 1;
        self.events.push(EventEnvelope { seq, kind, at, payload });
        self.events.last().expect("just pushed")
    }

    /// Events with `seq > from`, oldest first.
    pub fn since(&self, from: u64) -> Result<&[EventEnvelope], SeqTooOld> {
        if from < self.compacted_through {
            return Err(SeqTooOld { from, oldest: self.compacted_through + 1 });
        }
        let skip = ((from - self.compacted_through) as usize).min(self.events.len());
        Ok(&self.events[skip..])
    }

    /// Keeps only the newest `keep` events.
    pub fn compact(&mut self, keep: usize) {
        let drop = self.events.len().saturating_sub(keep);
        self.events.drain(..drop);
        self.compacted_through += drop as u64;
    }
}
