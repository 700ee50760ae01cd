//! Event-sourced revision log.
//!
//! Every mutation of a project's taxonomy is a [`Revision`]: an ordered,
//! non-empty list of atomic changes applied all-or-nothing. The log keeps a
//! materialized head plus a per-entity index of the revisions mentioning it.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::ChangeError;
use crate::ids::{ProjectId, UserId};
use crate::iri::Iri;
use crate::model::{Axiom, AtomicChange, HierarchyMode, Taxonomy};

/// Where a revision came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Provenance {
    Manual,
    Merge,
    BulkMove,
    BulkAnnotation,
    /// Inverse of the given revision number.
    Revert(u64),
    SeedImport,
}

/// One committed composite change. Serialized as one line of the log file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Revision {
    #[serde(rename = "rev")]
    pub number: u64,
    pub author: UserId,
    #[serde(rename = "ts")]
    pub timestamp: DateTime<Utc>,
    #[serde(rename = "msg")]
    pub message: String,
    #[serde(rename = "prov")]
    pub provenance: Provenance,
    pub changes: Vec<AtomicChange>,
}

impl Revision {
    pub fn mentions(&self, iri: &Iri) -> bool {
        self.changes.iter().any(|c| c.axiom.mentions(iri))
    }
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("a commit needs at least one change")]
    EmptyChangeSet,
    #[error("change {index} failed validation: {reason}")]
    ValidationFailed { index: usize, reason: ChangeError },
    #[error("unknown revision {0}")]
    UnknownRevision(u64),
    #[error("revert conflicts with later edits at {axiom}: {reason}")]
    InverseNotApplicable { axiom: Axiom, reason: ChangeError },
    #[error("log record {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Append-only revision list with its materialized head.
#[derive(Debug, Clone)]
pub struct ProjectLog {
    project: ProjectId,
    root: Iri,
    mode: HierarchyMode,
    revisions: Vec<Revision>,
    head: Taxonomy,
    by_entity: HashMap<Iri, Vec<u64>>,
}

impl ProjectLog {
    pub fn new(project: ProjectId, root: Iri) -> Self {
        Self::with_mode(project, root, HierarchyMode::Tree)
    }

    pub fn with_mode(project: ProjectId, root: Iri, mode: HierarchyMode) -> Self {
        let head = Taxonomy::with_mode(root.clone(), mode);
        ProjectLog { project, root, mode, revisions: Vec::new(), head, by_entity: HashMap::new() }
    }

    /// Rebuilds a log by replaying stored revisions.
    pub fn from_revisions(project: ProjectId, root: Iri, revisions: Vec<Revision>) -> Result<Self, LogError> {
        let mut log = Self::new(project, root);
        for (i, rev) in revisions.into_iter().enumerate() {
            let expected = log.next_number();
            if rev.number != expected {
                return Err(LogError::Corrupt { line: i + 1, message: format!("expected revision {expected}, found {}", rev.number) });
            }
            if rev.changes.is_empty() {
                return Err(LogError::Corrupt { line: i + 1, message: "empty change list".into() });
            }
            log.head
                .apply_all(&rev.changes)
                .map_err(|(index, reason)| LogError::Corrupt { line: i + 1, message: format!("change {index}: {reason}") })?;
            log.push(rev);
        }
        Ok(log)
    }

    pub fn project(&self) -> &ProjectId {
        &self.project
    }

    pub fn root(&self) -> &Iri {
        &self.root
    }

    pub fn head(&self) -> &Taxonomy {
        &self.head
    }

    /// Number of the latest revision (0 when empty).
    pub fn head_revision(&self) -> u64 {
        self.revisions.len() as u64
    }

    pub fn revisions(&self) -> &[Revision] {
        &self.revisions
    }

    pub fn revision(&self, number: u64) -> Result<&Revision, LogError> {
        number
            .checked_sub(1)
            .and_then(|i| self.revisions.get(i as usize))
            .ok_or(LogError::UnknownRevision(number))
    }

    fn next_number(&self) -> u64 {
        self.revisions.len() as u64 + 1
    }

    /// Commits `changes` with the current server time.
    pub fn commit(
        &mut self,
        changes: Vec<AtomicChange>,
        author: UserId,
        message: impl Into<String>,
        provenance: Provenance,
    ) -> Result<&Revision, LogError> {
        self.commit_at(changes, author, message, provenance, Utc::now())
    }

    /// Commits with an explicit clock reading. Timestamps are clamped so
    /// they never go backwards.
    pub fn commit_at(
        &mut self,
        changes: Vec<AtomicChange>,
        author: UserId,
        message: impl Into<String>,
        provenance: Provenance,
        now: DateTime<Utc>,
    ) -> Result<&Revision, LogError> {
        if changes.is_empty() {
            return Err(LogError::EmptyChangeSet);
        }
        self.head
            .apply_all(&changes)
            .map_err(|(index, reason)| LogError::ValidationFailed { index, reason })?;
        if let Err(err) = self.check_no_orphans(&changes) {
            for change in changes.iter().rev() {
                self.head.apply(&change.inverse()).expect("undo of applied change");
            }
            return Err(err);
        }
        let timestamp = match self.revisions.last() {
            Some(prev) if prev.timestamp > now => prev.timestamp,
            _ => now,
        };
        let rev = Revision {
            number: self.next_number(),
            author,
            timestamp,
            message: message.into(),
            provenance,
            changes,
        };
        self.push(rev);
        Ok(self.revisions.last().expect("just pushed"))
    }

    // Every live class touched by the commit must still hang below the root.
    fn check_no_orphans(&self, changes: &[AtomicChange]) -> Result<(), LogError> {
        let head = &self.head;
        for (index, change) in changes.iter().enumerate().rev() {
            for iri in change.axiom.entities() {
                if head.is_declared(iri)
                    && iri != head.root()
                    && !head.is_deprecated(iri)
                    && head.parents(iri).next().is_none()
                {
                    return Err(LogError::ValidationFailed { index, reason: ChangeError::WouldOrphan(iri.clone()) });
                }
            }
        }
        Ok(())
    }

    fn push(&mut self, rev: Revision) {
        for change in &rev.changes {
            for iri in change.axiom.entities() {
                let list = self.by_entity.entry(iri.clone()).or_default();
                if list.last() != Some(&rev.number) {
                    list.push(rev.number);
                }
            }
        }
        self.revisions.push(rev);
    }

    /// Commits the inverse of revision `number`: inverted changes in reverse
    /// order, with provenance `Revert(number)`.
    pub fn revert(&mut self, number: u64, author: UserId) -> Result<&Revision, LogError> {
        self.revert_at(number, author, Utc::now())
    }

    pub fn revert_at(&mut self, number: u64, author: UserId, now: DateTime<Utc>) -> Result<&Revision, LogError> {
        let target = self.revision(number)?;
        let inverse: Vec<AtomicChange> = target.changes.iter().rev().map(AtomicChange::inverse).collect();
        let message = format!("Revert revision {number}: {}", target.message);
        match self.commit_at(inverse.clone(), author, message, Provenance::Revert(number), now) {
            Err(LogError::ValidationFailed { index, reason }) => {
                Err(LogError::InverseNotApplicable { axiom: inverse[index].axiom.clone(), reason })
            }
            other => other,
        }
    }

    /// Revisions in descending number order; with a filter, only those
    /// touching the entity.
    pub fn history(&self, filter: Option<&Iri>) -> Vec<&Revision> {
        match filter {
            None => self.revisions.iter().rev().collect(),
            Some(iri) => self
                .by_entity
                .get(iri)
                .into_iter()
                .flatten()
                .rev()
                .map(|n| &self.revisions[*n as usize - 1])
                .collect(),
        }
    }

    /// One page of [`ProjectLog::history`].
    pub fn history_page(&self, filter: Option<&Iri>, offset: usize, limit: usize) -> Vec<&Revision> {
        match filter {
            None => self.revisions.iter().rev().skip(offset).take(limit).collect(),
            Some(iri) => self
                .by_entity
                .get(iri)
                .into_iter()
                .flatten()
                .rev()
                .skip(offset)
                .take(limit)
                .map(|n| &self.revisions[*n as usize - 1])
                .collect(),
        }
    }

    /// Taxonomy state as of revision `upto` (0 = root only).
    pub fn replay(&self, upto: u64) -> Result<Taxonomy, LogError> {
        if upto > self.head_revision() {
            return Err(LogError::UnknownRevision(upto));
        }
        let mut tax = Taxonomy::with_mode(self.root.clone(), self.mode);
        for rev in &self.revisions[..upto as usize] {
            tax.apply_all(&rev.changes)
                .map_err(|(index, reason)| LogError::ValidationFailed { index, reason })?;
        }
        Ok(tax)
    }
}

/// File-backed log: one JSON revision record per line.
#[derive(Debug)]
pub struct LogFile {
    path: PathBuf,
    file: File,
}

impl LogFile {
    /// Opens (creating if needed) the log at `path` and returns it with the
    /// revisions it already holds.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Revision>), LogError> {
        let path = path.as_ref().to_path_buf();
        let mut revisions = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rev: Revision = serde_json::from_str(&line)
                    .map_err(|e| LogError::Corrupt { line: i + 1, message: e.to_string() })?;
                revisions.push(rev);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok((LogFile { path, file }, revisions))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, rev: &Revision) -> Result<(), LogError> {
        let mut line = encode_record(rev);
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        self.file.sync_data()?;
        Ok(())
    }
}

/// The single-line JSON record for `rev`.
pub fn encode_record(rev: &Revision) -> String {
    serde_json::to_string(rev).expect("revision serializes")
}
