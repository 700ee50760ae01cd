//! A project: revision log, settings, tags, discussions, export ids, event
//! log and webhook outbox, with every operation gated by the ACL before it
//! touches state.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::authz::{AuthzError, ProjectAcl, Role};
use crate::changelog::{LogError, LogFile, ProjectLog, Provenance, Revision};
use crate::discussions::{CommentSort, DiscussionBoard, DiscussionContext, DiscussionError, DiscussionThread, NotificationEvent, ThreadStatus, WebhookPayload};
use crate::error::UnknownEntity;
use crate::events::{EventEnvelope, EventKind, EventLog, SeqTooOld};
use crate::export::{export, ExportBundle, ExportError, ExportOptions, IdMap};
use crate::ids::{ProjectId, TagId, ThreadId, UserId};
use crate::iri::{Iri, LanguageTag};
use crate::links::{deep_link, project_prefixes, resolve_reference};
use crate::lint::{lint_with, stats, Finding, LintOptions, StatsError, TaxonomyStats};
use crate::model::{AnnotationValue, AtomicChange, Taxonomy};
use crate::multilang::{display_text, missing_languages, resolve_display_name, DisplayLanguageConfig, LangError, ResolvedNames};
use crate::ofn::write_taxonomy;
use crate::refactor::{plan_bulk_annotation_edit, plan_bulk_move, plan_merge, AnnotationAction, AnnotationSelection, MergeRequest, PlanError};
use crate::search::{search, SearchError, SearchHit, SearchQuery};
use crate::seed::{import_seed_into, SeedError, SeedSheet};
use crate::tags::{Tag, TagError, TagRule, TagStore};

#[derive(Debug, Error)]
pub enum ProjectError {
    #[error(transparent)]
    Authz(#[from] AuthzError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error(transparent)]
    Discussion(#[from] DiscussionError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Seed(#[from] SeedError),
    #[error(transparent)]
    UnknownEntity(#[from] UnknownEntity),
    #[error(transparent)]
    SeqTooOld(#[from] SeqTooOld),
    #[error("plan produced no changes")]
    NothingToDo,
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("storage: {0}")]
    Storage(String),
}

impl From<std::io::Error> for ProjectError {
    fn from(e: std::io::Error) -> Self {
        ProjectError::Storage(e.to_string())
    }
}

impl From<serde_json::Error> for ProjectError {
    fn from(e: serde_json::Error) -> Self {
        ProjectError::Storage(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookConfig {
    pub url: String,
}

/// Settings document (`GET/PUT /p/{id}/settings`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSettings {
    pub name: String,
    pub languages: DisplayLanguageConfig,
    #[serde(default)]
    pub webhook: Option<WebhookConfig>,
    #[serde(flatten)]
    pub acl: ProjectAcl,
}

/// Partial settings update; absent fields are left alone.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettingsUpdate {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub languages: Option<DisplayLanguageConfig>,
    /// `Some(None)` clears the webhook.
    #[serde(default, with = "double_option")]
    pub webhook: Option<Option<WebhookConfig>>,
    /// Full replacement of the grant map (owner keeps Manage).
    #[serde(default)]
    pub acl: Option<BTreeMap<UserId, Role>>,
}

mod double_option {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize, S: Serializer>(v: &Option<Option<T>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            None => s.serialize_none(),
            Some(inner) => inner.serialize(s),
        }
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(d: D) -> Result<Option<Option<T>>, D::Error> {
        Option::<T>::deserialize(d).map(Some)
    }
}

/// Webhook retry schedule: `base * 2^attempts`, capped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub base_ms: u64,
    pub max_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { base_ms: 1_000, max_ms: 300_000 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempts: u32) -> Duration {
        let factor = 1u64.checked_shl(attempts.min(40)).unwrap_or(u64::MAX);
        Duration::milliseconds(self.base_ms.saturating_mul(factor).min(self.max_ms) as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OutboxEntry {
    pub id: u64,
    pub url: String,
    pub payload: WebhookPayload,
    pub attempts: u32,
    pub next_attempt: DateTime<Utc>,
    #[serde(default)]
    pub last_error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outbox {
    entries: VecDeque<OutboxEntry>,
    last_id: u64,
    #[serde(default)]
    delivered: u64,
}

impl Outbox {
    pub fn entries(&self) -> impl Iterator<Item = &OutboxEntry> {
        self.entries.iter()
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered
    }

    fn push(&mut self, url: String, payload: WebhookPayload, now: DateTime<Utc>) {
        self.last_id += 1;
        self.entries.push_back(OutboxEntry { id: self.last_id, url, payload, attempts: 0, next_attempt: now, last_error: None });
    }

    /// Entries whose next attempt is due.
    pub fn due(&self, now: DateTime<Utc>) -> Vec<OutboxEntry> {
        self.entries.iter().filter(|e| e.next_attempt <= now).cloned().collect()
    }

    pub fn mark_delivered(&mut self, id: u64) -> bool {
        let before = self.entries.len();
        self.entries.retain(|e| e.id != id);
        let removed = self.entries.len() < before;
        if removed {
            self.delivered += 1;
        }
        removed
    }

    pub fn mark_failed(&mut self, id: u64, error: String, now: DateTime<Utc>, policy: &RetryPolicy) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.id == id) {
            e.next_attempt = now + policy.delay(e.attempts);
            e.attempts += 1;
            e.last_error = Some(error);
        }
    }
}

/// Everything the entity page shows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityView {
    pub iri: Iri,
    pub names: ResolvedNames,
    pub deprecated: bool,
    pub parents: Vec<EntityRef>,
    /// Root-first path of ancestors.
    pub breadcrumb: Vec<EntityRef>,
    pub children: Vec<EntityRef>,
    pub annotations: Vec<AnnotationEntry>,
    pub tags: Vec<Tag>,
    pub missing_languages: BTreeSet<LanguageTag>,
    pub deep_link: String,
    pub thread_ids: Vec<ThreadId>,
    pub revision: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EntityRef {
    pub iri: Iri,
    pub name: String,
    pub child_count: usize,
    pub deprecated: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnotationEntry {
    pub property: Iri,
    pub value: AnnotationValue,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectSummary {
    pub id: ProjectId,
    pub name: String,
    pub root: Iri,
    pub role: Role,
    pub head_revision: u64,
}

/// Receives each event as it is appended, under the project's writer.
pub type EventSink = Box<dyn FnMut(&EventEnvelope) + Send + Sync>;

pub type Clock = Arc<dyn Fn() -> DateTime<Utc> + Send + Sync>;

#[derive(Serialize, Deserialize)]
struct StateFile {
    root: Iri,
    settings: ProjectSettings,
    tags: TagStore,
    board: DiscussionBoard,
    ids: IdMap,
    outbox: Outbox,
}

struct Storage {
    dir: PathBuf,
    log: LogFile,
    events: File,
}

impl Storage {
    fn write_state(&self, state: &StateFile) -> Result<(), ProjectError> {
        let tmp = self.dir.join("state.json.tmp");
        fs::write(&tmp, serde_json::to_vec_pretty(state)?)?;
        fs::rename(&tmp, self.dir.join("state.json"))?;
        Ok(())
    }

    fn append_event(&mut self, e: &EventEnvelope) -> Result<(), ProjectError> {
        let mut line = serde_json::to_string(e)?;
        line.push('\n');
        self.events.write_all(line.as_bytes())?;
        self.events.flush()?;
        Ok(())
    }
}

pub struct Project {
    id: ProjectId,
    settings: ProjectSettings,
    log: ProjectLog,
    tags: TagStore,
    board: DiscussionBoard,
    ids: IdMap,
    events: EventLog,
    outbox: Outbox,
    storage: Option<Storage>,
    sink: Option<EventSink>,
    clock: Clock,
}

impl std::fmt::Debug for Project {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Project").field("id", &self.id).field("head", &self.log.head_revision()).finish_non_exhaustive()
    }
}

impl Project {
    /// New in-memory project owned by `owner`.
    pub fn new(id: ProjectId, name: impl Into<String>, root: Iri, owner: UserId) -> Self {
        let settings = ProjectSettings {
            name: name.into(),
            languages: DisplayLanguageConfig::default(),
            webhook: None,
            acl: ProjectAcl::new(id.clone(), owner),
        };
        Project {
            log: ProjectLog::new(id.clone(), root),
            id,
            settings,
            tags: TagStore::default(),
            board: DiscussionBoard::default(),
            ids: IdMap::default(),
            events: EventLog::default(),
            outbox: Outbox::default(),
            storage: None,
            sink: None,
            clock: Arc::new(Utc::now),
        }
    }

    /// New project persisted under `dir` (created; must not hold a project).
    pub fn create_in(dir: impl AsRef<Path>, id: ProjectId, name: impl Into<String>, root: Iri, owner: UserId) -> Result<Self, ProjectError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        if dir.join("state.json").exists() {
            return Err(ProjectError::Storage(format!("{} already holds a project", dir.display())));
        }
        let mut project = Project::new(id, name, root, owner);
        project.storage = Some(open_storage(&dir)?.0);
        project.save_state()?;
        Ok(project)
    }

    /// Loads a project persisted by [`Project::create_in`].
    pub fn open(dir: impl AsRef<Path>, id: ProjectId) -> Result<Self, ProjectError> {
        let dir = dir.as_ref().to_path_buf();
        let state: StateFile = serde_json::from_slice(&fs::read(dir.join("state.json"))?)?;
        let (storage, revisions, events) = open_storage(&dir)?;
        let log = ProjectLog::from_revisions(id.clone(), state.root.clone(), revisions)?;
        let mut settings = state.settings;
        settings.acl = settings.acl.normalized(id.clone());
        let mut tags = state.tags;
        tags.refresh(log.head())?;
        Ok(Project {
            id,
            settings,
            log,
            tags,
            board: state.board,
            ids: state.ids,
            events: EventLog::from_events(events),
            outbox: state.outbox,
            storage: Some(storage),
            sink: None,
            clock: Arc::new(Utc::now),
        })
    }

    pub fn set_clock(&mut self, clock: Clock) {
        self.clock = clock;
    }

    pub fn set_event_sink(&mut self, sink: EventSink) {
        self.sink = Some(sink);
    }

    fn now(&self) -> DateTime<Utc> {
        (self.clock)()
    }

    fn save_state(&self) -> Result<(), ProjectError> {
        if let Some(storage) = &self.storage {
            storage.write_state(&StateFile {
                root: self.log.root().clone(),
                settings: self.settings.clone(),
                tags: self.tags.clone(),
                board: self.board.clone(),
                ids: self.ids.clone(),
                outbox: self.outbox.clone(),
            })?;
        }
        Ok(())
    }

    fn emit(&mut self, kind: EventKind, payload: serde_json::Value) -> Result<u64, ProjectError> {
        let now = self.now();
        let event = self.events.append(kind, now, payload).clone();
        if let Some(storage) = &mut self.storage {
            storage.append_event(&event)?;
        }
        if let Some(sink) = &mut self.sink {
            sink(&event);
        }
        Ok(event.seq)
    }

    // ---- accessors (callers are trusted; HTTP reads go through `view`) ----

    pub fn id(&self) -> &ProjectId {
        &self.id
    }

    pub fn head(&self) -> &Taxonomy {
        self.log.head()
    }

    pub fn log(&self) -> &ProjectLog {
        &self.log
    }

    pub fn settings(&self) -> &ProjectSettings {
        &self.settings
    }

    pub fn acl(&self) -> &ProjectAcl {
        &self.settings.acl
    }

    pub fn languages(&self) -> &DisplayLanguageConfig {
        &self.settings.languages
    }

    pub fn tags(&self) -> &TagStore {
        &self.tags
    }

    pub fn board(&self) -> &DiscussionBoard {
        &self.board
    }

    pub fn events(&self) -> &EventLog {
        &self.events
    }

    pub fn outbox(&self) -> &Outbox {
        &self.outbox
    }

    pub fn id_map(&self) -> &IdMap {
        &self.ids
    }

    pub fn summary(&self, user: &UserId) -> Option<ProjectSummary> {
        Some(ProjectSummary {
            id: self.id.clone(),
            name: self.settings.name.clone(),
            root: self.log.root().clone(),
            role: self.acl().role_of(user)?,
            head_revision: self.log.head_revision(),
        })
    }

    /// Checks View for read endpoints.
    pub fn view(&self, actor: &UserId) -> Result<&Self, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(self)
    }

    // ---- taxonomy mutations (Edit) ----

    fn commit_planned(&mut self, actor: &UserId, changes: Vec<AtomicChange>, message: String, provenance: Provenance) -> Result<Revision, ProjectError> {
        if changes.is_empty() {
            return Err(ProjectError::NothingToDo);
        }
        let now = self.now();
        let rev = self.log.commit_at(changes, actor.clone(), message, provenance, now)?.clone();
        self.after_revision(&rev)?;
        Ok(rev)
    }

    fn after_revision(&mut self, rev: &Revision) -> Result<(), ProjectError> {
        if let Some(storage) = &mut self.storage {
            storage.log.append(rev)?;
        }
        self.emit(EventKind::RevisionCommitted, serde_json::to_value(rev)?)?;
        let before = self.tags.assignments().clone();
        if self.tags.after_commit(self.log.head(), &rev.changes)? {
            let entities = changed_entities(&before, self.tags.assignments());
            self.emit(EventKind::TagsChanged, json!({ "revision": rev.number, "entities": entities }))?;
        }
        Ok(())
    }

    pub fn commit(&mut self, actor: &UserId, changes: Vec<AtomicChange>, message: &str) -> Result<Revision, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        if changes.is_empty() {
            return Err(LogError::EmptyChangeSet.into());
        }
        self.commit_planned(actor, changes, message.to_string(), Provenance::Manual)
    }

    pub fn merge(&mut self, actor: &UserId, req: &MergeRequest) -> Result<Revision, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let changes = plan_merge(self.log.head(), req)?;
        let message = if req.commit_message.trim().is_empty() { format!("Merge into {}", req.target) } else { req.commit_message.clone() };
        self.commit_planned(actor, changes, message, Provenance::Merge)
    }

    pub fn bulk_move(&mut self, actor: &UserId, entities: &BTreeSet<Iri>, target: &Iri, message: &str) -> Result<Revision, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let changes = plan_bulk_move(self.log.head(), entities, target)?;
        let message = if message.trim().is_empty() { format!("Move {} entities under {target}", entities.len()) } else { message.to_string() };
        self.commit_planned(actor, changes, message, Provenance::BulkMove)
    }

    /// Returns the revision plus the additions skipped as duplicates.
    pub fn bulk_annotate(
        &mut self,
        actor: &UserId,
        selection: &AnnotationSelection,
        action: &AnnotationAction,
        message: &str,
    ) -> Result<(Revision, usize, Vec<crate::model::Axiom>), ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let plan = plan_bulk_annotation_edit(self.log.head(), selection, action)?;
        let message = if message.trim().is_empty() { format!("Bulk edit of {} annotations", plan.matched) } else { message.to_string() };
        let rev = self.commit_planned(actor, plan.changes, message, Provenance::BulkAnnotation)?;
        Ok((rev, plan.matched, plan.skipped))
    }

    pub fn revert(&mut self, actor: &UserId, number: u64) -> Result<Revision, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let now = self.now();
        let rev = self.log.revert_at(number, actor.clone(), now)?.clone();
        self.after_revision(&rev)?;
        Ok(rev)
    }

    pub fn import_seed(&mut self, actor: &UserId, sheet: &SeedSheet) -> Result<Revision, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let lang = self.settings.languages.default_for_new_entities.clone();
        let changes = import_seed_into(self.log.head(), sheet, &lang)?;
        self.commit_planned(actor, changes, "Seed import".to_string(), Provenance::SeedImport)
    }

    // ---- tags (Edit) ----

    fn tags_changed(&mut self, reason: &str, before: &crate::tags::Assignments) -> Result<(), ProjectError> {
        let entities = changed_entities(before, self.tags.assignments());
        self.save_state()?;
        self.emit(EventKind::TagsChanged, json!({ "reason": reason, "entities": entities }))?;
        Ok(())
    }

    pub fn create_tag(&mut self, actor: &UserId, label: &str, description: Option<String>, color: &str) -> Result<Tag, ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let before = self.tags.assignments().clone();
        let tag = self.tags.define_tag(label, description, color)?.clone();
        self.tags_changed("tagCreated", &before)?;
        Ok(tag)
    }

    pub fn set_tag_rule(&mut self, actor: &UserId, rule: TagRule) -> Result<(), ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let before = self.tags.assignments().clone();
        self.tags.set_rule(self.log.head(), rule)?;
        self.tags_changed("ruleChanged", &before)
    }

    pub fn replace_tag_rules(&mut self, actor: &UserId, rules: Vec<TagRule>) -> Result<(), ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let before = self.tags.assignments().clone();
        self.tags.replace_rules(self.log.head(), rules)?;
        self.tags_changed("rulesReplaced", &before)
    }

    pub fn assign_tag(&mut self, actor: &UserId, entity: &Iri, tag: &TagId) -> Result<(), ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let before = self.tags.assignments().clone();
        self.tags.assign_manual(self.log.head(), entity, tag)?;
        self.tags_changed("manualAssign", &before)
    }

    pub fn unassign_tag(&mut self, actor: &UserId, entity: &Iri, tag: &TagId) -> Result<(), ProjectError> {
        self.acl().require(actor, Role::Edit)?;
        let before = self.tags.assignments().clone();
        self.tags.unassign_manual(self.log.head(), entity, tag)?;
        self.tags_changed("manualUnassign", &before)
    }

    /// Entities carrying `tag`, sorted by display name.
    pub fn tagged(&self, actor: &UserId, tag: &TagId) -> Result<Vec<Iri>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(self.tags.find_by_tag(self.log.head(), tag, &self.settings.languages)?)
    }

    // ---- discussions (Comment) ----

    fn discussion_ctx_run<R>(
        &mut self,
        f: impl FnOnce(&mut DiscussionBoard, &DiscussionContext<'_>, DateTime<Utc>) -> Result<R, DiscussionError>,
    ) -> Result<R, ProjectError> {
        let now = self.now();
        let prefixes = project_prefixes(self.log.root());
        let resolve = |s: &str| resolve_reference(&prefixes, s);
        let ctx = DiscussionContext {
            project: &self.id,
            tax: self.log.head(),
            acl: &self.settings.acl,
            languages: &self.settings.languages,
            resolve: &resolve,
        };
        Ok(f(&mut self.board, &ctx, now)?)
    }

    fn notify(&mut self, event: &NotificationEvent) {
        if let Some(hook) = &self.settings.webhook {
            let now = self.now();
            self.outbox.push(hook.url.clone(), event.webhook.clone(), now);
        }
    }

    pub fn post_comment(
        &mut self,
        actor: &UserId,
        entity: &Iri,
        body: &str,
        thread: Option<ThreadId>,
    ) -> Result<(DiscussionThread, NotificationEvent), ProjectError> {
        let (id, event) = self.discussion_ctx_run(|board, ctx, now| board.post_comment(ctx, entity, actor, body, thread, now))?;
        self.notify(&event);
        self.save_state()?;
        let t = self.board.thread(id)?.clone();
        let comment = t.comments.last().expect("just posted").clone();
        self.emit(
            EventKind::CommentPosted,
            json!({ "threadId": id, "entity": t.entity, "status": t.status, "comment": comment, "recipients": event.recipients }),
        )?;
        Ok((t, event))
    }

    pub fn set_thread_status(&mut self, actor: &UserId, thread: ThreadId, status: ThreadStatus) -> Result<(DiscussionThread, Option<NotificationEvent>), ProjectError> {
        let changes_before = self.board.thread(thread).map(|t| t.status_history.len()).unwrap_or(0);
        let (t, event) = self.discussion_ctx_run(|board, ctx, now| {
            board.set_thread_status(ctx, thread, status, actor, now).map(|(t, e)| (t.clone(), e))
        })?;
        if let Some(e) = &event {
            self.notify(e);
        }
        if t.status_history.len() != changes_before {
            self.save_state()?;
            self.emit(EventKind::CommentPosted, json!({ "threadId": thread, "entity": t.entity, "status": t.status, "actor": actor }))?;
        }
        Ok((t, event))
    }

    pub fn list_threads(&self, actor: &UserId, sort: CommentSort) -> Result<Vec<&DiscussionThread>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(self.board.list(self.log.head(), &self.settings.languages, sort))
    }

    // ---- settings (Manage) ----

    pub fn update_settings(&mut self, actor: &UserId, update: SettingsUpdate) -> Result<&ProjectSettings, ProjectError> {
        self.acl().require(actor, Role::Manage)?;
        let mut next = self.settings.clone();
        if let Some(name) = update.name {
            if name.trim().is_empty() {
                return Err(ProjectError::InvalidSettings("name must not be empty".into()));
            }
            next.name = name;
        }
        if let Some(languages) = update.languages {
            languages.validate()?;
            next.languages = languages;
        }
        if let Some(webhook) = update.webhook {
            if let Some(w) = &webhook {
                if !(w.url.starts_with("http://") || w.url.starts_with("https://")) {
                    return Err(ProjectError::InvalidSettings("webhook url must be http(s)".into()));
                }
            }
            next.webhook = webhook;
        }
        if let Some(grants) = update.acl {
            let owner = next.acl.owner.clone();
            let mut acl = ProjectAcl::new(self.id.clone(), owner.clone());
            for (user, role) in grants {
                acl.grant(&owner, &user, role)?;
            }
            next.acl = acl;
        }
        self.settings = next;
        self.save_state()?;
        self.emit(EventKind::SettingsChanged, serde_json::to_value(&self.settings)?)?;
        Ok(&self.settings)
    }

    pub fn grant(&mut self, actor: &UserId, user: &UserId, role: Role) -> Result<(), ProjectError> {
        self.settings.acl.grant(actor, user, role)?;
        self.save_state()?;
        self.emit(EventKind::SettingsChanged, serde_json::to_value(&self.settings)?)?;
        Ok(())
    }

    pub fn revoke(&mut self, actor: &UserId, user: &UserId) -> Result<(), ProjectError> {
        self.settings.acl.revoke(actor, user)?;
        self.save_state()?;
        self.emit(EventKind::SettingsChanged, serde_json::to_value(&self.settings)?)?;
        Ok(())
    }

    // ---- reads (View) ----

    pub fn entity_view(&self, actor: &UserId, e: &Iri) -> Result<EntityView, ProjectError> {
        self.acl().require(actor, Role::View)?;
        let tax = self.log.head();
        let cfg = &self.settings.languages;
        let names = resolve_display_name(tax, e, cfg)?;
        let entity_ref = |c: &Iri| EntityRef {
            iri: c.clone(),
            name: display_text(tax, c, cfg),
            child_count: tax.child_count(c),
            deprecated: tax.is_deprecated(c),
        };
        let mut children: Vec<EntityRef> = tax.children(e).map(entity_ref).collect();
        children.sort_by(|a, b| (&a.name, &a.iri).cmp(&(&b.name, &b.iri)));
        let mut breadcrumb: Vec<EntityRef> = tax.ancestors(e).iter().map(entity_ref).collect();
        breadcrumb.reverse();
        let required: BTreeSet<LanguageTag> = cfg.primary.iter().chain(&cfg.secondary).cloned().collect();
        Ok(EntityView {
            iri: e.clone(),
            names,
            deprecated: tax.is_deprecated(e),
            parents: tax.parents(e).map(entity_ref).collect(),
            breadcrumb,
            children,
            annotations: tax.annotations(e).map(|(p, v)| AnnotationEntry { property: p.clone(), value: v.clone() }).collect(),
            tags: self.tags.tags_of(e).filter_map(|t| self.tags.tag(t).ok().cloned()).collect(),
            missing_languages: missing_languages(tax, e, &required)?,
            deep_link: deep_link(&self.id, e),
            thread_ids: self.board.threads_for(e).iter().map(|t| t.id).collect(),
            revision: self.log.head_revision(),
        })
    }

    pub fn history(&self, actor: &UserId, entity: Option<&Iri>, offset: usize, limit: usize) -> Result<Vec<&Revision>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(self.log.history_page(entity, offset, limit))
    }

    pub fn search(&self, actor: &UserId, q: &SearchQuery) -> Result<Vec<SearchHit>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(search(self.log.head(), q, &self.settings.languages, self.tags.assignments())?)
    }

    pub fn taxonomy_ofn(&self, actor: &UserId) -> Result<String, ProjectError> {
        self.acl().require(actor, Role::View)?;
        let ontology = Iri::parse(self.log.root().namespace().trim_end_matches(['/', '#']))
            .unwrap_or_else(|_| self.log.root().clone());
        Ok(write_taxonomy(self.log.head(), &ontology))
    }

    pub fn lint(&self, actor: &UserId, opts: LintOptions) -> Result<Vec<Finding>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(lint_with(self.log.head(), opts))
    }

    pub fn stats(&self, actor: &UserId) -> Result<TaxonomyStats, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(stats(self.log.head())?)
    }

    /// Export at `revision` (head when `None`). Newly seen classes get
    /// surrogate ids, which are persisted.
    pub fn export(&mut self, actor: &UserId, opts: ExportOptions, revision: Option<u64>) -> Result<ExportBundle, ProjectError> {
        self.acl().require(actor, Role::View)?;
        let number = revision.unwrap_or(self.log.head_revision());
        let snapshot;
        let tax = if number == self.log.head_revision() {
            self.log.head()
        } else {
            snapshot = self.log.replay(number)?;
            &snapshot
        };
        let timestamp = match number {
            0 => DateTime::<Utc>::UNIX_EPOCH,
            n => self.log.revision(n)?.timestamp,
        };
        let before = self.ids.len();
        let bundle = export(tax, number, timestamp, opts, &mut self.ids, &self.settings.languages)?;
        if self.ids.len() != before {
            self.save_state()?;
        }
        Ok(bundle)
    }

    pub fn subscribe(&self, actor: &UserId, from: u64) -> Result<Vec<EventEnvelope>, ProjectError> {
        self.acl().require(actor, Role::View)?;
        Ok(self.events.since(from)?.to_vec())
    }

    // ---- maintenance ----

    pub fn compact_events(&mut self, keep: usize) -> Result<(), ProjectError> {
        self.events.compact(keep);
        if let Some(storage) = &mut self.storage {
            let path = storage.dir.join("events.jsonl");
            let tmp = storage.dir.join("events.jsonl.tmp");
            let mut out = String::new();
            for e in self.events.retained() {
                out.push_str(&serde_json::to_string(e)?);
                out.push('\n');
            }
            fs::write(&tmp, out)?;
            fs::rename(&tmp, &path)?;
            storage.events = OpenOptions::new().append(true).open(&path)?;
        }
        Ok(())
    }

    pub fn due_deliveries(&self, now: DateTime<Utc>) -> Vec<OutboxEntry> {
        self.outbox.due(now)
    }

    pub fn delivery_succeeded(&mut self, id: u64) -> Result<(), ProjectError> {
        if self.outbox.mark_delivered(id) {
            self.save_state()?;
        }
        Ok(())
    }

    pub fn delivery_failed(&mut self, id: u64, error: String, now: DateTime<Utc>, policy: &RetryPolicy) -> Result<(), ProjectError> {
        self.outbox.mark_failed(id, error, now, policy);
        self.save_state()
    }
}

fn changed_entities(before: &crate::tags::Assignments, after: &crate::tags::Assignments) -> Vec<Iri> {
    let keys: BTreeSet<&Iri> = before.keys().chain(after.keys()).collect();
    keys.into_iter().filter(|k| before.get(*k) != after.get(*k)).cloned().collect()
}

fn open_storage(dir: &Path) -> Result<(Storage, Vec<Revision>, Vec<EventEnvelope>), ProjectError> {
    let (log, revisions) = LogFile::open(dir.join("revisions.jsonl"))?;
    let events_path = dir.join("events.jsonl");
    let mut events = Vec::new();
    if events_path.exists() {
        for (i, line) in BufReader::new(File::open(&events_path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(
                serde_json::from_str::<EventEnvelope>(&line)
                    .map_err(|e| ProjectError::Storage(format!("events.jsonl line {}: {e}", i + 1)))?,
            );
        }
    }
    let file = OpenOptions::new().create(true).append(true).open(&events_path)?;
    Ok((Storage { dir: dir.to_path_buf(), log, events: file }, revisions, events))
}
