//! Per-entity discussion threads with mentions, entity links and
//! notification events.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use chrono::{DateTime, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::authz::{AuthzError, ProjectAcl, Role};
use crate::ids::{ProjectId, ThreadId, UserId};
use crate::iri::Iri;
use crate::links::deep_link;
use crate::model::Taxonomy;
use crate::multilang::{display_text, DisplayLanguageConfig};

pub const PREVIEW_CHARS: usize = 200;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscussionError {
    #[error(transparent)]
    PermissionDenied(#[from] AuthzError),
    #[error("unknown entity {0}")]
    UnknownEntity(Iri),
    #[error("unknown thread {0}")]
    UnknownThread(ThreadId),
    #[error("comment body is empty")]
    EmptyBody,
    #[error("thread {thread} is about {expected}, not {got}")]
    EntityMismatch { thread: ThreadId, expected: Iri, got: Iri },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase")]
pub enum Segment {
    Text { text: String },
    Mention { user: UserId },
    /// `source` is the text between the brackets, as written.
    EntityLink { iri: Iri, source: String },
    ExternalLink { url: String },
}

impl Segment {
    /// The exact body text this segment was parsed from.
    pub fn source_text(&self) -> String {
        match self {
            Segment::Text { text } => text.clone(),
            Segment::Mention { user } => format!("@{user}"),
            Segment::EntityLink { source, .. } => format!("[[{source}]]"),
            Segment::ExternalLink { url } => url.clone(),
        }
    }
}

fn token_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"\[\[([^\[\]\n]+)\]\]|https?://[^\s<>\[\]]+|@[A-Za-z0-9_][A-Za-z0-9_.-]*").expect("static pattern")
    })
}

const TRAILING_PUNCT: &[char] = &['.', ',', ';', ':', '!', '?', ')', '"', '\'', '-'];

/// Splits a comment body into segments. `resolve` maps the inside of
/// `[[...]]` to an IRI; unresolvable links stay text. `@` only starts a
/// mention at a word boundary, so e-mail addresses stay text.
pub fn parse_segments(body: &str, resolve: &dyn Fn(&str) -> Option<Iri>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    let push_text = |out: &mut Vec<Segment>, s: &str| {
        if s.is_empty() {
            return;
        }
        if let Some(Segment::Text { text }) = out.last_mut() {
            text.push_str(s);
        } else {
            out.push(Segment::Text { text: s.to_string() });
        }
    };
    let mut cursor = 0;
    for m in token_pattern().find_iter(body) {
        if m.start() < cursor {
            continue;
        }
        let token = m.as_str();
        let segment = if let Some(inner) = token.strip_prefix("[[").and_then(|t| t.strip_suffix("]]")) {
            resolve(inner).map(|iri| (Segment::EntityLink { iri, source: inner.to_string() }, token.len()))
        } else if let Some(name) = token.strip_prefix('@') {
            let boundary = body[..m.start()].chars().next_back().is_none_or(|c| !c.is_alphanumeric() && c != '_');
            let name = name.trim_end_matches(TRAILING_PUNCT);
            (boundary && !name.is_empty()).then(|| (Segment::Mention { user: UserId::new(name) }, name.len() + 1))
        } else {
            let url = token.trim_end_matches(TRAILING_PUNCT);
            (url.len() > "https://".len()).then(|| (Segment::ExternalLink { url: url.to_string() }, url.len()))
        };
        if let Some((segment, len)) = segment {
            push_text(&mut out, &body[cursor..m.start()]);
            out.push(segment);
            cursor = m.start() + len;
        }
    }
    push_text(&mut out, &body[cursor..]);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub author: UserId,
    pub body: String,
    pub segments: Vec<Segment>,
    pub timestamp: DateTime<Utc>,
}

impl Comment {
    pub fn mentions(&self) -> impl Iterator<Item = &UserId> {
        self.segments.iter().filter_map(|s| match s {
            Segment::Mention { user } => Some(user),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThreadStatus {
    Open,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusChange {
    pub status: ThreadStatus,
    pub actor: UserId,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscussionThread {
    pub id: ThreadId,
    pub entity: Iri,
    pub status: ThreadStatus,
    pub comments: Vec<Comment>,
    pub created: DateTime<Utc>,
    /// Time of the latest comment.
    pub updated: DateTime<Utc>,
    #[serde(default)]
    pub status_history: Vec<StatusChange>,
}

impl DiscussionThread {
    pub fn participants(&self) -> BTreeSet<&UserId> {
        self.comments.iter().map(|c| &c.author).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NotificationKind {
    CommentPosted,
    ThreadResolved,
}

/// Body POSTed to the project webhook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WebhookPayload {
    pub kind: NotificationKind,
    pub project: ProjectId,
    pub entity_iri: Iri,
    pub entity_label: String,
    pub thread_id: ThreadId,
    pub author: UserId,
    pub body_preview: String,
    pub deep_link: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmailBody {
    pub subject: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NotificationEvent {
    pub kind: NotificationKind,
    pub project: ProjectId,
    pub thread: ThreadId,
    pub entity: Iri,
    pub deep_link: String,
    pub recipients: BTreeSet<UserId>,
    pub email: EmailBody,
    pub webhook: WebhookPayload,
}

/// First [`PREVIEW_CHARS`] characters, with an ellipsis when cut.
pub fn preview(body: &str) -> String {
    if body.chars().count() <= PREVIEW_CHARS {
        return body.to_string();
    }
    let mut s: String = body.chars().take(PREVIEW_CHARS - 1).collect();
    s.push('…');
    s
}

/// Read-only project state a discussion operation needs.
pub struct DiscussionContext<'a> {
    pub project: &'a ProjectId,
    pub tax: &'a Taxonomy,
    pub acl: &'a ProjectAcl,
    pub languages: &'a DisplayLanguageConfig,
    pub resolve: &'a dyn Fn(&str) -> Option<Iri>,
}

impl DiscussionContext<'_> {
    fn event(&self, kind: NotificationKind, thread: &DiscussionThread, actor: &UserId, body: &str, recipients: BTreeSet<UserId>) -> NotificationEvent {
        let label = display_text(self.tax, &thread.entity, self.languages);
        let link = deep_link(self.project, &thread.entity);
        let body_preview = preview(body);
        let subject = match kind {
            NotificationKind::CommentPosted => format!("[{}] {actor} commented on {label}", self.project),
            NotificationKind::ThreadResolved => format!("[{}] {actor} resolved a thread on {label}", self.project),
        };
        let text = format!("{body_preview}\n\nOpen {label}: {link}\n");
        NotificationEvent {
            kind,
            project: self.project.clone(),
            thread: thread.id,
            entity: thread.entity.clone(),
            deep_link: link.clone(),
            recipients,
            email: EmailBody { subject, text },
            webhook: WebhookPayload {
                kind,
                project: self.project.clone(),
                entity_iri: thread.entity.clone(),
                entity_label: label,
                thread_id: thread.id,
                author: actor.clone(),
                body_preview,
                deep_link: link,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommentSort {
    ByEntity,
    ByCreated,
    ByUpdated,
}

/// All threads of one project. Append-only: comments are never edited.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DiscussionBoard {
    threads: BTreeMap<ThreadId, DiscussionThread>,
    next_id: u64,
}

impl DiscussionBoard {
    pub fn thread(&self, id: ThreadId) -> Result<&DiscussionThread, DiscussionError> {
        self.threads.get(&id).ok_or(DiscussionError::UnknownThread(id))
    }

    pub fn threads(&self) -> impl Iterator<Item = &DiscussionThread> {
        self.threads.values()
    }

    pub fn comment_count(&self) -> usize {
        self.threads.values().map(|t| t.comments.len()).sum()
    }

    /// Starts a thread (when `thread` is `None`) or appends a reply.
    pub fn post_comment(
        &mut self,
        ctx: &DiscussionContext<'_>,
        entity: &Iri,
        author: &UserId,
        body: &str,
        thread: Option<ThreadId>,
        now: DateTime<Utc>,
    ) -> Result<(ThreadId, NotificationEvent), DiscussionError> {
        ctx.acl.require(author, Role::Comment)?;
        if !ctx.tax.is_declared(entity) {
            return Err(DiscussionError::UnknownEntity(entity.clone()));
        }
        if body.trim().is_empty() {
            return Err(DiscussionError::EmptyBody);
        }
        if let Some(id) = thread {
            let t = self.thread(id)?;
            if &t.entity != entity {
                return Err(DiscussionError::EntityMismatch { thread: id, expected: t.entity.clone(), got: entity.clone() });
            }
        }
        let comment = Comment {
            author: author.clone(),
            body: body.to_string(),
            segments: parse_segments(body, ctx.resolve),
            timestamp: now,
        };
        let id = match thread {
            Some(id) => id,
            None => {
                self.next_id += 1;
                let id = ThreadId(self.next_id);
                self.threads.insert(
                    id,
                    DiscussionThread {
                        id,
                        entity: entity.clone(),
                        status: ThreadStatus::Open,
                        comments: Vec::new(),
                        created: now,
                        updated: now,
                        status_history: Vec::new(),
                    },
                );
                id
            }
        };
        let t = self.threads.get_mut(&id).expect("thread exists");
        let mut recipients: BTreeSet<UserId> = t.participants().into_iter().cloned().collect();
        recipients.extend(comment.mentions().cloned());
        recipients.remove(author);
        recipients.retain(|u| ctx.acl.is_member(u));
        t.updated = now.max(t.updated);
        t.comments.push(comment);
        let event = ctx.event(NotificationKind::CommentPosted, t, author, body, recipients);
        Ok((id, event))
    }

    /// Idempotent status change. Only Open to Resolved emits an event.
    pub fn set_thread_status(
        &mut self,
        ctx: &DiscussionContext<'_>,
        id: ThreadId,
        status: ThreadStatus,
        actor: &UserId,
        now: DateTime<Utc>,
    ) -> Result<(&DiscussionThread, Option<NotificationEvent>), DiscussionError> {
        ctx.acl.require(actor, Role::Comment)?;
        let t = self.threads.get_mut(&id).ok_or(DiscussionError::UnknownThread(id))?;
        if t.status == status {
            return Ok((t, None));
        }
        t.status = status;
        t.status_history.push(StatusChange { status, actor: actor.clone(), at: now });
        let event = (status == ThreadStatus::Resolved).then(|| {
            let mut recipients: BTreeSet<UserId> = t.participants().into_iter().cloned().collect();
            recipients.remove(actor);
            recipients.retain(|u| ctx.acl.is_member(u));
            let opener = t.comments.first().map(|c| c.body.as_str()).unwrap_or_default();
            ctx.event(NotificationKind::ThreadResolved, t, actor, opener, recipients)
        });
        Ok((t, event))
    }

    /// Threads in the requested order. ByEntity follows primary display
    /// name; ByCreated and ByUpdated put the newest first. Thread id breaks
    /// ties.
    pub fn list(&self, tax: &Taxonomy, languages: &DisplayLanguageConfig, sort: CommentSort) -> Vec<&DiscussionThread> {
        let mut threads: Vec<&DiscussionThread> = self.threads.values().collect();
        match sort {
            CommentSort::ByEntity => {
                let mut keyed: Vec<(String, &DiscussionThread)> =
                    threads.into_iter().map(|t| (display_text(tax, &t.entity, languages), t)).collect();
                keyed.sort_by(|(na, a), (nb, b)| (na, &a.entity, a.created, a.id).cmp(&(nb, &b.entity, b.created, b.id)));
                return keyed.into_iter().map(|(_, t)| t).collect();
            }
            CommentSort::ByCreated => threads.sort_by(|a, b| (b.created, b.id).cmp(&(a.created, a.id))),
            CommentSort::ByUpdated => threads.sort_by(|a, b| (b.updated, b.id).cmp(&(a.updated, a.id))),
        }
        threads
    }

    /// Threads about one entity, oldest first.
    pub fn threads_for(&self, entity: &Iri) -> Vec<&DiscussionThread> {
        self.threads.values().filter(|t| &t.entity == entity).collect()
    }
}
