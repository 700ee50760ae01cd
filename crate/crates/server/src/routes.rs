use std::collections::BTreeSet;
use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{FromRequestParts, Path, Query, State};
use axum::http::header::{self, HeaderMap, HeaderValue};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;
use topiary_core::discussions::{CommentSort, ThreadStatus};
use topiary_core::export::ExportOptions;
use topiary_core::lint::{findings_to_csv, LintOptions};
use topiary_core::multilang::display_text;
use topiary_core::refactor::{AnnotationAction, AnnotationSelection, MergeRequest};
use topiary_core::search::{SearchField, SearchQuery};
use topiary_core::seed::SeedSheet;
use topiary_core::tags::TagRule;
use topiary_core::{AtomicChange, EventEnvelope, Iri, ProjectId, SettingsUpdate, TagId, ThreadId, UserId};

use crate::bundle::zip_bundle;
use crate::error::ApiError;
use crate::state::{valid_project_id, ProjectHandle, SharedState};

type ApiResult<T> = Result<T, ApiError>;

/// The authenticated caller, from `Authorization: Bearer` or `?token=`
/// (EventSource cannot set headers).
pub struct Actor(pub UserId);

#[derive(Deserialize)]
struct TokenParam {
    token: Option<String>,
}

impl FromRequestParts<SharedState> for Actor {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &SharedState) -> Result<Self, Self::Rejection> {
        let header_token = parts
            .headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .map(str::to_string);
        let token = match header_token {
            Some(t) => Some(t),
            None => Query::<TokenParam>::try_from_uri(&parts.uri).ok().and_then(|q| q.0.token),
        };
        token.and_then(|t| state.users.session(&t)).map(Actor).ok_or_else(ApiError::unauthorized)
    }
}

fn handle(state: &SharedState, id: &str) -> ApiResult<Arc<ProjectHandle>> {
    state.project(&ProjectId::new(id)).ok_or_else(|| ApiError::not_found(format!("no project {id}")))
}

fn parse_iri(s: &str) -> ApiResult<Iri> {
    Iri::parse(s).map_err(|e| ApiError::bad_request(e.to_string()))
}

pub fn router(state: SharedState) -> Router {
    let mut app = Router::new()
        .route("/login", post(login))
        .route("/projects", get(list_projects).post(create_project))
        .route("/p/{id}/taxonomy", get(taxonomy))
        .route("/p/{id}/e/{iri}", get(entity))
        .route("/p/{id}/commit", post(commit))
        .route("/p/{id}/merge", post(merge))
        .route("/p/{id}/move", post(bulk_move))
        .route("/p/{id}/bulk-annotate", post(bulk_annotate))
        .route("/p/{id}/revert/{rev}", post(revert))
        .route("/p/{id}/import-seed", post(import_seed))
        .route("/p/{id}/history", get(history))
        .route("/p/{id}/search", get(search))
        .route("/p/{id}/tags", get(list_tags).post(create_tag))
        .route("/p/{id}/tags/{tag}/assign", post(assign_tag))
        .route("/p/{id}/tags/{tag}/unassign", post(unassign_tag))
        .route("/p/{id}/tag-rules", get(list_rules).post(post_rules))
        .route("/p/{id}/tagged/{tag}", get(tagged))
        .route("/p/{id}/threads", post(post_comment))
        .route("/p/{id}/threads/{thread}/status", post(thread_status))
        .route("/p/{id}/comments", get(comments))
        .route("/p/{id}/settings", get(get_settings).put(put_settings))
        .route("/p/{id}/events", get(events))
        .route("/p/{id}/export", get(export))
        .route("/p/{id}/lint", get(lint))
        .route("/p/{id}/stats", get(stats));
    if let Some(dir) = &state.config.static_dir {
        app = app.fallback_service(tower_http::services::ServeDir::new(dir).append_index_html_on_directories(true));
    }
    app.with_state(state)
}

// ---- session and projects ----

#[derive(Deserialize)]
struct LoginBody {
    user: UserId,
    password: String,
}

async fn login(State(state): State<SharedState>, Json(body): Json<LoginBody>) -> ApiResult<Json<Value>> {
    let token = state
        .users
        .login(&body.user, &body.password)
        .ok_or_else(|| ApiError::new(StatusCode::UNAUTHORIZED, "Unauthenticated", "unknown user or wrong password"))?;
    Ok(Json(json!({ "token": token, "user": body.user })))
}

async fn list_projects(State(state): State<SharedState>, Actor(actor): Actor) -> Json<Value> {
    let list: Vec<_> = state.projects().iter().filter_map(|h| h.project.read().summary(&actor)).collect();
    Json(json!(list))
}

#[derive(Deserialize)]
struct CreateProject {
    id: String,
    #[serde(default)]
    name: Option<String>,
    root: String,
}

async fn create_project(State(state): State<SharedState>, Actor(actor): Actor, Json(body): Json<CreateProject>) -> ApiResult<Response> {
    if !valid_project_id(&body.id) {
        return Err(ApiError::bad_request("project id must be 1-64 characters of [A-Za-z0-9_-]"));
    }
    let root = parse_iri(&body.root)?;
    let name = body.name.unwrap_or_else(|| body.id.clone());
    let handle = state
        .create_project(ProjectId::new(&body.id), &name, root, actor.clone())?
        .ok_or_else(|| ApiError::new(StatusCode::CONFLICT, "ProjectExists", format!("project {} exists", body.id)))?;
    let summary = handle.project.read().summary(&actor);
    Ok((StatusCode::CREATED, Json(summary)).into_response())
}

// ---- reads ----

async fn taxonomy(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>) -> ApiResult<Response> {
    let text = handle(&state, &id)?.project.read().taxonomy_ofn(&actor)?;
    let disposition = format!("attachment; filename=\"{id}.ofn\"");
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("text/owl-functional; charset=utf-8")), (header::CONTENT_DISPOSITION, HeaderValue::from_str(&disposition).expect("id is ascii"))],
        text,
    )
        .into_response())
}

/// JSON entity view. Browsers following a deep link get the app page
/// instead, which then fetches this same URL as JSON.
async fn entity(State(state): State<SharedState>, Path((id, iri)): Path<(String, String)>, headers: HeaderMap) -> ApiResult<Response> {
    let wants_html = headers.get(header::ACCEPT).and_then(|v| v.to_str().ok()).is_some_and(|a| a.contains("text/html"));
    if let (true, Some(dir)) = (wants_html, &state.config.static_dir) {
        let page = tokio::fs::read_to_string(dir.join("index.html")).await.map_err(|_| ApiError::not_found("index.html"))?;
        return Ok(Html(page).into_response());
    }
    let mut parts = headers_to_parts(headers);
    let Actor(actor) = Actor::from_request_parts(&mut parts, &state).await?;
    let iri = parse_iri(&iri)?;
    let view = handle(&state, &id)?.project.read().entity_view(&actor, &iri)?;
    Ok(Json(view).into_response())
}

fn headers_to_parts(headers: HeaderMap) -> Parts {
    let (mut parts, _) = axum::http::Request::new(()).into_parts();
    parts.headers = headers;
    parts
}

#[derive(Deserialize)]
struct HistoryQuery {
    entity: Option<String>,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn history(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Query(q): Query<HistoryQuery>) -> ApiResult<Json<Value>> {
    let entity = q.entity.as_deref().map(parse_iri).transpose()?;
    let limit = q.limit.unwrap_or(50);
    if limit == 0 || limit > 500 {
        return Err(ApiError::bad_request("limit must be between 1 and 500"));
    }
    let h = handle(&state, &id)?;
    let project = h.project.read();
    let page = project.history(&actor, entity.as_ref(), q.offset.unwrap_or(0), limit)?;
    Ok(Json(json!(page)))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SearchParams {
    #[serde(alias = "q")]
    text: Option<String>,
    /// Comma separated: label, altLabel, definition.
    fields: Option<String>,
    tag: Option<TagId>,
    #[serde(default)]
    include_deprecated: bool,
    limit: Option<usize>,
    offset: Option<usize>,
}

async fn search(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Query(p): Query<SearchParams>) -> ApiResult<Json<Value>> {
    let mut q = SearchQuery::text(p.text.unwrap_or_default());
    if let Some(fields) = p.fields {
        q.fields = fields
            .split(',')
            .filter(|f| !f.is_empty())
            .map(|f| serde_json::from_value::<SearchField>(Value::String(f.trim().to_string())))
            .collect::<Result<BTreeSet<_>, _>>()
            .map_err(|e| ApiError::bad_request(format!("fields: {e}")))?;
    }
    q.tag = p.tag;
    q.include_deprecated = p.include_deprecated;
    if let Some(limit) = p.limit {
        q.limit = limit;
    }
    q.offset = p.offset.unwrap_or(0);
    let hits = handle(&state, &id)?.project.read().search(&actor, &q)?;
    Ok(Json(json!(hits)))
}

async fn tagged(State(state): State<SharedState>, Actor(actor): Actor, Path((id, tag)): Path<(String, String)>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let project = h.project.read();
    let iris = project.tagged(&actor, &TagId::new(tag))?;
    let rows: Vec<Value> = iris
        .iter()
        .map(|e| json!({ "iri": e, "name": display_text(project.head(), e, project.languages()), "deprecated": project.head().is_deprecated(e) }))
        .collect();
    Ok(Json(json!(rows)))
}

async fn list_tags(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let project = h.project.read();
    let tags: Vec<_> = project.view(&actor)?.tags().tags().collect();
    Ok(Json(json!(tags)))
}

async fn list_rules(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let project = h.project.read();
    let rules: Vec<_> = project.view(&actor)?.tags().rules().collect();
    Ok(Json(json!(rules)))
}

#[derive(Deserialize)]
struct SortParam {
    sort: Option<String>,
}

async fn comments(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Query(p): Query<SortParam>) -> ApiResult<Json<Value>> {
    let sort = match p.sort.as_deref() {
        None | Some("updated") => CommentSort::ByUpdated,
        Some("created") => CommentSort::ByCreated,
        Some("entity") => CommentSort::ByEntity,
        Some(other) => return Err(ApiError::bad_request(format!("unknown sort {other}; use entity, created or updated"))),
    };
    let h = handle(&state, &id)?;
    let project = h.project.read();
    let threads = project.list_threads(&actor, sort)?;
    Ok(Json(json!(threads)))
}

async fn get_settings(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let project = h.project.read();
    Ok(Json(json!(project.view(&actor)?.settings())))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ExportParams {
    #[serde(default)]
    no_ads: bool,
    #[serde(default)]
    deprecated: bool,
    rev: Option<u64>,
}

async fn export(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Query(p): Query<ExportParams>) -> ApiResult<Response> {
    let opts = ExportOptions { include_no_ads: p.no_ads, include_deprecated: p.deprecated };
    let bundle = handle(&state, &id)?.project.write().export(&actor, opts, p.rev)?;
    let bytes = zip_bundle(&bundle);
    let disposition = format!("attachment; filename=\"{id}-r{}.zip\"", bundle.manifest.revision);
    Ok((
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/zip")), (header::CONTENT_DISPOSITION, HeaderValue::from_str(&disposition).expect("ascii"))],
        bytes,
    )
        .into_response())
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct LintParams {
    #[serde(default)]
    include_deprecated: bool,
    format: Option<String>,
}

async fn lint(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Query(p): Query<LintParams>) -> ApiResult<Response> {
    let findings = handle(&state, &id)?.project.read().lint(&actor, LintOptions { include_deprecated: p.include_deprecated })?;
    Ok(match p.format.as_deref() {
        Some("csv") => ([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], findings_to_csv(&findings)).into_response(),
        None | Some("json") => Json(findings).into_response(),
        Some(other) => return Err(ApiError::bad_request(format!("unknown format {other}"))),
    })
}

async fn stats(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let s = handle(&state, &id)?.project.read().stats(&actor)?;
    Ok(Json(json!(s)))
}

// ---- mutations ----

#[derive(Deserialize)]
struct CommitBody {
    #[serde(default)]
    message: String,
    changes: Vec<AtomicChange>,
}

async fn commit(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<CommitBody>) -> ApiResult<Json<Value>> {
    let rev = handle(&state, &id)?.project.write().commit(&actor, body.changes, &body.message)?;
    Ok(Json(json!(rev)))
}

async fn merge(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(req): Json<MergeRequest>) -> ApiResult<Json<Value>> {
    let rev = handle(&state, &id)?.project.write().merge(&actor, &req)?;
    Ok(Json(json!(rev)))
}

#[derive(Deserialize)]
struct MoveBody {
    entities: BTreeSet<Iri>,
    target: Iri,
    #[serde(default)]
    message: String,
}

async fn bulk_move(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<MoveBody>) -> ApiResult<Json<Value>> {
    let rev = handle(&state, &id)?.project.write().bulk_move(&actor, &body.entities, &body.target, &body.message)?;
    Ok(Json(json!(rev)))
}

#[derive(Deserialize)]
struct AnnotateBody {
    #[serde(default)]
    selection: AnnotationSelection,
    action: AnnotationAction,
    #[serde(default)]
    message: String,
}

async fn bulk_annotate(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<AnnotateBody>) -> ApiResult<Json<Value>> {
    let (rev, matched, skipped) = handle(&state, &id)?.project.write().bulk_annotate(&actor, &body.selection, &body.action, &body.message)?;
    Ok(Json(json!({ "revision": rev, "matched": matched, "skipped": skipped })))
}

async fn revert(State(state): State<SharedState>, Actor(actor): Actor, Path((id, rev)): Path<(String, u64)>) -> ApiResult<Json<Value>> {
    let rev = handle(&state, &id)?.project.write().revert(&actor, rev)?;
    Ok(Json(json!(rev)))
}

/// Body is the three-column seed sheet as CSV.
async fn import_seed(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, body: String) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let sheet = SeedSheet::from_csv(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let rev = h.project.write().import_seed(&actor, &sheet)?;
    Ok(Json(json!(rev)))
}

#[derive(Deserialize)]
struct TagBody {
    label: String,
    #[serde(default)]
    description: Option<String>,
    color: String,
}

async fn create_tag(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<TagBody>) -> ApiResult<Response> {
    let tag = handle(&state, &id)?.project.write().create_tag(&actor, &body.label, body.description, &body.color)?;
    Ok((StatusCode::CREATED, Json(tag)).into_response())
}

/// An array replaces every rule; a single rule object sets that tag's rule.
async fn post_rules(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<Value>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let mut project = h.project.write();
    let invalid = |e: serde_json::Error| ApiError::bad_request(format!("rule: {e}"));
    if body.is_array() {
        let rules: Vec<TagRule> = serde_json::from_value(body).map_err(invalid)?;
        project.replace_tag_rules(&actor, rules)?;
    } else {
        let rule: TagRule = serde_json::from_value(body).map_err(invalid)?;
        project.set_tag_rule(&actor, rule)?;
    }
    let rules: Vec<_> = project.tags().rules().collect();
    Ok(Json(json!(rules)))
}

#[derive(Deserialize)]
struct EntityBody {
    entity: Iri,
}

async fn assign_tag(State(state): State<SharedState>, Actor(actor): Actor, Path((id, tag)): Path<(String, String)>, Json(body): Json<EntityBody>) -> ApiResult<StatusCode> {
    handle(&state, &id)?.project.write().assign_tag(&actor, &body.entity, &TagId::new(tag))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn unassign_tag(State(state): State<SharedState>, Actor(actor): Actor, Path((id, tag)): Path<(String, String)>, Json(body): Json<EntityBody>) -> ApiResult<StatusCode> {
    handle(&state, &id)?.project.write().unassign_tag(&actor, &body.entity, &TagId::new(tag))?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CommentBody {
    entity: Iri,
    body: String,
    #[serde(default)]
    thread_id: Option<ThreadId>,
}

async fn post_comment(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(body): Json<CommentBody>) -> ApiResult<Response> {
    let (thread, _) = handle(&state, &id)?.project.write().post_comment(&actor, &body.entity, &body.body, body.thread_id)?;
    Ok((StatusCode::CREATED, Json(thread)).into_response())
}

#[derive(Deserialize)]
struct StatusBody {
    status: ThreadStatus,
}

async fn thread_status(State(state): State<SharedState>, Actor(actor): Actor, Path((id, thread)): Path<(String, u64)>, Json(body): Json<StatusBody>) -> ApiResult<Json<Value>> {
    let (thread, _) = handle(&state, &id)?.project.write().set_thread_status(&actor, ThreadId(thread), body.status)?;
    Ok(Json(json!(thread)))
}

async fn put_settings(State(state): State<SharedState>, Actor(actor): Actor, Path(id): Path<String>, Json(update): Json<SettingsUpdate>) -> ApiResult<Json<Value>> {
    let h = handle(&state, &id)?;
    let mut project = h.project.write();
    let settings = project.update_settings(&actor, update)?;
    Ok(Json(json!(settings)))
}

// ---- event stream ----

#[derive(Deserialize)]
struct EventsParams {
    from: Option<u64>,
}

fn sse_event(e: &EventEnvelope) -> Event {
    Event::default()
        .id(e.seq.to_string())
        .event(e.kind.as_str())
        .data(serde_json::to_string(e).expect("envelope serializes"))
}

/// Replays events after `Last-Event-ID` (or `?from=`; default: now), then
/// streams live ones. The backlog is read and the live receiver opened under
/// one read lock, and commits publish under the write lock, so nothing falls
/// between the two. A subscriber that overflows its buffer is dropped.
async fn events(
    State(state): State<SharedState>,
    Actor(actor): Actor,
    Path(id): Path<String>,
    Query(p): Query<EventsParams>,
    headers: HeaderMap,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let last_event_id = match headers.get("last-event-id") {
        Some(v) => Some(v.to_str().ok().and_then(|s| s.trim().parse::<u64>().ok()).ok_or_else(|| ApiError::bad_request("Last-Event-ID must be a sequence number"))?),
        None => None,
    };
    let h = handle(&state, &id)?;
    let (from, backlog, rx) = {
        let project = h.project.read();
        let from = last_event_id.or(p.from).unwrap_or(project.events().last_seq());
        (from, project.subscribe(&actor, from)?, h.events.subscribe())
    };
    let last = backlog.last().map_or(from, |e| e.seq);
    let live = stream::unfold((rx, last), |(mut rx, last)| async move {
        loop {
            match rx.recv().await {
                Ok(e) if e.seq <= last => continue,
                Ok(e) => {
                    let seq = e.seq;
                    return Some((e, (rx, seq)));
                }
                Err(RecvError::Lagged(_)) | Err(RecvError::Closed) => return None,
            }
        }
    });
    let stream = stream::iter(backlog).chain(live).map(|e| Ok(sse_event(&e)));
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}
