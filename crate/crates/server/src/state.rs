use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::RwLock;
use tokio::sync::broadcast;
use topiary_core::project::RetryPolicy;
use topiary_core::{EventEnvelope, Iri, Project, ProjectError, ProjectId, UserId};

use crate::auth::UserStore;

/// Per-subscriber buffer. A subscriber that falls this far behind is
/// disconnected and resumes with `Last-Event-ID`.
pub const EVENT_BUFFER: usize = 1024;

/// One project behind its single-writer lock, plus the live event fan-out.
pub struct ProjectHandle {
    pub project: RwLock<Project>,
    pub events: broadcast::Sender<EventEnvelope>,
}

impl ProjectHandle {
    fn wrap(mut project: Project) -> Arc<Self> {
        let (tx, _) = broadcast::channel(EVENT_BUFFER);
        let sink = tx.clone();
        project.set_event_sink(Box::new(move |e| {
            let _ = sink.send(e.clone());
        }));
        Arc::new(ProjectHandle { project: RwLock::new(project), events: tx })
    }
}

#[derive(Clone)]
pub struct Config {
    /// Project and user storage. `None` keeps everything in memory.
    pub data_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub retry: RetryPolicy,
    pub webhook_poll: Duration,
    pub webhook_timeout: Duration,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            data_dir: None,
            static_dir: None,
            retry: RetryPolicy::default(),
            webhook_poll: Duration::from_millis(500),
            webhook_timeout: Duration::from_secs(10),
        }
    }
}

pub struct AppState {
    pub config: Config,
    pub users: UserStore,
    projects: RwLock<BTreeMap<ProjectId, Arc<ProjectHandle>>>,
}

pub type SharedState = Arc<AppState>;

pub fn valid_project_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

impl AppState {
    /// Loads users and every project found under the data directory.
    pub fn load(config: Config) -> Result<SharedState, ProjectError> {
        let mut projects = BTreeMap::new();
        let users = match &config.data_dir {
            Some(dir) => {
                fs::create_dir_all(dir.join("projects"))?;
                for entry in fs::read_dir(dir.join("projects"))? {
                    let entry = entry?;
                    let name = entry.file_name().to_string_lossy().into_owned();
                    if valid_project_id(&name) && entry.path().join("state.json").exists() {
                        let id = ProjectId::new(name);
                        let project = Project::open(entry.path(), id.clone())?;
                        projects.insert(id, ProjectHandle::wrap(project));
                    }
                }
                UserStore::load(Some(dir.join("users.json")))?
            }
            None => UserStore::load(None)?,
        };
        Ok(Arc::new(AppState { config, users, projects: RwLock::new(projects) }))
    }

    pub fn project(&self, id: &ProjectId) -> Option<Arc<ProjectHandle>> {
        self.projects.read().get(id).cloned()
    }

    pub fn projects(&self) -> Vec<Arc<ProjectHandle>> {
        self.projects.read().values().cloned().collect()
    }

    pub fn project_dir(&self, id: &ProjectId) -> Option<PathBuf> {
        self.config.data_dir.as_deref().map(|d| project_dir(d, id))
    }

    /// Creates a project owned by `owner`. Returns `None` if the id is taken.
    pub fn create_project(&self, id: ProjectId, name: &str, root: Iri, owner: UserId) -> Result<Option<Arc<ProjectHandle>>, ProjectError> {
        let mut projects = self.projects.write();
        if projects.contains_key(&id) {
            return Ok(None);
        }
        let project = match self.project_dir(&id) {
            Some(dir) => Project::create_in(dir, id.clone(), name, root, owner)?,
            None => Project::new(id.clone(), name, root, owner),
        };
        let handle = ProjectHandle::wrap(project);
        projects.insert(id, handle.clone());
        Ok(Some(handle))
    }

    /// Registers an already built project (tests and the CLI).
    pub fn insert_project(&self, project: Project) -> Arc<ProjectHandle> {
        let id = project.id().clone();
        let handle = ProjectHandle::wrap(project);
        self.projects.write().insert(id, handle.clone());
        handle
    }
}

pub fn project_dir(data_dir: &Path, id: &ProjectId) -> PathBuf {
    data_dir.join("projects").join(id.as_str())
}
