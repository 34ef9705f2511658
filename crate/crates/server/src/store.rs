//! One JSON file per project, replaced atomically on every save.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use schemaforge_core::document::DataNode;
use schemaforge_core::schema::SchemaNode;
use schemaforge_core::session::SessionState;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredSession {
    pub id: String,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub schema: SchemaNode,
    pub document: DataNode,
    #[serde(default)]
    pub sessions: Vec<StoredSession>,
    /// Milliseconds since the Unix epoch.
    pub created: u64,
    pub modified: u64,
}

impl Project {
    pub fn session(&self, sid: &str) -> Option<&StoredSession> {
        self.sessions.iter().find(|s| s.id == sid)
    }

    pub fn session_mut(&mut self, sid: &str) -> Option<&mut StoredSession> {
        self.sessions.iter_mut().find(|s| s.id == sid)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("no project `{0}`")]
    NotFound(String),
    #[error("cannot access {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("project file {path} is unreadable: {message}")]
    Corrupt { path: PathBuf, message: String },
}

pub struct ProjectStore {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
    create: Mutex<()>,
}

fn io_err(path: &Path, e: std::io::Error) -> StoreError {
    StoreError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

impl ProjectStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(ProjectStore {
            dir,
            locks: Mutex::new(HashMap::new()),
            create: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> Option<PathBuf> {
        valid_id(id).then(|| self.dir.join(format!("{id}.json")))
    }

    /// The lock that serializes mutations of one project.
    pub fn lock(&self, id: &str) -> Arc<tokio::sync::Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        locks.entry(id.to_string()).or_default().clone()
    }

    pub fn load(&self, id: &str) -> Result<Project, StoreError> {
        let path = self.path(id).ok_or_else(|| StoreError::NotFound(id.to_string()))?;
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(id.to_string()))
            }
            Err(e) => return Err(io_err(&path, e)),
        };
        serde_json::from_str(&text).map_err(|e| StoreError::Corrupt {
            path,
            message: e.to_string(),
        })
    }

    pub fn save(&self, project: &Project) -> Result<(), StoreError> {
        let path = self
            .path(&project.id)
            .ok_or_else(|| StoreError::NotFound(project.id.clone()))?;
        let text = serde_json::to_string_pretty(project).map_err(|e| StoreError::Corrupt {
            path: path.clone(),
            message: e.to_string(),
        })?;
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, text).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| io_err(&path, e))
    }

    /// Stores a new project under the next free id (`p1`, `p2`, ...).
    pub fn create(&self, schema: SchemaNode, document: DataNode, now: u64) -> Result<Project, StoreError> {
        let _guard = self.create.lock().expect("create lock poisoned");
        let mut next = 1u64;
        for entry in fs::read_dir(&self.dir).map_err(|e| io_err(&self.dir, e))? {
            let name = entry.map_err(|e| io_err(&self.dir, e))?.file_name();
            let name = name.to_string_lossy();
            if let Some(n) = name
                .strip_suffix(".json")
                .and_then(|s| s.strip_prefix('p'))
                .and_then(|s| s.parse::<u64>().ok())
            {
                next = next.max(n + 1);
            }
        }
        let project = Project {
            id: format!("p{next}"),
            schema,
            document,
            sessions: Vec::new(),
            created: now,
            modified: now,
        };
        self.save(&project)?;
        Ok(project)
    }
}

/// Session ids are `<project>_s<n>`; this returns the project part.
pub fn project_of_session(sid: &str) -> Option<&str> {
    let (pid, n) = sid.rsplit_once("_s")?;
    (valid_id(pid) && !n.is_empty() && n.bytes().all(|b| b.is_ascii_digit())).then_some(pid)
}
