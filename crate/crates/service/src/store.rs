//! Session registry backed by one append-only JSONL log per session.
//!
//! The first line of `{data_dir}/{id}.jsonl` records the full config; each
//! later line records one action with its timestamp. An action is appended
//! and synced before the engine steps, so replaying a log rebuilds the
//! session exactly.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use backcompat_caja::{Action, GameConfig, GameSession};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "lowercase")]
pub enum LogEvent {
    Created {
        session_id: String,
        created_at: u64,
        config: GameConfig,
    },
    Action {
        cycle: usize,
        action: Action,
        timestamp_ms: u64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Game(#[from] backcompat_caja::Error),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub struct SessionEntry {
    pub id: String,
    pub created_at: u64,
    pub session: GameSession,
    log: File,
    log_path: PathBuf,
}

impl SessionEntry {
    /// Append one event and sync it to disk.
    pub fn append(&mut self, event: &LogEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        self.log.write_all(&line).map_err(io(&self.log_path))?;
        self.log.sync_data().map_err(io(&self.log_path))
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }
}

pub struct Replayed {
    pub id: String,
    pub created_at: u64,
    pub session: GameSession,
    /// Bytes of the log holding complete events.
    pub valid_len: u64,
}

/// Rebuild a session from its log. A torn final line, left by a crash
/// mid-append, is ignored.
pub fn replay_log(path: &Path) -> Result<Replayed, StoreError> {
    let text = std::fs::read_to_string(path).map_err(io(path))?;
    let corrupt = |line: usize, message: String| StoreError::Corrupt {
        path: path.to_path_buf(),
        line,
        message,
    };
    let lines: Vec<&str> = text.split_inclusive('\n').collect();
    let mut events = Vec::with_capacity(lines.len());
    let mut valid_len = 0;
    for (i, raw) in lines.iter().enumerate() {
        let last = i + 1 == lines.len();
        match serde_json::from_str::<LogEvent>(raw.trim_end()) {
            Ok(_) if last && !raw.ends_with('\n') && i > 0 => break,
            Ok(e) => events.push(e),
            Err(_) if last && i > 0 => break,
            Err(e) => return Err(corrupt(i + 1, e.to_string())),
        }
        valid_len += raw.len() as u64;
    }
    let mut events = events.into_iter();
    let (id, created_at, config) = match events.next() {
        Some(LogEvent::Created {
            session_id,
            created_at,
            config,
        }) => (session_id, created_at, config),
        _ => return Err(corrupt(1, "log must start with a created event".into())),
    };
    let mut session = GameSession::new(config)?;
    for (i, event) in events.enumerate() {
        match event {
            LogEvent::Action {
                cycle,
                action,
                timestamp_ms,
            } if cycle == session.cursor() + 1 => {
                session.step_at(action, timestamp_ms)?;
            }
            other => return Err(corrupt(i + 2, format!("unexpected event {other:?}"))),
        }
    }
    Ok(Replayed {
        id,
        created_at,
        session,
        valid_len,
    })
}

pub struct Store {
    data_dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<SessionEntry>>>>,
}

impl Store {
    /// Open the data directory, replaying every session log in it.
    pub fn open(data_dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let data_dir = data_dir.into();
        std::fs::create_dir_all(&data_dir).map_err(io(&data_dir))?;
        let mut sessions = HashMap::new();
        for dirent in std::fs::read_dir(&data_dir).map_err(io(&data_dir))? {
            let path = dirent.map_err(io(&data_dir))?.path();
            if path.extension().is_none_or(|e| e != "jsonl") {
                continue;
            }
            let replayed = replay_log(&path)?;
            let log = OpenOptions::new().append(true).open(&path).map_err(io(&path))?;
            // drop a torn tail so later appends start on a fresh line
            log.set_len(replayed.valid_len).map_err(io(&path))?;
            let entry = SessionEntry {
                id: replayed.id.clone(),
                created_at: replayed.created_at,
                session: replayed.session,
                log,
                log_path: path,
            };
            sessions.insert(replayed.id, Arc::new(Mutex::new(entry)));
        }
        Ok(Self {
            data_dir,
            sessions: RwLock::new(sessions),
        })
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn len(&self) -> usize {
        self.sessions.read().expect("registry lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Persist the creation event, then register the session.
    pub fn create(
        &self,
        id: String,
        created_at: u64,
        session: GameSession,
    ) -> Result<Arc<Mutex<SessionEntry>>, StoreError> {
        let log_path = self.data_dir.join(format!("{id}.jsonl"));
        let log = OpenOptions::new()
            .create_new(true)
            .append(true)
            .open(&log_path)
            .map_err(io(&log_path))?;
        let mut entry = SessionEntry {
            id: id.clone(),
            created_at,
            session,
            log,
            log_path,
        };
        let event = LogEvent::Created {
            session_id: id.clone(),
            created_at,
            config: entry.session.config().clone(),
        };
        entry.append(&event)?;
        let entry = Arc::new(Mutex::new(entry));
        self.sessions
            .write()
            .expect("registry lock")
            .insert(id, Arc::clone(&entry));
        Ok(entry)
    }

    pub fn get(&self, id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        self.sessions.read().expect("registry lock").get(id).cloned()
    }
}
