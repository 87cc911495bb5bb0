use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use coos_core::store::Store;
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex as AsyncMutex, OwnedMutexGuard};

use crate::auth::{Auth, AuthMode};
use crate::error::ApiResult;

fn default_bind() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_ttl() -> u64 {
    12 * 3600
}

fn default_rounds() -> u32 {
    100_000
}

fn default_max_wait() -> u64 {
    30_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerConfig {
    #[serde(default = "default_bind")]
    pub bind: SocketAddr,
    pub data_dir: PathBuf,
    #[serde(default)]
    pub auth: AuthMode,
    #[serde(default = "default_ttl")]
    pub token_ttl_secs: u64,
    /// PBKDF2 rounds for new credentials.
    #[serde(default = "default_rounds")]
    pub kdf_rounds: u32,
    /// Upper bound on a long-poll wait.
    #[serde(default = "default_max_wait")]
    pub max_wait_ms: u64,
}

impl ServerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            bind: default_bind(),
            data_dir: data_dir.into(),
            auth: AuthMode::default(),
            token_ttl_secs: default_ttl(),
            kdf_rounds: default_rounds(),
            max_wait_ms: default_max_wait(),
        }
    }
}

type SessionKey = (String, String);

struct Inner {
    config: ServerConfig,
    store: Store,
    auth: Auth,
    writers: Mutex<HashMap<String, Arc<AsyncMutex<()>>>>,
    sessions: Mutex<HashMap<SessionKey, watch::Sender<u64>>>,
}

/// Shared handle passed to every handler.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(config: ServerConfig) -> ApiResult<Self> {
        let store = Store::open(&config.data_dir)?;
        let ttl = chrono::Duration::seconds(i64::try_from(config.token_ttl_secs).unwrap_or(i64::MAX / 1000));
        let auth = Auth::load(&store, config.auth, ttl, config.kdf_rounds)?;
        Ok(Self(Arc::new(Inner {
            config,
            store,
            auth,
            writers: Mutex::default(),
            sessions: Mutex::default(),
        })))
    }

    pub fn config(&self) -> &ServerConfig {
        &self.0.config
    }

    pub fn store(&self) -> &Store {
        &self.0.store
    }

    pub fn auth(&self) -> &Auth {
        &self.0.auth
    }

    /// Exclusive write access to one project. Held across read-modify-write.
    pub async fn writer(&self, project: &str) -> OwnedMutexGuard<()> {
        let lock = self.0.writers.lock().expect("writer map").entry(project.to_string()).or_default().clone();
        lock.lock_owned().await
    }

    /// Receiver that sees the latest sequence number of a session.
    pub fn subscribe(&self, project: &str, session: &str, current: u64) -> watch::Receiver<u64> {
        let mut map = self.0.sessions.lock().expect("session map");
        map.entry((project.to_string(), session.to_string()))
            .or_insert_with(|| watch::channel(current).0)
            .subscribe()
    }

    pub fn publish(&self, project: &str, session: &str, seq: u64) {
        let map = self.0.sessions.lock().expect("session map");
        if let Some(tx) = map.get(&(project.to_string(), session.to_string())) {
            tx.send_replace(seq);
        }
    }

    pub fn forget_project(&self, project: &str) {
        self.0.sessions.lock().expect("session map").retain(|(p, _), _| p != project);
    }
}
