//! HTTP JSON service for coos projects.
//!
//! Projects, session logs, questionnaires and accounts live in a
//! [`coos_core::store::Store`] directory. Writes to one project are
//! serialized; session changes wake clients blocked on
//! `GET /projects/{project}/sessions/{session}/wait?since=N`.

use std::future::Future;
use std::io;

use thiserror::Error;
use tokio::net::TcpListener;

mod auth;
mod error;
mod routes;
mod state;

pub use auth::{AccountView, AuthMode, Caller, Credential, Role, Session, UserAccount};
pub use error::{ApiError, ErrorBody};
pub use routes::{router, SessionResults, SessionView, WaitResponse};
pub use state::{AppState, ServerConfig};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("cannot open data directory: {}", .0.body.message)]
    Setup(ApiError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Serves on an already bound listener until `shutdown` resolves.
pub async fn run(
    listener: TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// Binds `config.bind` and serves until Ctrl-C.
pub async fn serve(config: ServerConfig) -> Result<(), ServeError> {
    let state = AppState::new(config.clone()).map_err(ServeError::Setup)?;
    let listener = TcpListener::bind(config.bind).await?;
    tracing::info!(addr = %listener.local_addr()?, data_dir = %config.data_dir.display(), "serving");
    run(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await?;
    Ok(())
}
