//! HTTP service and command line front end for taxonomy projects.

pub mod auth;
pub mod bundle;
pub mod cli;
pub mod error;
pub mod routes;
pub mod state;
pub mod webhook;

pub use routes::router;
pub use state::{AppState, Config, SharedState};

/// Serves `state` on `listener` with the webhook worker running alongside.
pub async fn serve(state: SharedState, listener: tokio::net::TcpListener) -> std::io::Result<()> {
    let worker = webhook::spawn_worker(state.clone());
    let result = axum::serve(listener, router(state)).with_graceful_shutdown(shutdown_signal()).await;
    worker.abort();
    result
}

async fn shutdown_signal() {
    let _ = tokio::signal::ctrl_c().await;
}
