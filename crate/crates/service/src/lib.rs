//! CLI and HTTP facade over the configuration toolkit.

pub mod api;
pub mod cli;
pub mod error;
pub mod session;
pub mod state;
pub mod views;

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use fmcq_core::io::ModelFormat;
use fmcq_core::FeatureModel;

pub use api::router;
pub use state::AppState;

/// Loads `models` and serves the API on `port` until the process ends.
pub async fn serve(port: u16, models: Vec<(String, ModelFormat, FeatureModel)>) -> std::io::Result<()> {
    let state = Arc::new(AppState::default());
    for (name, format, fm) in models {
        let entry = state.insert_model(state::ModelEntry::new(AppState::new_id(), name, format, fm));
        println!("loaded {} as {}", entry.name, entry.id);
    }
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });
    let addr = SocketAddr::from(([127, 0, 0, 1], port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    println!("listening on http://{addr}");
    axum::serve(listener, router(state)).await
}
