//! HTTP front end for a trained bot: message parsing, the REST webhook,
//! per-session trackers, tester feedback, and script-based language routing.

pub mod config;
pub mod language;
pub mod server;
pub mod session;
pub mod translit;

use std::net::SocketAddr;
use std::sync::Arc;

use bnlu_core::archive::{ArchiveError, ModelArchive};
use thiserror::Error;

pub use config::{GatewayConfig, TransliterationKind};
pub use language::{detect_language, LanguageTag, Script};
pub use server::{router, ApiError, Gateway};
pub use session::{FeedbackRecord, SessionStore, Verdict};
pub use translit::{route_message, IdentityStub, RoutedMessage, Routing, RuleTable, TransliterationClient};

#[derive(Debug, Error)]
pub enum ServeError {
    #[error(transparent)]
    Model(#[from] ArchiveError),
    #[error("cannot listen on {addr}: {message}")]
    Bind { addr: String, message: String },
    #[error("server stopped: {0}")]
    Serve(String),
}

/// Builds the service state, loading the configured model if any.
pub fn gateway_from_config(config: &GatewayConfig) -> Result<Arc<Gateway>, ServeError> {
    let gateway = Gateway::from_config(config);
    if let Some(path) = &config.model {
        gateway.load_model(ModelArchive::load(path)?);
    }
    Ok(Arc::new(gateway))
}

/// Serves until the process is stopped. `on_ready` receives the bound address.
pub async fn serve(config: &GatewayConfig, on_ready: impl FnOnce(SocketAddr)) -> Result<(), ServeError> {
    let gateway = gateway_from_config(config)?;
    let addr = format!("{}:{}", config.host, config.port);
    let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| ServeError::Bind {
        addr: addr.clone(),
        message: e.to_string(),
    })?;
    if let Ok(local) = listener.local_addr() {
        on_ready(local);
    }
    axum::serve(listener, router(gateway))
        .await
        .map_err(|e| ServeError::Serve(e.to_string()))
}
