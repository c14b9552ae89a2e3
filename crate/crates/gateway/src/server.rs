use std::sync::{Arc, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bnlu_core::archive::ModelArchive;
use bnlu_core::corpus::EntitySpan;
use bnlu_core::dialogue::{DialogueEngine, Tracker};
use bnlu_core::post::FallbackReason;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::config::GatewayConfig;
use crate::language::LanguageTag;
use crate::session::{FeedbackError, SessionStore, Verdict};
use crate::translit::{route_message, Routing, TransliterationClient};

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("model not loaded")]
    ModelNotLoaded,
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::ModelNotLoaded => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(json!({ "error": self.to_string() }))).into_response()
    }
}

impl From<FeedbackError> for ApiError {
    fn from(e: FeedbackError) -> Self {
        match e {
            FeedbackError::UnknownSession(_) => ApiError::NotFound(e.to_string()),
            FeedbackError::UnknownMessage { .. } => ApiError::BadRequest(e.to_string()),
            FeedbackError::Log(_) => ApiError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseRequest {
    pub text: String,
    #[serde(default)]
    pub session_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedIntent {
    pub name: String,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseResponse {
    pub text: String,
    /// What the classifier saw after language routing.
    pub routed_text: String,
    pub intent: RankedIntent,
    pub confidence: f64,
    pub intent_ranking: Vec<RankedIntent>,
    pub entities: Vec<EntitySpan>,
    pub fallback: Option<FallbackReason>,
    pub language: LanguageTag,
    pub routing: Routing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WebhookRequest {
    pub sender: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BotReply {
    pub recipient_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackRequest {
    pub message_index: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatusResponse {
    pub model_loaded: bool,
    pub pipeline: String,
}

/// Shared service state. The model is immutable once loaded and swapped as
/// a whole.
pub struct Gateway {
    model: RwLock<Option<Arc<ModelArchive>>>,
    sessions: SessionStore,
    transliteration: Box<dyn TransliterationClient>,
    variant_seed: u64,
}

impl Gateway {
    pub fn new(sessions: SessionStore, transliteration: Box<dyn TransliterationClient>, variant_seed: u64) -> Self {
        Gateway {
            model: RwLock::new(None),
            sessions,
            transliteration,
            variant_seed,
        }
    }

    pub fn from_config(config: &GatewayConfig) -> Self {
        Self::new(
            SessionStore::new(config.feedback_log.clone()),
            config.transliteration.client(),
            config.variant_seed,
        )
    }

    pub fn load_model(&self, archive: ModelArchive) {
        *self.model.write().unwrap_or_else(|p| p.into_inner()) = Some(Arc::new(archive));
    }

    fn model(&self) -> Result<Arc<ModelArchive>, ApiError> {
        self.model
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
            .ok_or(ApiError::ModelNotLoaded)
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.sessions
    }

    pub fn status(&self) -> StatusResponse {
        let model = self.model().ok();
        StatusResponse {
            model_loaded: model.is_some(),
            pipeline: model.map(|m| m.pipeline.config.name.clone()).unwrap_or_default(),
        }
    }

    /// Stateless: never touches a tracker, even when `session_id` is given.
    pub fn parse(&self, request: &ParseRequest) -> Result<ParseResponse, ApiError> {
        if request.text.trim().is_empty() {
            return Err(ApiError::BadRequest("text must not be empty".into()));
        }
        let model = self.model()?;
        let routed = route_message(&request.text, self.transliteration.as_ref());
        let parsed = model.pipeline.parse(&routed.text);
        let ranking: Vec<RankedIntent> = parsed
            .intent_ranking
            .ranking
            .iter()
            .map(|(name, confidence)| RankedIntent {
                name: name.clone(),
                confidence: *confidence,
            })
            .collect();
        Ok(ParseResponse {
            text: request.text.clone(),
            routed_text: routed.text,
            intent: RankedIntent {
                name: parsed.intent,
                confidence: parsed.confidence,
            },
            confidence: parsed.confidence,
            intent_ranking: ranking,
            entities: parsed.entities,
            fallback: parsed.fallback,
            language: routed.language,
            routing: routed.routing,
        })
    }

    /// Runs one dialogue turn on the sender's tracker, creating it on first
    /// contact, and returns the bot's messages in order.
    pub fn webhook(&self, request: &WebhookRequest) -> Result<Vec<BotReply>, ApiError> {
        if request.sender.trim().is_empty() || request.message.trim().is_empty() {
            return Err(ApiError::BadRequest("sender and message must not be empty".into()));
        }
        let model = self.model()?;
        let routed = route_message(&request.message, self.transliteration.as_ref());
        let engine = DialogueEngine {
            parser: &model.pipeline,
            policies: &model.dialogue,
            domain: &model.domain,
            variant_seed: self.variant_seed,
        };
        let outcome = self
            .sessions
            .with_tracker(&request.sender, |tracker| engine.run_turn(tracker, &routed.text))
            .map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(outcome
            .responses
            .into_iter()
            .map(|r| BotReply {
                recipient_id: request.sender.clone(),
                text: r.text,
            })
            .collect())
    }

    pub fn tracker(&self, session_id: &str) -> Result<Tracker, ApiError> {
        self.sessions
            .snapshot(session_id)
            .ok_or_else(|| ApiError::NotFound(format!("unknown session `{session_id}`")))
    }

    pub fn feedback(&self, session_id: &str, request: &FeedbackRequest) -> Result<(), ApiError> {
        self.sessions.record_feedback(session_id, request.message_index, request.verdict)?;
        Ok(())
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ApiError> {
    payload.map(|Json(v)| v).map_err(|e| ApiError::BadRequest(e.body_text()))
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
}

async fn status_handler(State(gw): State<Arc<Gateway>>) -> Json<StatusResponse> {
    Json(gw.status())
}

async fn parse_handler(
    State(gw): State<Arc<Gateway>>,
    payload: Result<Json<ParseRequest>, JsonRejection>,
) -> Result<Json<ParseResponse>, ApiError> {
    let request = body(payload)?;
    blocking(move || gw.parse(&request)).await.map(Json)
}

async fn webhook_handler(
    State(gw): State<Arc<Gateway>>,
    payload: Result<Json<WebhookRequest>, JsonRejection>,
) -> Result<Json<Vec<BotReply>>, ApiError> {
    let request = body(payload)?;
    blocking(move || gw.webhook(&request)).await.map(Json)
}

async fn tracker_handler(State(gw): State<Arc<Gateway>>, Path(id): Path<String>) -> Result<Json<Tracker>, ApiError> {
    gw.tracker(&id).map(Json)
}

async fn feedback_handler(
    State(gw): State<Arc<Gateway>>,
    Path(id): Path<String>,
    payload: Result<Json<FeedbackRequest>, JsonRejection>,
) -> Result<StatusCode, ApiError> {
    let request = body(payload)?;
    blocking(move || gw.feedback(&id, &request)).await?;
    Ok(StatusCode::NO_CONTENT)
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/status", get(status_handler))
        .route("/model/parse", post(parse_handler))
        .route("/webhooks/rest", post(webhook_handler))
        .route("/sessions/{id}/tracker", get(tracker_handler))
        .route("/sessions/{id}/feedback", post(feedback_handler))
        .with_state(gateway)
}
