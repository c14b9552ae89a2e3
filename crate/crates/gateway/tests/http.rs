use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use bnlu_core::archive::{train_bot, ModelArchive};
use bnlu_core::corpus::generate_synthetic_corpus;
use bnlu_core::dialogue::{EventKind, PolicyConfig};
use bnlu_core::exec::Execution;
use bnlu_core::pipeline::{preset, Resources};
use bnlu_core::project::Project;
use bnlu_gateway::server::{BotReply, FeedbackRequest, ParseRequest, ParseResponse, WebhookRequest};
use bnlu_gateway::{router, Gateway, IdentityStub, SessionStore, Verdict};
use http_body_util::BodyExt;
use proptest::prelude::*;
use serde_json::Value;
use tower::ServiceExt;

const FALLBACK_TEXT: &str = "দুঃখিত, বুঝতে পারিনি। আবার বলবেন? (Sorry, I did not understand.)";

fn model() -> &'static ModelArchive {
    static MODEL: OnceLock<ModelArchive> = OnceLock::new();
    MODEL.get_or_init(|| {
        let project = Project::from_synthetic(&generate_synthetic_corpus(42, 12, 10, 3)).unwrap();
        let mut config = preset("P8").unwrap();
        config.classifier.epochs = 120;
        let policy = PolicyConfig {
            ted_epochs: 80,
            ..PolicyConfig::default()
        };
        train_bot(&project, &config, &Resources::default(), policy, Execution::default())
            .unwrap()
            .archive
    })
}

fn gateway(loaded: bool) -> Arc<Gateway> {
    let gw = Gateway::new(SessionStore::default(), Box::new(IdentityStub), 0);
    if loaded {
        gw.load_model(model().clone());
    }
    Arc::new(gw)
}

async fn call(gw: &Arc<Gateway>, method: &str, uri: &str, body: Option<String>) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or_else(Body::empty, Body::from))
        .unwrap();
    let response = router(gw.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

fn json<T: serde::Serialize>(v: &T) -> Option<String> {
    Some(serde_json::to_string(v).unwrap())
}

#[tokio::test]
async fn status_reports_the_model() {
    let (code, body) = call(&gateway(false), "GET", "/status", None).await;
    assert_eq!(code, StatusCode::OK);
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["model_loaded"], false);
    let (_, body) = call(&gateway(true), "GET", "/status", None).await;
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!((v["model_loaded"].as_bool(), v["pipeline"].as_str()), (Some(true), Some("P8")));
}

#[tokio::test]
async fn parse_returns_the_trained_intent() {
    let gw = gateway(true);
    let req = ParseRequest {
        text: "হ্যালো ভাই".into(),
        session_id: None,
    };
    let (code, body) = call(&gw, "POST", "/model/parse", json(&req)).await;
    assert_eq!(code, StatusCode::OK);
    let parsed: ParseResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(parsed.intent.name, "greet");
    assert!(parsed.confidence > 0.3);
    let total: f64 = parsed.intent_ranking.iter().map(|r| r.confidence).sum();
    assert!(total > 0.99);
    assert_eq!(parsed.language.script, bnlu_gateway::Script::Bangla);

    let (_, again) = call(&gw, "POST", "/model/parse", json(&req)).await;
    assert_eq!(again, body, "parse is idempotent");
    assert!(gw.sessions().get("anything").is_none());
}

#[tokio::test]
async fn parse_error_codes() {
    let empty = ParseRequest {
        text: "  ".into(),
        session_id: None,
    };
    assert_eq!(call(&gateway(true), "POST", "/model/parse", json(&empty)).await.0, StatusCode::BAD_REQUEST);
    let ok = ParseRequest {
        text: "hello".into(),
        session_id: None,
    };
    assert_eq!(call(&gateway(false), "POST", "/model/parse", json(&ok)).await.0, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(
        call(&gateway(true), "POST", "/model/parse", Some("{not json".into())).await.0,
        StatusCode::BAD_REQUEST
    );
}

#[tokio::test]
async fn webhook_creates_sessions_and_replies() {
    let gw = gateway(true);
    let req = WebhookRequest {
        sender: "alice".into(),
        message: "hello bhai".into(),
    };
    let (code, body) = call(&gw, "POST", "/webhooks/rest", json(&req)).await;
    assert_eq!(code, StatusCode::OK);
    let replies: Vec<BotReply> = serde_json::from_slice(&body).unwrap();
    assert!(!replies.is_empty());
    assert!(replies.iter().all(|r| r.recipient_id == "alice"));
    let greetings = &model().domain.responses["utter_greet"];
    assert!(greetings.contains(&replies[0].text), "{replies:?}");

    let (code, body) = call(&gw, "GET", "/sessions/alice/tracker", None).await;
    assert_eq!(code, StatusCode::OK);
    let tracker: Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(tracker["session_id"], "alice");
    assert_eq!(tracker["events"][0]["kind"], "session_started");
    assert_eq!(call(&gw, "GET", "/sessions/bob/tracker", None).await.0, StatusCode::NOT_FOUND);

    let bad = r#"{"sender": "alice"}"#.to_string();
    assert_eq!(call(&gw, "POST", "/webhooks/rest", Some(bad)).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&gateway(false), "POST", "/webhooks/rest", json(&req)).await.0, StatusCode::SERVICE_UNAVAILABLE);
}

/// Out-of-vocabulary input is often still classified confidently, so the
/// test takes every candidate the classifier does reject and follows it
/// through the dialogue.
#[tokio::test]
async fn gibberish_gets_the_fallback_text() {
    let gw = gateway(true);
    let candidates = ["zzqx vvwk", "...", "asdf qwer zxcv", "!!!", "…", "?!", "ঋ ঌ", "--", "xyz"];
    let rejected: Vec<&str> = candidates
        .into_iter()
        .filter(|c| model().pipeline.parse(c).fallback.is_some())
        .collect();
    assert!(!rejected.is_empty());
    for (i, message) in rejected.into_iter().enumerate() {
        let req = WebhookRequest {
            sender: format!("carol{i}"),
            message: message.into(),
        };
        let (_, body) = call(&gw, "POST", "/webhooks/rest", json(&req)).await;
        let replies: Vec<BotReply> = serde_json::from_slice(&body).unwrap();
        assert_eq!(replies.len(), 1, "{message}");
        assert_eq!(replies[0].text, FALLBACK_TEXT);
    }
}

#[tokio::test]
async fn feedback_is_validated_and_logged() {
    let path = std::env::temp_dir().join(format!("bnlu-http-feedback-{}.ndjson", std::process::id()));
    let _ = std::fs::remove_file(&path);
    let gw = Arc::new(Gateway::new(SessionStore::new(Some(path.clone())), Box::new(IdentityStub), 0));
    gw.load_model(model().clone());
    let req = WebhookRequest {
        sender: "dave".into(),
        message: "hello".into(),
    };
    call(&gw, "POST", "/webhooks/rest", json(&req)).await;

    let fb = FeedbackRequest {
        message_index: 1,
        verdict: Verdict::Wrong,
    };
    let (code, body) = call(&gw, "POST", "/sessions/dave/feedback", json(&fb)).await;
    assert_eq!(code, StatusCode::NO_CONTENT);
    assert!(body.is_empty());
    assert_eq!(call(&gw, "POST", "/sessions/nobody/feedback", json(&fb)).await.0, StatusCode::NOT_FOUND);
    let out_of_range = FeedbackRequest {
        message_index: 99,
        verdict: Verdict::Correct,
    };
    assert_eq!(call(&gw, "POST", "/sessions/dave/feedback", json(&out_of_range)).await.0, StatusCode::BAD_REQUEST);
    let bad_verdict = r#"{"message_index": 0, "verdict": "meh"}"#.to_string();
    assert_eq!(call(&gw, "POST", "/sessions/dave/feedback", Some(bad_verdict)).await.0, StatusCode::BAD_REQUEST);

    let log = std::fs::read_to_string(&path).unwrap();
    assert_eq!(log.lines().count(), 1);
    let line: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    assert_eq!((line["session_id"].as_str(), line["verdict"].as_str()), (Some("dave"), Some("wrong")));
    std::fs::remove_file(path).unwrap();
}

const MESSAGES: [&str; 5] = ["hello", "dam koto", "ধন্যবাদ", "বিদায়", "zzqx"];

fn user_texts(gw: &Gateway, id: &str) -> Vec<String> {
    gw.sessions()
        .snapshot(id)
        .map(|t| {
            t.events()
                .iter()
                .filter_map(|e| match &e.kind {
                    EventKind::UserUttered { text, .. } => Some(text.clone()),
                    _ => None,
                })
                .collect()
        })
        .unwrap_or_default()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Any interleaving of two senders leaves each tracker exactly as if the
    /// sender had talked alone.
    #[test]
    fn sessions_are_isolated(script in prop::collection::vec((0usize..2, 0usize..MESSAGES.len()), 1..8)) {
        let shared = gateway(true);
        let senders = ["s0", "s1"];
        for &(who, msg) in &script {
            shared.webhook(&WebhookRequest { sender: senders[who].into(), message: MESSAGES[msg].into() }).unwrap();
        }
        for (who, id) in senders.iter().enumerate() {
            let alone = gateway(true);
            for &(_, msg) in script.iter().filter(|(w, _)| *w == who) {
                alone.webhook(&WebhookRequest { sender: id.to_string(), message: MESSAGES[msg].into() }).unwrap();
            }
            prop_assert_eq!(shared.sessions().snapshot(id), alone.sessions().snapshot(id));
            let expected: Vec<String> = script.iter().filter(|(w, _)| *w == who).map(|&(_, m)| MESSAGES[m].to_string()).collect();
            prop_assert_eq!(user_texts(&shared, id), expected);
        }
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_senders_do_not_share_events() {
    let gw = gateway(true);
    let mut tasks = Vec::new();
    for i in 0..8 {
        let gw = gw.clone();
        tasks.push(tokio::spawn(async move {
            for m in MESSAGES {
                let req = WebhookRequest {
                    sender: format!("user{i}"),
                    message: m.into(),
                };
                call(&gw, "POST", "/webhooks/rest", json(&req)).await;
            }
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    for i in 0..8 {
        assert_eq!(user_texts(&gw, &format!("user{i}")), MESSAGES);
    }
}
