use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use herbar_core::targetdb::rate_target;
use serde::Serialize;
use serde_json::json;

use crate::protocol::{ErrorCode, ServerMessage};
use crate::Engine;

#[derive(Debug, Serialize)]
struct TargetSummary<'a> {
    id: u32,
    name: &'a str,
    stars: u8,
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/targets", get(targets))
        .route("/content/{id}", get(content))
        .route("/models/{target_id}", get(model))
        .route("/session", get(session))
        .with_state(engine)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn targets(State(engine): State<Arc<Engine>>) -> Response {
    let list: Vec<TargetSummary> = engine
        .db
        .targets()
        .iter()
        .map(|t| TargetSummary {
            id: t.id,
            name: &t.name,
            stars: rate_target(t).stars,
        })
        .collect();
    Json(list).into_response()
}

fn not_found(what: &str, id: &str) -> Response {
    (
        StatusCode::NOT_FOUND,
        Json(json!({"error": "NotFound", "kind": what, "id": id})),
    )
        .into_response()
}

async fn content(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> Response {
    match engine.catalog.get(&id) {
        Some(entry) => Json(entry).into_response(),
        None => not_found("content", &id),
    }
}

async fn model(State(engine): State<Arc<Engine>>, Path(target_id): Path<u32>) -> Response {
    match engine.model_for(target_id) {
        Some(Ok(model)) => Json(model).into_response(),
        Some(Err(e)) => (
            StatusCode::INTERNAL_SERVER_ERROR,
            Json(json!({"error": "InvalidModel", "message": e.to_string()})),
        )
            .into_response(),
        None => not_found("model", &target_id.to_string()),
    }
}

async fn session(State(engine): State<Arc<Engine>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, engine))
}

async fn run_session(mut socket: WebSocket, engine: Arc<Engine>) {
    let mut session = engine.new_session();
    while let Some(Ok(msg)) = socket.recv().await {
        let reply = match msg {
            Message::Text(text) => {
                let engine = engine.clone();
                let result = tokio::task::spawn_blocking(move || {
                    let reply = session.handle_text(&engine, text.as_str());
                    (session, reply)
                })
                .await;
                match result {
                    Ok((s, reply)) => {
                        session = s;
                        reply
                    }
                    Err(e) => {
                        tracing::error!("frame handler panicked: {e}");
                        break;
                    }
                }
            }
            Message::Binary(_) => ServerMessage::Error {
                seq: None,
                error: ErrorCode::MalformedFrame,
                message: "expected a JSON text message".into(),
            },
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
            break;
        }
    }
}
