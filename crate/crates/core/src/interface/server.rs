//! JSON API behind the annotation UI.
//!
//! Topics are loaded once and never modified. All writes go through one
//! mutex-guarded [`AnnotationStore`], so appends are serialized and every
//! read sees a consistent snapshot.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::store::{AnnotationStore, LogEntry};
use crate::conversation::{AnnotationRecord, Topic, TurnKey};
use crate::error::Error;

pub struct AppState {
    topics: BTreeMap<u32, Topic>,
    store: Mutex<AnnotationStore>,
}

impl AppState {
    pub fn new(topics: Vec<Topic>, store: AnnotationStore) -> Arc<Self> {
        Arc::new(AppState {
            topics: topics.into_iter().map(|t| (t.number, t)).collect(),
            store: Mutex::new(store),
        })
    }

    fn store(&self) -> MutexGuard<'_, AnnotationStore> {
        // a panic mid-request cannot leave the store half-written: append
        // swaps in the new state only after the log write succeeded
        self.store.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn topic(&self, n: u32) -> Result<&Topic, ApiError> {
        self.topics.get(&n).ok_or(ApiError(StatusCode::NOT_FOUND, format!("unknown topic {n}")))
    }

    /// Turns an annotator is asked about: every turn from the second on.
    fn tasks(&self) -> impl Iterator<Item = TurnKey> + '_ {
        self.topics
            .values()
            .flat_map(|t| t.turns.iter().filter(|u| u.number >= 2).map(move |u| (t.number, u.number)))
    }
}

#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::UnknownTopic(_) => StatusCode::NOT_FOUND,
            Error::Validation(_) | Error::InvalidInput(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::NotFlagged { .. } => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/topics", get(list_topics))
        .route("/topics/{n}", get(get_topic))
        .route("/tasks/next", get(next_task))
        .route("/annotations", post(post_annotation))
        .route("/agreement/{topic}/{turn}", get(get_agreement))
        .route("/flagged", get(get_flagged))
        .route("/adjudications", post(post_adjudication))
        .route("/export", get(export))
        .with_state(state)
}

/// Serves until the process is stopped.
pub async fn serve(addr: &str, state: Arc<AppState>) -> crate::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| Error::io(addr, e))?;
    log::info!("listening on {}", listener.local_addr().map_err(|e| Error::io(addr, e))?);
    axum::serve(listener, router(state)).await.map_err(|e| Error::io(addr, e))
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Serialize)]
struct TopicSummary {
    number: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    title: Option<String>,
    turns: usize,
}

async fn list_topics(State(s): State<Arc<AppState>>) -> Json<Vec<TopicSummary>> {
    let out = s
        .topics
        .values()
        .map(|t| TopicSummary {
            number: t.number,
            title: t.title.clone(),
            turns: t.len(),
        })
        .collect();
    Json(out)
}

async fn get_topic(State(s): State<Arc<AppState>>, Path(n): Path<u32>) -> ApiResult<Json<Topic>> {
    Ok(Json(s.topic(n)?.clone()))
}

#[derive(Deserialize)]
struct NextQuery {
    annotator: Option<String>,
}

async fn next_task(State(s): State<Arc<AppState>>, Query(q): Query<NextQuery>) -> ApiResult<Json<serde_json::Value>> {
    let annotator = q.annotator.filter(|a| !a.trim().is_empty()).ok_or(ApiError(
        StatusCode::BAD_REQUEST,
        "missing `annotator` query parameter".into(),
    ))?;
    let store = s.store();
    let book = store.book();
    let total = s.tasks().count();
    let done = s.tasks().filter(|k| book.has_annotated(&annotator, *k)).count();
    let progress = json!({ "annotated": done, "total": total });
    let Some((topic, turn)) = s.tasks().find(|k| !book.has_annotated(&annotator, *k)) else {
        return Ok(Json(json!({ "done": true, "task": null, "progress": progress })));
    };
    let t = s.topic(topic)?;
    let context: Vec<_> = t.turns.iter().filter(|u| u.number < turn).collect();
    Ok(Json(json!({
        "done": false,
        "task": {
            "topic": topic,
            "turn": turn,
            "utterance": t.utterance(turn),
            "context": context,
        },
        "progress": progress,
    })))
}

#[derive(Deserialize)]
struct AnnotationBody {
    topic: u32,
    turn: u32,
    relevant_turns: Vec<u32>,
    annotator: String,
}

fn check_turn(s: &AppState, topic: u32, turn: u32) -> ApiResult<()> {
    let t = s.topic(topic)?;
    if turn < 1 || turn as usize > t.len() {
        return Err(ApiError(
            StatusCode::UNPROCESSABLE_ENTITY,
            format!("topic {topic} has no turn {turn}"),
        ));
    }
    Ok(())
}

async fn post_annotation(
    State(s): State<Arc<AppState>>,
    body: Result<Json<AnnotationBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(b) = body?;
    check_turn(&s, b.topic, b.turn)?;
    let mut rec = AnnotationRecord::new(b.topic, b.turn, b.relevant_turns, b.annotator);
    rec.timestamp = now();
    let annotator = rec.annotator.clone();
    let mut store = s.store();
    store.append(LogEntry::Annotation(rec))?;
    let book = store.book();
    let annotated = s.tasks().filter(|k| book.has_annotated(&annotator, *k)).count();
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "topic": b.topic,
            "turn": b.turn,
            "progress": { "annotated": annotated, "total": s.tasks().count() },
        })),
    ))
}

async fn get_agreement(
    State(s): State<Arc<AppState>>,
    Path((topic, turn)): Path<(u32, u32)>,
) -> ApiResult<Json<serde_json::Value>> {
    check_turn(&s, topic, turn)?;
    let store = s.store();
    let book = store.book();
    let records = book.records_for((topic, turn));
    let selections: BTreeMap<&str, _> = records.iter().map(|r| (r.annotator.as_str(), &r.relevant_turns)).collect();
    let a = book.agreement((topic, turn)).map_err(|e| ApiError(StatusCode::CONFLICT, e.to_string()))?;
    Ok(Json(json!({
        "topic": topic,
        "turn": turn,
        "percentage": a.percentage,
        "display": format!("{:.1}%", a.percentage * 100.0),
        "agreeing": a.agreeing,
        "annotators": a.annotators,
        "consensus": a.consensus,
        "flagged": book.is_flagged((topic, turn)),
        "adjudicated": book.adjudicator((topic, turn)).is_some(),
        "selections": selections,
    })))
}

async fn get_flagged(State(s): State<Arc<AppState>>) -> Json<Vec<serde_json::Value>> {
    let store = s.store();
    let book = store.book();
    let out = book
        .flagged()
        .into_iter()
        .map(|(topic, turn)| {
            let records = book.records_for((topic, turn));
            let selections: BTreeMap<&str, _> =
                records.iter().map(|r| (r.annotator.as_str(), r.relevant_turns.clone())).collect();
            let pct = book.agreement((topic, turn)).map(|a| a.percentage).unwrap_or(0.0);
            json!({
                "topic": topic,
                "turn": turn,
                "percentage": pct,
                "utterance": s.topics.get(&topic).and_then(|t| t.utterance(turn)),
                "selections": selections,
            })
        })
        .collect();
    Json(out)
}

#[derive(Deserialize)]
struct AdjudicationBody {
    topic: u32,
    turn: u32,
    relevant_turns: Vec<u32>,
    adjudicator: String,
}

async fn post_adjudication(
    State(s): State<Arc<AppState>>,
    body: Result<Json<AdjudicationBody>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<serde_json::Value>)> {
    let Json(b) = body?;
    check_turn(&s, b.topic, b.turn)?;
    let label = s
        .store()
        .append(LogEntry::Adjudication {
            topic: b.topic,
            turn: b.turn,
            relevant_turns: b.relevant_turns.into_iter().collect(),
            adjudicator: b.adjudicator,
            timestamp: now(),
        })?
        .expect("adjudication yields a label");
    Ok((StatusCode::CREATED, Json(json!(label))))
}

async fn export(State(s): State<Arc<AppState>>) -> ApiResult<Response> {
    let csv = s.store().export_csv()?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
