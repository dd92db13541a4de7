use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use convrel::conversation::Topic;
use convrel::interface::{router, AnnotationStore, AppState};

fn app_with(store: AnnotationStore) -> Router {
    let topics = vec![
        Topic::new(
            31,
            &[
                "What is throat cancer?",
                "Is it treatable?",
                "Tell me about lung cancer.",
                "What are its symptoms?",
                "Any genetic causes?",
                "What were the causes of the Bronze Age collapse?",
                "What about its effects on the Hittites?",
                "How is it diagnosed?",
            ],
        ),
        Topic::new(32, &["How is goat cheese made?", "What wine goes with it?"]),
    ];
    router(AppState::new(topics, store))
}

fn app() -> Router {
    app_with(AnnotationStore::in_memory(3))
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let json = serde_json::from_str(&text).unwrap_or(Value::Null);
    (status, json, text)
}

async fn annotate(app: &Router, turn: u32, rel: &[u32], who: &str) -> StatusCode {
    let body = json!({ "topic": 31, "turn": turn, "relevant_turns": rel, "annotator": who });
    call(app, "POST", "/annotations", Some(body)).await.0
}

#[tokio::test]
async fn agreement_of_two_out_of_three() {
    let app = app();
    for (who, set) in [("a", &[1][..]), ("b", &[1]), ("c", &[1, 6])] {
        assert_eq!(annotate(&app, 8, set, who).await, StatusCode::CREATED);
    }
    let (status, v, _) = call(&app, "GET", "/agreement/31/8", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!((v["percentage"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["display"], "66.7%");
    assert_eq!(v["consensus"], json!([1]));
    assert_eq!(v["flagged"], false);
}

#[tokio::test]
async fn rejects_bad_input() {
    let app = app();
    // a turn cannot depend on a later one
    assert_eq!(annotate(&app, 5, &[7], "a").await, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, ..) = call(&app, "GET", "/topics/99", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, ..) = call(
        &app,
        "POST",
        "/annotations",
        Some(json!({ "topic": 99, "turn": 2, "relevant_turns": [1], "annotator": "a" })),
    )
    .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(annotate(&app, 9, &[1], "a").await, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, ..) = call(&app, "POST", "/annotations", Some(json!({ "topic": 31 }))).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, ..) = call(&app, "GET", "/tasks/next", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    // nothing was recorded
    let (_, _, csv) = call(&app, "GET", "/export", None).await;
    assert_eq!(csv.lines().count(), 1);
}

#[tokio::test]
async fn disagreement_is_flagged_then_adjudicated() {
    let app = app();
    for (who, set) in [("a", &[1][..]), ("b", &[6]), ("c", &[2])] {
        annotate(&app, 7, set, who).await;
    }
    let (_, flagged, _) = call(&app, "GET", "/flagged", None).await;
    assert_eq!(flagged.as_array().unwrap().len(), 1);
    assert_eq!(flagged[0]["turn"], 7);
    assert_eq!(flagged[0]["selections"]["b"], json!([6]));

    // only flagged turns can be adjudicated
    let (status, ..) = call(
        &app,
        "POST",
        "/adjudications",
        Some(json!({ "topic": 31, "turn": 8, "relevant_turns": [1], "adjudicator": "lead" })),
    )
    .await;
    assert_eq!(status, StatusCode::CONFLICT);

    let (status, label, _) = call(
        &app,
        "POST",
        "/adjudications",
        Some(json!({ "topic": 31, "turn": 7, "relevant_turns": [6], "adjudicator": "lead" })),
    )
    .await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(label["relevant_turns"], json!([6]));
    let (_, flagged, _) = call(&app, "GET", "/flagged", None).await;
    assert_eq!(flagged, json!([]));
    let (_, _, csv) = call(&app, "GET", "/export", None).await;
    assert_eq!(csv, "topic_number,turn_number,relevant_turn_numbers,source\n31,7,6,adjudication\n");
}

#[tokio::test]
async fn export_has_one_row_per_settled_turn() {
    let app = app();
    for turn in 2..=8 {
        for who in ["a", "b", "c"] {
            annotate(&app, turn, &[1], who).await;
        }
    }
    let (status, _, csv) = call(&app, "GET", "/export", None).await;
    assert_eq!(status, StatusCode::OK);
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    assert_eq!(rows[0], "31,2,1,agreement");
}

#[tokio::test]
async fn tasks_walk_every_later_turn() {
    let app = app();
    let (_, v, _) = call(&app, "GET", "/tasks/next?annotator=a", None).await;
    assert_eq!(v["task"]["topic"], 31);
    assert_eq!(v["task"]["turn"], 2);
    assert_eq!(v["task"]["context"].as_array().unwrap().len(), 1);
    assert_eq!(v["progress"], json!({ "annotated": 0, "total": 8 }));
    for turn in 2..=8 {
        annotate(&app, turn, &[], "a").await;
    }
    let (_, v, _) = call(&app, "GET", "/tasks/next?annotator=a", None).await;
    assert_eq!(v["task"]["topic"], 32);
    let body = json!({ "topic": 32, "turn": 2, "relevant_turns": [1], "annotator": "a" });
    let (_, v, _) = call(&app, "POST", "/annotations", Some(body)).await;
    assert_eq!(v["progress"]["annotated"], 8);
    let (_, v, _) = call(&app, "GET", "/tasks/next?annotator=a", None).await;
    assert_eq!(v["done"], true);
    // another annotator starts from the beginning
    let (_, v, _) = call(&app, "GET", "/tasks/next?annotator=b", None).await;
    assert_eq!(v["task"]["turn"], 2);
}

#[tokio::test]
async fn topics_are_listed() {
    let app = app();
    let (_, v, _) = call(&app, "GET", "/topics", None).await;
    assert_eq!(v, json!([{ "number": 31, "turns": 8 }, { "number": 32, "turns": 2 }]));
    let (_, v, _) = call(&app, "GET", "/topics/32", None).await;
    assert_eq!(v["turns"][1]["raw_utterance"], "What wine goes with it?");
}

#[tokio::test]
async fn agreement_needs_two_annotators() {
    let app = app();
    annotate(&app, 3, &[], "a").await;
    let (status, ..) = call(&app, "GET", "/agreement/31/3", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
}

#[tokio::test]
async fn log_survives_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("annotations.jsonl");
    {
        let app = app_with(AnnotationStore::open(&path, 3).unwrap());
        for (who, set) in [("a", &[1][..]), ("b", &[1]), ("c", &[1, 6])] {
            annotate(&app, 8, set, who).await;
        }
    }
    let app = app_with(AnnotationStore::open(&path, 3).unwrap());
    let (_, v, _) = call(&app, "GET", "/agreement/31/8", None).await;
    assert_eq!(v["consensus"], json!([1]));
    let (_, _, csv) = call(&app, "GET", "/export", None).await;
    assert!(csv.ends_with("31,8,1,agreement\n"));
}
