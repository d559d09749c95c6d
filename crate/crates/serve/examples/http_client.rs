//! Drive the REST API in process: upload a CSV, list its attributes and ask
//! for constrained recommendations. No socket is opened.
//!
//! cargo run -p vizrec-serve --example http_client

use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::tabular::{split_corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};
use vizrec_serve::api::{router, AppState};

const CSV: &str = "product,price,rating,launched\nlamp,19.9,4.1,2021-03-01\ndesk,149,4.6,2020-09-12\nchair,89.5,3.9,2022-01-20\nshelf,59,4.3,2019-11-05\n";

async fn call(
    app: &axum::Router,
    method: &str,
    uri: &str,
    content_type: &str,
    body: String,
) -> (u16, Value) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", content_type)
        .body(Body::from(body))
        .expect("valid request");
    let response = app
        .clone()
        .oneshot(request)
        .await
        .expect("infallible service");
    let status = response.status().as_u16();
    let bytes = response
        .into_body()
        .collect()
        .await
        .expect("body")
        .to_bytes();
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

#[tokio::main(flavor = "current_thread")]
async fn main() -> anyhow::Result<()> {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: 30,
        seed: 2,
        ..Default::default()
    })?;
    let (train_split, val_split, _) = split_corpus(&corpus, SplitFractions::default(), 2)?;
    let cfg = TrainConfig {
        epochs: 3,
        seed: 2,
        ..Default::default()
    };
    let (model, _) = train(&train_split, &val_split, &cfg)?;
    let app = router(Arc::new(AppState::new(Some(model))));

    let (status, health) = call(&app, "GET", "/health", "application/json", String::new()).await;
    println!("GET /health -> {status} {health}");

    let (status, upload) = call(&app, "POST", "/datasets", "text/csv", CSV.into()).await;
    let id = upload["dataset_id"]
        .as_str()
        .unwrap_or_default()
        .to_string();
    println!("POST /datasets -> {status} id {id}");

    let (_, attrs) = call(
        &app,
        "GET",
        &format!("/datasets/{id}/attributes"),
        "application/json",
        String::new(),
    )
    .await;
    println!("attributes: {attrs}");

    let query = json!({"top_k": 3, "constraints": {"required_attributes": ["price"]}});
    let uri = format!("/datasets/{id}/recommendations");
    let (status, recs) = call(&app, "POST", &uri, "application/json", query.to_string()).await;
    println!("POST {uri} -> {status}");
    for r in recs.as_array().into_iter().flatten() {
        println!(
            "  #{} {:.4} {}",
            r["rank"],
            r["score"].as_f64().unwrap_or(0.0),
            r["visualization"]["config_id"]
        );
    }

    let (status, err) = call(
        &app,
        "GET",
        "/datasets/ds-missing/attributes",
        "application/json",
        String::new(),
    )
    .await;
    println!("unknown dataset -> {status} {err}");
    Ok(())
}
