//! Fixtures shared by the service tests and the acceptance run.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::{Arc, OnceLock};

use axum::body::Body;
use axum::http::{header, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use vizrec::encoding::CrossProductSpec;
use vizrec::metafeatures::{compute_metafeatures, MetaFeatureSchema, Normalizer};
use vizrec::model::{ModelHyperparams, WideDeepModel};
use vizrec::tabular::{parse_dataset, AttributeType};
use vizrec::vis_space::{
    chart_spec, generate_candidates, Aggregate, Channel, ChannelSpec, ConfigVocabulary, Mark,
    VisConfiguration,
};
use vizrec_serve::api::{router, AppState};

use AttributeType::{Nominal as N, Ordinal as O, Quantitative as Q, Temporal as T};

pub fn config(mark: Mark, channels: &[(Channel, AttributeType, Aggregate)]) -> VisConfiguration {
    VisConfiguration::new(
        "",
        mark,
        channels
            .iter()
            .map(|&(c, t, a)| ChannelSpec::field(c, t).with_aggregate(a))
            .collect(),
    )
    .unwrap()
}

pub fn vocabulary() -> ConfigVocabulary {
    use Aggregate::*;
    use Channel::*;
    let configs = vec![
        config(Mark::Bar, &[(X, N, None), (Y, Q, Mean)]),
        config(Mark::Bar, &[(X, N, None), (Y, Q, Sum)]),
        config(Mark::Bar, &[(X, O, None), (Y, Q, Mean)]),
        config(Mark::Bar, &[(X, N, None), (Y, Q, Count), (Color, N, None)]),
        config(Mark::Histogram, &[(X, Q, Bin), (Y, Q, Count)]),
        config(Mark::Scatter, &[(X, Q, None), (Y, Q, None)]),
        config(
            Mark::Scatter,
            &[(X, Q, None), (Y, Q, None), (Color, N, None)],
        ),
        config(
            Mark::Scatter,
            &[(X, Q, None), (Y, Q, None), (Size, Q, None)],
        ),
        config(Mark::Scatter, &[(X, N, None), (Y, N, None)]),
        config(Mark::Line, &[(X, T, None), (Y, Q, None)]),
        config(Mark::Line, &[(X, T, None), (Y, Q, Mean), (Color, N, None)]),
        config(Mark::Area, &[(X, T, None), (Y, Q, Sum)]),
        config(Mark::Box, &[(X, N, None), (Y, Q, None)]),
        config(Mark::Pie, &[(Color, N, None), (Size, Q, Sum)]),
        config(Mark::Line, &[(X, O, None), (Y, Q, None)]),
    ];
    ConfigVocabulary::new(
        configs
            .into_iter()
            .zip(1..)
            .map(|(c, n)| (c, n * 3 % 7 + 1))
            .collect(),
    )
    .unwrap()
}

pub fn cars_json() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 40;
    let pick = |rng: &mut ChaCha8Rng, xs: &[&str]| json!(xs[rng.gen_range(0..xs.len())]);
    let col = |name: &str, kind: &str, values: Vec<Value>| json!({"name": name, "type": kind, "values": values});
    let columns = vec![
        col(
            "origin",
            "nominal",
            (0..n)
                .map(|_| pick(&mut rng, &["USA", "Europe", "Japan"]))
                .collect(),
        ),
        col(
            "make",
            "nominal",
            (0..n)
                .map(|_| pick(&mut rng, &["ford", "vw", "honda", "fiat"]))
                .collect(),
        ),
        col(
            "mpg",
            "quantitative",
            (0..n).map(|_| json!(rng.gen_range(10.0..40.0))).collect(),
        ),
        col(
            "horsepower",
            "quantitative",
            (0..n).map(|_| json!(rng.gen_range(50.0..220.0))).collect(),
        ),
        col(
            "weight",
            "quantitative",
            (0..n)
                .map(|i| {
                    if i % 9 == 0 {
                        Value::Null
                    } else {
                        json!(rng.gen_range(1500.0..5000.0))
                    }
                })
                .collect(),
        ),
        col(
            "year",
            "temporal",
            (0..n)
                .map(|i| json!(format!("{}-01-01", 1970 + i % 12)))
                .collect(),
        ),
        col(
            "size",
            "ordinal",
            (0..n).map(|_| pick(&mut rng, &["S", "M", "L"])).collect(),
        ),
    ];
    json!({"id": "cars", "columns": columns}).to_string()
}

pub fn model() -> &'static WideDeepModel {
    static MODEL: OnceLock<WideDeepModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let schema = MetaFeatureSchema::default();
        let dataset = parse_dataset("cars", &cars_json(), None, None).unwrap();
        let vectors: Vec<_> = dataset
            .attributes
            .iter()
            .map(|a| compute_metafeatures(a, &schema).unwrap())
            .collect();
        let normalizer = Normalizer::fit(&vectors);
        WideDeepModel::init(
            schema,
            normalizer,
            vocabulary(),
            CrossProductSpec::new(Vec::new()).unwrap(),
            ModelHyperparams {
                hidden: vec![16, 8],
                ..Default::default()
            },
            5,
        )
        .unwrap()
    })
}

pub fn app() -> Router {
    router(Arc::new(AppState::new(Some(model().clone()))))
}

pub async fn send(
    app: &Router,
    method: &str,
    uri: &str,
    content_type: &str,
    body: impl Into<Body>,
) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header(header::CONTENT_TYPE, content_type)
        .body(body.into())
        .unwrap();
    let response = app.clone().oneshot(request).await.unwrap();
    let status = response.status();
    let bytes = response
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes()
        .to_vec();
    (status, bytes)
}

pub async fn send_json(app: &Router, method: &str, uri: &str, body: &Value) -> (StatusCode, Value) {
    let (status, bytes) = send(app, method, uri, "application/json", body.to_string()).await;
    (
        status,
        serde_json::from_slice(&bytes).unwrap_or(Value::Null),
    )
}

pub async fn upload(app: &Router, body: &str, content_type: &str) -> String {
    let (status, bytes) = send(app, "POST", "/datasets", content_type, body.to_string()).await;
    assert_eq!(
        status,
        StatusCode::CREATED,
        "{}",
        String::from_utf8_lossy(&bytes)
    );
    let v: Value = serde_json::from_slice(&bytes).unwrap();
    v["dataset_id"].as_str().unwrap().to_string()
}
/// (field, type, aggregate) of every field channel of a chart spec.
pub fn fields(spec: &Value) -> Vec<(&str, &str, &str)> {
    spec["encoding"]
        .as_object()
        .unwrap()
        .values()
        .filter_map(|enc| {
            let field = enc.get("field")?.as_str()?;
            let kind = enc["type"].as_str().unwrap();
            let agg = if enc.get("bin").is_some() {
                "bin"
            } else {
                enc.get("aggregate")
                    .and_then(Value::as_str)
                    .unwrap_or("none")
            };
            Some((field, kind, agg))
        })
        .collect()
}

/// Independent check of a chart spec against the query constraints.
pub fn satisfies(spec: &Value, constraints: &Value) -> bool {
    let set = |key: &str| -> BTreeSet<String> {
        constraints[key]
            .as_array()
            .map(|a| a.iter().map(|v| v.as_str().unwrap().to_string()).collect())
            .unwrap_or_default()
    };
    let fs = fields(spec);
    let marks = set("allowed_marks");
    let mark = spec["usermeta"]["mark"].as_str().unwrap();
    if !marks.is_empty() && !marks.contains(mark) {
        return false;
    }
    let aggs = set("allowed_aggregates");
    if !aggs.is_empty() {
        let used: Vec<&str> = fs.iter().map(|f| f.2).filter(|a| *a != "none").collect();
        if used.iter().any(|a| !aggs.contains(*a)) || (used.is_empty() && !aggs.contains("none")) {
            return false;
        }
    }
    let names: BTreeSet<&str> = fs.iter().map(|f| f.0).collect();
    if !set("required_attributes")
        .iter()
        .all(|a| names.contains(a.as_str()))
    {
        return false;
    }
    let mut wanted: BTreeMap<String, usize> = BTreeMap::new();
    for t in constraints["required_attribute_types"]
        .as_array()
        .into_iter()
        .flatten()
    {
        *wanted.entry(t.as_str().unwrap().to_string()).or_default() += 1;
    }
    wanted
        .iter()
        .all(|(t, n)| fs.iter().filter(|f| f.1 == t).count() == *n)
}

pub fn random_constraints(rng: &mut ChaCha8Rng, attributes: &[&str]) -> Value {
    let mut c = serde_json::Map::new();
    if rng.gen_bool(0.5) {
        let types = ["quantitative", "nominal", "ordinal", "temporal"];
        let n = rng.gen_range(1..=3);
        c.insert(
            "required_attribute_types".into(),
            json!((0..n)
                .map(|_| *types.choose(rng).unwrap())
                .collect::<Vec<_>>()),
        );
    }
    if rng.gen_bool(0.4) {
        let n = rng.gen_range(1..=2);
        c.insert(
            "required_attributes".into(),
            json!(attributes.choose_multiple(rng, n).collect::<Vec<_>>()),
        );
    }
    if rng.gen_bool(0.5) {
        let marks = ["bar", "scatter", "line", "area", "box", "histogram", "pie"];
        let n = rng.gen_range(1..=3);
        c.insert(
            "allowed_marks".into(),
            json!(marks.choose_multiple(rng, n).collect::<Vec<_>>()),
        );
    }
    if rng.gen_bool(0.4) {
        let aggs = ["none", "sum", "mean", "bin", "count"];
        let n = rng.gen_range(1..=3);
        c.insert(
            "allowed_aggregates".into(),
            json!(aggs.choose_multiple(rng, n).collect::<Vec<_>>()),
        );
    }
    Value::Object(c)
}

/// Send `n` random constraint queries for the cars dataset and check every
/// response against the brute-force candidate space. Returns the number of
/// answered and empty (422) queries.
pub async fn random_query_sweep(app: &Router, n: usize, seed: u64) -> (usize, usize) {
    let id = upload(app, &cars_json(), "application/json").await;
    let uri = format!("/datasets/{id}/recommendations");
    let dataset = parse_dataset("x", &cars_json(), None, None).unwrap();
    let names: Vec<&str> = dataset.attributes.iter().map(|a| a.name.as_str()).collect();
    let specs: Vec<Value> = generate_candidates(&dataset, &model().vocab, 3, None)
        .iter()
        .map(|v| chart_spec(v, model().vocab.get(&v.config_id).unwrap()))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut answered, mut empty) = (0, 0);
    for _ in 0..n {
        let constraints = random_constraints(&mut rng, &names);
        let top_k = rng.gen_range(1..=12);
        let query = json!({"top_k": top_k, "constraints": constraints});
        let (status, body) = send_json(app, "POST", &uri, &query).await;
        let admissible = specs.iter().filter(|s| satisfies(s, &constraints)).count();
        match status {
            StatusCode::OK => {
                answered += 1;
                let recs = body.as_array().unwrap();
                assert_eq!(recs.len(), top_k.min(admissible), "{query}");
                let mut previous = f64::INFINITY;
                for (i, r) in recs.iter().enumerate() {
                    assert_eq!(r["rank"], i + 1);
                    let score = r["score"].as_f64().unwrap();
                    assert!(score > 0.0 && score < 1.0);
                    assert!(
                        score <= previous,
                        "{query}: scores increase at rank {}",
                        i + 1
                    );
                    previous = score;
                    assert!(
                        satisfies(&r["chart_spec"], &constraints),
                        "{query}: {}",
                        r["chart_spec"]
                    );
                }
            }
            StatusCode::UNPROCESSABLE_ENTITY => {
                empty += 1;
                assert_eq!(body["error"], "NoCandidates");
                assert_eq!(
                    admissible, 0,
                    "{query}: {admissible} admissible candidates exist"
                );
            }
            other => panic!("{query}: unexpected status {other}: {body}"),
        }
    }
    (answered, empty)
}
