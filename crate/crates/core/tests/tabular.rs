use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::tabular::{
    load_corpus, parse_dataset, split_corpus, Attribute, AttributeType, Cell, Corpus, Dataset,
    SplitFractions,
};
use vizrec::Error;

/// Raw column of the given type; `None` cells become missing markers.
fn raw_column(kind: AttributeType, cells: &[Option<u8>]) -> Vec<Option<String>> {
    cells
        .iter()
        .map(|c| {
            c.map(|v| match kind {
                AttributeType::Quantitative => format!("{}.25", v as i32 - 100),
                AttributeType::Temporal => format!("2021-{:02}-{:02}", 1 + v % 12, 1 + v % 28),
                _ => ["red", "green", "blue"][v as usize % 3].to_string(),
            })
        })
        .collect()
}

fn kind_strategy() -> impl Strategy<Value = AttributeType> {
    prop_oneof![
        Just(AttributeType::Quantitative),
        Just(AttributeType::Nominal),
        Just(AttributeType::Temporal),
    ]
}

/// Columns of inferable types, each with at least two observed values.
fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    (1usize..6, 4usize..12).prop_flat_map(|(cols, rows)| {
        prop::collection::vec(
            (
                kind_strategy(),
                prop::collection::vec(prop::option::weighted(0.85, any::<u8>()), rows),
            ),
            cols,
        )
        .prop_filter_map("each column needs two observed values", |columns| {
            let raw: Vec<(String, Vec<Option<String>>)> = columns
                .iter()
                .enumerate()
                .map(|(i, (kind, cells))| (format!("col {i}"), raw_column(*kind, cells)))
                .collect();
            if raw.iter().any(|(_, c)| c.iter().flatten().count() < 2) {
                return None;
            }
            let kinds: HashMap<String, AttributeType> = columns
                .iter()
                .enumerate()
                .map(|(i, (k, _))| (format!("col {i}"), *k))
                .collect();
            Dataset::from_raw_columns("d", raw, Some(&kinds)).ok()
        })
    })
}

fn corpus_of(n: usize, seed: u64) -> Corpus {
    generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: n,
        seed,
        min_rows: 10,
        max_rows: 20,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn inference_follows_the_documented_rules() {
    let d = parse_dataset(
        "d",
        "a,b,c,d\n1.5,x,2020-01-01,\n2,y,2020-02-01,7\n3,x,2020-03-01,NA\n",
        None,
        None,
    )
    .unwrap();
    let kinds: Vec<AttributeType> = d.attributes.iter().map(|a| a.kind).collect();
    use AttributeType::*;
    assert_eq!(kinds, vec![Quantitative, Nominal, Temporal, Quantitative]);
    assert_eq!(d.attributes[3].missing_count(), 2);
    assert!(d.attributes[3].values[0].is_missing());

    let overrides = HashMap::from([("b".to_string(), Ordinal)]);
    let d = parse_dataset("d", "a,b\n1,low\n2,high\n", None, Some(&overrides)).unwrap();
    assert_eq!(d.attributes[1].kind, Ordinal);
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(matches!(
        parse_dataset("d", "a,a\n1,2\n", None, None),
        Err(Error::DuplicateAttribute(_))
    ));
    assert!(matches!(
        parse_dataset("d", "a,b\n", None, None),
        Err(Error::EmptyDataset(_))
    ));
    assert!(matches!(
        parse_dataset("d", "a,b\n1,2\n3\n", None, None),
        Err(Error::Parse(_))
    ));
    let short = Attribute {
        name: "s".into(),
        kind: AttributeType::Quantitative,
        values: vec![Cell::Number(1.0)],
    };
    let long = Attribute {
        name: "l".into(),
        kind: AttributeType::Quantitative,
        values: vec![Cell::Number(1.0), Cell::Missing],
    };
    assert!(Dataset::new("d", vec![short, long]).is_err());
    assert!(matches!(
        Dataset::new("d", vec![]),
        Err(Error::EmptyDataset(_))
    ));
}

#[test]
fn tsv_and_json_inputs() {
    let tsv = parse_dataset("d", "x\ty\n1\ta\n2\tb\n", Some("tsv"), None).unwrap();
    assert_eq!(tsv.attributes.len(), 2);
    let json = r#"{"id": "j", "columns": [{"name": "x", "values": [1, 2, null]}, {"name": "s", "type": "ordinal", "values": ["lo", "hi", "lo"]}]}"#;
    let d = parse_dataset("fallback", json, None, None).unwrap();
    assert_eq!(d.id, "j");
    assert_eq!(d.attributes[0].kind, AttributeType::Quantitative);
    assert_eq!(d.attributes[0].missing_count(), 1);
    assert_eq!(d.attributes[1].kind, AttributeType::Ordinal);
}

#[test]
fn corpus_round_trips_through_jsonl() {
    let corpus = corpus_of(6, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    corpus.save(&path).unwrap();
    let loaded = load_corpus(&path).unwrap();
    assert_eq!(loaded.datasets, corpus.datasets);
    assert_eq!(loaded.visualization_count(), corpus.visualization_count());
    assert_eq!(loaded.stats(), corpus.stats());
}

#[test]
fn dangling_references_fail_validation() {
    let corpus = corpus_of(3, 1);
    let mut vis = corpus.visualizations.clone();
    let (id, list) = vis.iter_mut().next().unwrap();
    list[0].combo.attribute_names[0] = "mpg".into();
    let id = id.clone();
    let err = Corpus::new(corpus.datasets.clone(), vis, corpus.configs.clone()).unwrap_err();
    assert!(
        matches!(err, Error::DanglingReference(ref m) if m.contains("mpg")),
        "{id}: {err}"
    );

    let err = Corpus::new(
        corpus.datasets.clone(),
        corpus.visualizations.clone(),
        BTreeMap::new(),
    )
    .unwrap_err();
    assert!(matches!(err, Error::DanglingReference(_)), "{err}");
}

#[test]
fn split_sizes_and_errors() {
    let corpus = corpus_of(10, 2);
    let (a, b, c) = split_corpus(&corpus, SplitFractions::default(), 7).unwrap();
    assert_eq!(
        (a.datasets.len(), b.datasets.len(), c.datasets.len()),
        (8, 1, 1)
    );
    assert!(matches!(
        split_corpus(&corpus_of(2, 2), SplitFractions::default(), 7),
        Err(Error::TooFewDatasets { .. })
    ));
    assert!(matches!(
        split_corpus(&corpus, SplitFractions::new(0.5, 0.5, 0.5), 7),
        Err(Error::InvalidFractions(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_is_a_disjoint_cover(n in 10usize..40, seed in any::<u64>()) {
        let corpus = corpus_of(n, 5);
        let parts = split_corpus(&corpus, SplitFractions::default(), seed).unwrap();
        let ids = |c: &Corpus| c.datasets.iter().map(|d| d.id.clone()).collect::<BTreeSet<_>>();
        let (a, b, c) = (ids(&parts.0), ids(&parts.1), ids(&parts.2));
        prop_assert!(a.is_disjoint(&b) && a.is_disjoint(&c) && b.is_disjoint(&c));
        let union: BTreeSet<String> = a.union(&b).chain(c.iter()).cloned().collect();
        prop_assert_eq!(union, ids(&corpus));
        for part in [&parts.0, &parts.1, &parts.2] {
            for id in part.visualizations.keys() {
                prop_assert!(part.dataset(id).is_some());
            }
        }
        let again = split_corpus(&corpus, SplitFractions::default(), seed).unwrap();
        prop_assert_eq!(ids(&again.0), a);
    }

    #[test]
    fn csv_round_trip_preserves_types_and_values(d in dataset_strategy()) {
        let back = parse_dataset("d", &d.to_csv(), Some("csv"), None).unwrap();
        prop_assert_eq!(&back, &d);
    }

    #[test]
    fn record_round_trip_preserves_overrides(d in dataset_strategy(), ordinal in any::<bool>()) {
        let mut d = d;
        if ordinal {
            if let Some(a) = d.attributes.iter_mut().find(|a| a.kind == AttributeType::Nominal) {
                a.kind = AttributeType::Ordinal;
            }
        }
        let back = Dataset::from_record(d.to_record()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn attributes_share_row_count(d in dataset_strategy()) {
        let rows = d.row_count();
        prop_assert!(d.attributes.iter().all(|a| a.row_count() == rows && a.values.len() == rows));
    }
}
