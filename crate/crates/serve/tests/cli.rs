use clap::Parser;
use serde_json::Value;
use tempfile::TempDir;

use vizrec_serve::cli::{
    query_from_args, report_path, run_corpus, run_evaluate, run_metafeatures, run_recommend,
    run_synth, run_train, Cli, Command, CorpusAction,
};

fn parse(args: &[&str]) -> Command {
    Cli::try_parse_from(std::iter::once("vizrec").chain(args.iter().copied()))
        .unwrap_or_else(|e| panic!("{args:?}: {e}"))
        .command
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn synth_train_evaluate_recommend() {
    let dir = TempDir::new().unwrap();
    let corpus = path(&dir, "corpus.jsonl");
    let model = path(&dir, "model.bin");

    let Command::Synth(args) =
        parse(&["synth", "--datasets", "30", "--seed", "4", "--out", &corpus])
    else {
        panic!()
    };
    assert!(run_synth(&args).unwrap().contains("30 datasets"));

    let Command::Corpus { action } = parse(&["corpus", "validate", &corpus]) else {
        panic!()
    };
    assert!(run_corpus(&action).unwrap().starts_with("ok: 30 datasets"));
    let stats: Value = serde_json::from_str(
        &run_corpus(&CorpusAction::Stats {
            path: corpus.clone().into(),
        })
        .unwrap(),
    )
    .unwrap();
    assert_eq!(stats["datasets"], 30);

    let Command::Train(args) = parse(&[
        "train", "--corpus", &corpus, "--out", &model, "--epochs", "2", "--seed", "4",
    ]) else {
        panic!()
    };
    run_train(&args).unwrap();
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(report_path(args.out.as_path())).unwrap())
            .unwrap();
    assert_eq!(report["epochs"].as_array().unwrap().len(), 2);

    let eval_report = path(&dir, "eval.json");
    let Command::Evaluate(args) = parse(&[
        "evaluate",
        "--model",
        &model,
        "--corpus",
        &corpus,
        "--split-seed",
        "4",
        "--report",
        &eval_report,
    ]) else {
        panic!()
    };
    let table = run_evaluate(&args).unwrap();
    for method in ["wide_and_deep", "config_pop", "random"] {
        assert!(table.contains(method), "{table}");
    }
    assert_eq!(run_evaluate(&args).unwrap(), table);
    assert!(std::fs::metadata(&eval_report).unwrap().len() > 0);

    let csv = path(&dir, "data.csv");
    let mut text = String::from("price,change,region,day\n");
    for i in 0..30 {
        text += &format!(
            "{}.25,{}.5,{},2024-01-{:02}\n",
            10 + i,
            i as i64 - 15,
            ["n", "s", "e"][i % 3],
            i + 1
        );
    }
    std::fs::write(&csv, text).unwrap();
    let specs = path(&dir, "specs");
    let Command::Recommend(args) = parse(&[
        "recommend",
        "--model",
        &model,
        "--dataset",
        &csv,
        "--top-k",
        "3",
        "--marks",
        "scatter,bar",
        "--emit-specs",
        &specs,
    ]) else {
        panic!()
    };
    let recs: Value = serde_json::from_str(&run_recommend(&args).unwrap()).unwrap();
    let recs = recs.as_array().unwrap();
    assert_eq!(recs.len(), 3);
    for r in recs {
        let mark = r["chart_spec"]["usermeta"]["mark"].as_str().unwrap();
        assert!(mark == "scatter" || mark == "bar", "{mark}");
    }
    assert!(dir.path().join("specs/rank01.vl.json").exists());
    assert!(dir.path().join("specs/rank03.vl.json").exists());

    let Command::Metafeatures(args) =
        parse(&["metafeatures", &csv, "--attribute", "price", "--named"])
    else {
        panic!()
    };
    let mf: Value = serde_json::from_str(&run_metafeatures(&args).unwrap()).unwrap();
    assert_eq!(
        mf["features"].as_array().unwrap().len(),
        mf["k"].as_u64().unwrap() as usize
    );
}

#[test]
fn recommend_flags_map_to_constraints() {
    let Command::Recommend(args) = parse(&[
        "recommend",
        "--model",
        "m.bin",
        "--dataset",
        "d.csv",
        "--types",
        "Nominal,quantitative",
        "--attributes",
        "a",
        "--aggregates",
        "none,mean",
    ]) else {
        panic!()
    };
    let q = query_from_args(&args).unwrap();
    assert_eq!(q.top_k, 10);
    assert_eq!(q.constraints.required_attribute_types.len(), 2);
    assert_eq!(q.constraints.allowed_aggregates.len(), 2);
    assert!(q.constraints.required_attributes.contains("a"));

    let Command::Recommend(args) = parse(&[
        "recommend",
        "--model",
        "m",
        "--dataset",
        "d",
        "--marks",
        "donut",
    ]) else {
        panic!()
    };
    assert!(query_from_args(&args).is_err());
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = TempDir::new().unwrap();
    let missing = path(&dir, "missing.jsonl");
    assert!(run_corpus(&CorpusAction::Validate {
        path: missing.into()
    })
    .is_err());
    let csv = path(&dir, "d.csv");
    std::fs::write(&csv, "a\n1\n2\n").unwrap();
    let Command::Metafeatures(args) = parse(&["metafeatures", &csv, "--attribute", "zzz"]) else {
        panic!()
    };
    assert!(run_metafeatures(&args).is_err());
    assert!(Cli::try_parse_from(["vizrec", "train"]).is_err());
}
