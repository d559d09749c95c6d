//! Evaluate a briefly trained model against the popularity and random
//! baselines on a held-out split, then write the JSON report.
//!
//! cargo run -p vizrec --example evaluate

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::evaluator::{baseline_configpop, baseline_random, evaluate_many, PoolConfig};
use vizrec::tabular::{split_corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};
use vizrec::vis_space::extract_vocabulary;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: 60,
        seed: 11,
        ..Default::default()
    })?;
    let (train_split, val_split, test_split) =
        split_corpus(&corpus, SplitFractions::default(), 11)?;
    let (model, _) = train(
        &train_split,
        &val_split,
        &TrainConfig {
            epochs: 6,
            seed: 11,
            ..Default::default()
        },
    )?;
    let vocab = extract_vocabulary(&train_split)?;
    let pop = baseline_configpop(&vocab);
    let random = baseline_random(11);
    let result = evaluate_many(
        &[&model, &pop, &random],
        &test_split,
        &vocab,
        &PoolConfig::default(),
    )?;
    print!("{}", result.to_table());

    let path = std::env::temp_dir().join("vizrec-eval.json");
    std::fs::write(&path, result.to_report_string())?;
    println!("report written to {}", path.display());
    Ok(())
}
