//! Train the full model and both ablations on a synthetic corpus with
//! planted rules, then compare them with the baselines.
//!
//! cargo run -p vizrec --example planted_rules -- [n_datasets] [seed]

use std::time::Instant;

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::evaluator::{baseline_configpop, baseline_random, evaluate_many, PoolConfig, Scorer};
use vizrec::net::Variant;
use vizrec::tabular::{split_corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};
use vizrec::vis_space::extract_vocabulary;

fn main() -> vizrec::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let n_datasets = args.next().and_then(|a| a.parse().ok()).unwrap_or(200);
    let seed = args.next().and_then(|a| a.parse().ok()).unwrap_or(1);

    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets,
        seed,
        ..Default::default()
    })?;
    println!("corpus: {:?}", corpus.stats());
    let (train_split, val_split, test_split) =
        split_corpus(&corpus, SplitFractions::default(), seed)?;
    let vocab = extract_vocabulary(&train_split)?;

    let mut models = Vec::new();
    for variant in [Variant::Full, Variant::DeepOnly, Variant::WideOnly] {
        let mut cfg = TrainConfig {
            seed,
            wide_learning_rate_scale: 0.01,
            early_stop_patience: 30,
            ..Default::default()
        };
        cfg.model.variant = variant;
        let t = Instant::now();
        let (model, report) = train(&train_split, &val_split, &cfg)?;
        println!(
            "{}: selected epoch {} of {}, validation nDCG@5 {:?}, {:.1}s",
            variant.as_str(),
            report.selected_epoch,
            report.epochs.len(),
            report.best_val_ndcg5,
            t.elapsed().as_secs_f64()
        );
        models.push(model);
    }
    let random = baseline_random(seed);
    let pop = baseline_configpop(&vocab);
    let mut scorers: Vec<&dyn Scorer> = models.iter().map(|m| m as &dyn Scorer).collect();
    scorers.push(&pop);
    scorers.push(&random);
    let result = evaluate_many(
        &scorers,
        &test_split,
        &vocab,
        &PoolConfig {
            seed,
            ..Default::default()
        },
    )?;
    print!("{}", result.to_table());
    Ok(())
}
