//! Train a model on a synthetic corpus, write it to disk and reload it.
//!
//! cargo run -p vizrec --example train_and_save -- [model.bin]

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::model::WideDeepModel;
use vizrec::tabular::{split_corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};

fn main() -> vizrec::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let path = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("vizrec-model.bin"));

    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: 40,
        seed: 3,
        ..Default::default()
    })?;
    let (train_split, val_split, _) = split_corpus(&corpus, SplitFractions::default(), 3)?;
    let cfg = TrainConfig {
        epochs: 5,
        seed: 3,
        ..Default::default()
    };
    let (model, report) = train(&train_split, &val_split, &cfg)?;
    for e in &report.epochs {
        println!(
            "epoch {:>2}  loss {:.4}  val nDCG@5 {:?}",
            e.epoch, e.train_loss, e.val_ndcg5
        );
    }
    println!(
        "kept epoch {}, {} examples",
        report.selected_epoch, report.examples
    );

    model.save(&path)?;
    let reloaded = WideDeepModel::load(&path)?;
    assert_eq!(reloaded, model);
    println!("saved and reloaded {}", path.display());
    Ok(())
}
