//! Generate a synthetic corpus with planted design rules, save it as JSON
//! lines and load it back.
//!
//! cargo run -p vizrec --example synthetic_corpus -- [n_datasets] [out.jsonl]

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::tabular::load_corpus;

fn main() -> vizrec::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_datasets = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let out = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("vizrec-synthetic.jsonl"));

    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets,
        seed: 7,
        ..Default::default()
    })?;
    corpus.save(&out)?;
    let loaded = load_corpus(&out)?;
    assert_eq!(loaded.datasets, corpus.datasets);

    println!("wrote {}", out.display());
    println!("{:#?}", loaded.stats());
    let first = &loaded.datasets[0];
    println!(
        "first dataset `{}` has {} rows:",
        first.id,
        first.row_count()
    );
    for attr in &first.attributes {
        println!("  {:<12} {:?}", attr.name, attr.kind);
    }
    Ok(())
}
