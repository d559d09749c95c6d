//! Enumerate the candidate visualizations of a dataset for a small
//! configuration vocabulary and print one as a chart spec.
//!
//! cargo run -p vizrec --example enumerate_candidates

use vizrec::evaluator::synthetic::{
    colored_scatter_config, horizontal_bar_config, line_config, scatter_config,
};
use vizrec::tabular::parse_dataset;
use vizrec::vis_space::{
    candidate_count_bound, chart_spec, enumerate_combinations, generate_candidates,
    ConfigVocabulary,
};

const CSV: &str = "\
day,sales,cost,store
2024-01-01,10.5,4,north
2024-01-02,12,5.5,south
2024-01-03,9,3,north
2024-01-04,15,7,east
";

fn main() -> vizrec::Result<()> {
    let dataset = parse_dataset("shop", CSV, None, None)?;
    let vocab = ConfigVocabulary::new(vec![
        (scatter_config(), 10),
        (colored_scatter_config(), 6),
        (horizontal_bar_config(), 4),
        (line_config(), 2),
    ])?;

    for arity in 1..=3 {
        println!(
            "combinations up to arity {arity}: {}",
            enumerate_combinations(&dataset, arity).len()
        );
    }
    let candidates = generate_candidates(&dataset, &vocab, 3, None);
    println!(
        "candidates: {} (bound {})",
        candidates.len(),
        candidate_count_bound(&dataset, &vocab, 3)
    );
    for c in candidates.iter().take(8) {
        println!("  {} [{}]", c.config_id, c.combo.attribute_names.join(", "));
    }
    let first = &candidates[0];
    let config = vocab
        .get(&first.config_id)
        .expect("candidate comes from the vocabulary");
    println!(
        "{}",
        serde_json::to_string_pretty(&chart_spec(first, config)).expect("serializable")
    );
    Ok(())
}
