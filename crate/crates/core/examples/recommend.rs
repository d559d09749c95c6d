//! Recommend charts for a new table, first unconstrained and then limited
//! to bar charts that must use a given column.
//!
//! cargo run -p vizrec --example recommend

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::recommend::{constrained_bound, recommend, QueryConstraints, RecommendQuery};
use vizrec::tabular::{parse_dataset, split_corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};
use vizrec::vis_space::Mark;

const CSV: &str = "\
region,revenue,units,month
north,120.5,30,2024-01-01
south,98.25,22,2024-02-01
north,143,35,2024-03-01
east,87.5,19,2024-04-01
south,110,27,2024-05-01
east,95,24,2024-06-01
";

fn show(title: &str, recs: &[vizrec::recommend::Recommendation]) {
    println!("{title}");
    for r in recs {
        let v = &r.visualization;
        println!(
            "  #{} {:.4} {} [{}]",
            r.rank,
            r.score,
            v.config_id,
            v.combo.attribute_names.join(", ")
        );
    }
}

fn main() -> vizrec::Result<()> {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: 40,
        seed: 5,
        ..Default::default()
    })?;
    let (train_split, val_split, _) = split_corpus(&corpus, SplitFractions::default(), 5)?;
    let (model, _) = train(
        &train_split,
        &val_split,
        &TrainConfig {
            epochs: 4,
            seed: 5,
            ..Default::default()
        },
    )?;

    let dataset = parse_dataset("sales", CSV, None, None)?;
    let open = RecommendQuery {
        top_k: 5,
        constraints: QueryConstraints::default(),
    };
    show(
        "top 5, unconstrained:",
        &recommend(&model, &dataset, &open)?,
    );

    let constraints = QueryConstraints {
        allowed_marks: [Mark::Bar].into(),
        required_attributes: ["revenue".to_string()].into(),
        ..Default::default()
    };
    println!(
        "constrained space bound: {}",
        constrained_bound(&model, &dataset, &constraints)?
    );
    let narrow = RecommendQuery {
        top_k: 3,
        constraints,
    };
    match recommend(&model, &dataset, &narrow) {
        Ok(recs) => {
            show("bars using revenue:", &recs);
            println!(
                "{}",
                serde_json::to_string_pretty(&recs[0].chart_spec).expect("serializable")
            );
        }
        Err(e) => println!("no bar chart fits: {e}"),
    }
    Ok(())
}
