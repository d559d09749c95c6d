//! nDCG@K on hand-built ranked lists, including a dataset without positives
//! that the lenient mean skips.
//!
//! cargo run -p vizrec --example ndcg

use vizrec::evaluator::{
    ndcg_at_k, ndcg_at_k_strict, ndcg_of_labels, RankedEntry, RankedList, DEFAULT_KS,
};

fn main() -> vizrec::Result<()> {
    println!(
        "labels [0,0,1,0,0] at K=5: {:?}",
        ndcg_of_labels(&[0, 0, 1, 0, 0], 5)
    );

    // Ties in score are broken by key, so "a-bar" ranks above "b-line".
    let scored = RankedList::new(
        "ds1",
        vec![
            RankedEntry {
                key: "b-line".into(),
                score: 0.9,
                label: 1,
            },
            RankedEntry {
                key: "a-bar".into(),
                score: 0.9,
                label: 0,
            },
            RankedEntry {
                key: "c-pie".into(),
                score: 0.2,
                label: 1,
            },
        ],
    );
    let lists = vec![
        scored,
        RankedList::from_labels("ds2", &[1, 0, 0]),
        RankedList::from_labels("ds3", &[0, 0]),
    ];
    for k in DEFAULT_KS {
        println!("nDCG@{k:<2} {:.4}", ndcg_at_k(&lists, k)?);
    }
    match ndcg_at_k_strict(&lists, 5) {
        Ok(v) => println!("strict: {v}"),
        Err(e) => println!("strict mode refuses: {e}"),
    }
    Ok(())
}
