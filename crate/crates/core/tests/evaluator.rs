use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;

use vizrec::evaluator::synthetic::{
    generate_synthetic_corpus, PlantedRule, RuleOracle, SyntheticSpec,
};
use vizrec::evaluator::{
    baseline_configpop, baseline_random, build_pools, evaluate, evaluate_many, ndcg_at_k,
    ndcg_at_k_strict, ndcg_of_labels, FnScorer, PoolConfig, RankedList, Scorer, DEFAULT_KS,
};
use vizrec::tabular::{Corpus, Dataset};
use vizrec::vis_space::{extract_vocabulary, Visualization};
use vizrec::Error;

fn corpus(n: usize, seed: u64) -> Corpus {
    generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: n,
        seed,
        min_rows: 20,
        max_rows: 120,
        ..Default::default()
    })
    .unwrap()
}

fn labels_strategy() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..=1, 1..30).prop_filter("needs a positive", |l| l.contains(&1))
}

fn direct(labels: &[u8], k: usize) -> f64 {
    let dcg: f64 = labels
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &y)| f64::from(y) / ((i + 2) as f64).log2())
        .sum();
    let p = labels.iter().filter(|&&y| y == 1).count();
    let idcg: f64 = (0..p.min(k)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    dcg / idcg
}

#[test]
fn worked_examples() {
    assert_eq!(ndcg_of_labels(&[0, 0, 1, 0, 0], 5), Some(0.5));
    assert_eq!(ndcg_of_labels(&[1, 0, 0], 1), Some(1.0));
    assert_eq!(ndcg_of_labels(&[0, 1], 1), Some(0.0));
    assert_eq!(ndcg_of_labels(&[0, 0], 5), None);
    let lists = [
        RankedList::from_labels("a", &[1]),
        RankedList::from_labels("b", &[0, 0]),
    ];
    assert_eq!(ndcg_at_k(&lists, 5).unwrap(), 1.0);
    assert!(matches!(
        ndcg_at_k_strict(&lists, 5),
        Err(Error::NoPositives(_))
    ));
}

#[test]
fn rule_oracle_ranks_perfectly_and_baselines_trail() {
    let test = corpus(15, 4);
    let vocab = extract_vocabulary(&test).unwrap();
    let oracle = RuleOracle {
        rules: PlantedRule::ALL.to_vec(),
    };
    let pop = baseline_configpop(&vocab);
    let random = baseline_random(3);
    let result = evaluate_many(
        &[&oracle, &pop, &random],
        &test,
        &vocab,
        &PoolConfig::default(),
    )
    .unwrap();
    for k in DEFAULT_KS {
        assert_eq!(result.ndcg(&oracle.name(), k), Some(1.0), "K={k}");
        assert!(result.ndcg("random", k).unwrap() < 1.0);
    }
    assert!(result.to_table().lines().count() == 4);
    let report: serde_json::Value = serde_json::from_str(&result.to_report_string()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn pools_hold_positives_and_bounded_negatives() {
    let test = corpus(12, 8);
    let vocab = extract_vocabulary(&test).unwrap();
    let cfg = PoolConfig {
        negatives_per_dataset: 15,
        ..Default::default()
    };
    let (pools, skipped) = build_pools(&test, &vocab, &cfg).unwrap();
    assert_eq!(pools.len() + skipped.len(), test.datasets.len());
    for pool in &pools {
        assert!(pool.positives() >= 1);
        let negatives = pool.candidates.len() - pool.positives();
        assert!((1..=15).contains(&negatives));
        let keys: HashSet<String> = pool.candidates.iter().map(Visualization::key).collect();
        assert_eq!(keys.len(), pool.candidates.len());
        assert!(pool
            .candidates
            .iter()
            .all(|c| c.combo.dataset_id == pool.dataset_id));
    }
    assert_eq!(build_pools(&test, &vocab, &cfg).unwrap().0, pools);
}

#[test]
fn per_dataset_values_ignore_other_datasets() {
    let full = corpus(12, 6);
    let vocab = extract_vocabulary(&full).unwrap();
    let scorer = baseline_random(9);
    let all = evaluate(&scorer, &full, &vocab, &PoolConfig::default()).unwrap();
    let first = &full.datasets[0].id;
    let alone = full.subset(&BTreeSet::from([first.as_str()]));
    let single = evaluate(&scorer, &alone, &vocab, &PoolConfig::default()).unwrap();
    assert_eq!(
        all.methods[0].per_dataset[first],
        single.methods[0].per_dataset[first]
    );
}

#[test]
fn scorer_ties_break_by_key() {
    let test = corpus(6, 2);
    let vocab = extract_vocabulary(&test).unwrap();
    let flat = FnScorer {
        name: "flat".into(),
        f: |_: &Dataset, _: &Visualization| 0.5,
    };
    let a = evaluate(&flat, &test, &vocab, &PoolConfig::default()).unwrap();
    let b = evaluate(&flat, &test, &vocab, &PoolConfig::default()).unwrap();
    assert_eq!(a, b);
    assert!(a.methods[0].ties > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matches_direct_summation(labels in labels_strategy(), k in 1usize..25) {
        let got = ndcg_of_labels(&labels, k).unwrap();
        prop_assert!((got - direct(&labels, k)).abs() <= 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&got));
    }

    #[test]
    fn perfect_ranking_scores_one(labels in labels_strategy(), k in 1usize..25) {
        let mut sorted = labels.clone();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(ndcg_of_labels(&sorted, k), Some(1.0));
    }

    #[test]
    fn promoting_a_positive_never_hurts(labels in labels_strategy(), pick in any::<prop::sample::Index>(), k in 1usize..25) {
        let positives: Vec<usize> = labels.iter().enumerate().filter(|(_, &y)| y == 1).map(|(i, _)| i).collect();
        let from = positives[pick.index(positives.len())];
        prop_assume!(from > 0 && labels[from - 1] == 0);
        let mut better = labels.clone();
        better.swap(from - 1, from);
        prop_assume!(k >= from);
        prop_assert!(ndcg_of_labels(&better, k).unwrap() >= ndcg_of_labels(&labels, k).unwrap());
    }

    #[test]
    fn ranked_list_orders_by_score_then_key(scores in prop::collection::vec(0u8..4, 1..12)) {
        let labels: Vec<u8> = scores.iter().map(|s| u8::from(*s == 3)).collect();
        let entries = scores
            .iter()
            .zip(&labels)
            .enumerate()
            .map(|(i, (&s, &y))| vizrec::evaluator::RankedEntry { key: format!("k{:02}", 11 - i), score: f64::from(s), label: y })
            .collect();
        let list = RankedList::new("d", entries);
        for w in list.entries().windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].key < w[1].key));
        }
    }
}
