//! Ranking evaluation: per-dataset candidate pools, scorers (the learned
//! model and two baselines), and nDCG aggregation.

mod metric;
pub mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use metric::{
    ndcg_at_k, ndcg_at_k_strict, ndcg_of_labels, RankedEntry, RankedList, DEFAULT_KS,
};

use crate::error::{Error, Result};
use crate::model::WideDeepModel;
use crate::tabular::{Corpus, Dataset};
use crate::vis_space::{
    derive_seed, generate_candidates, ConfigVocabulary, Visualization, DEFAULT_MAX_ARITY,
};

/// Assigns relevance scores to a pool of candidates from one dataset.
pub trait Scorer {
    fn name(&self) -> String;
    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>>;
}

impl Scorer for WideDeepModel {
    fn name(&self) -> String {
        match self.hyper.variant {
            crate::net::Variant::Full => "wide_and_deep".into(),
            v => v.as_str().into(),
        }
    }

    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        let features = self.dataset_features(dataset)?;
        self.score_candidates(&features, pool)
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn name(&self) -> String {
        (**self).name()
    }

    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        (**self).score_pool(dataset, pool)
    }
}

/// I.i.d. uniform scores, reproducible per (seed, dataset).
#[derive(Debug, Clone, Copy)]
pub struct RandomBaseline {
    pub seed: u64,
}

impl Scorer for RandomBaseline {
    fn name(&self) -> String {
        "random".into()
    }

    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &dataset.id));
        Ok(pool.iter().map(|_| rng.gen::<f64>()).collect())
    }
}

/// Training-corpus frequency of the candidate's configuration.
#[derive(Debug, Clone)]
pub struct ConfigPopBaseline {
    counts: HashMap<String, u64>,
}

impl Scorer for ConfigPopBaseline {
    fn name(&self) -> String {
        "config_pop".into()
    }

    fn score_pool(&self, _dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        Ok(pool
            .iter()
            .map(|v| self.counts.get(&v.config_id).copied().unwrap_or(0) as f64)
            .collect())
    }
}

pub fn baseline_random(seed: u64) -> RandomBaseline {
    RandomBaseline { seed }
}

pub fn baseline_configpop(vocab: &ConfigVocabulary) -> ConfigPopBaseline {
    ConfigPopBaseline {
        counts: vocab
            .configs()
            .iter()
            .zip(vocab.counts())
            .map(|(c, &n)| (c.id.clone(), n))
            .collect(),
    }
}

/// Scorer backed by a closure, for oracles and experiments.
pub struct FnScorer<F> {
    pub name: String,
    pub f: F,
}

impl<F: Fn(&Dataset, &Visualization) -> f64> Scorer for FnScorer<F> {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        Ok(pool.iter().map(|v| (self.f)(dataset, v)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub negatives_per_dataset: usize,
    pub seed: u64,
    pub max_arity: usize,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig {
            negatives_per_dataset: 99,
            seed: 1,
            max_arity: DEFAULT_MAX_ARITY,
        }
    }
}

/// Held-out positives plus distinct sampled negatives for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub dataset_id: String,
    pub candidates: Vec<Visualization>,
}

impl Pool {
    pub fn positives(&self) -> usize {
        self.candidates
            .iter()
            .filter(|v| v.label == Some(1))
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedDataset {
    pub dataset_id: String,
    pub reason: String,
}

/// Candidates a scorer can be asked about: vocabulary configurations over
/// attributes with at least one observed value.
pub fn scorable_candidates(
    dataset: &Dataset,
    vocab: &ConfigVocabulary,
    max_arity: usize,
) -> Vec<Visualization> {
    let empty: HashSet<&str> = dataset
        .attributes
        .iter()
        .filter(|a| a.missing_count() == a.row_count())
        .map(|a| a.name.as_str())
        .collect();
    let mut out = generate_candidates(dataset, vocab, max_arity, None);
    if !empty.is_empty() {
        out.retain(|v| {
            v.combo
                .attribute_names
                .iter()
                .all(|n| !empty.contains(n.as_str()))
        });
    }
    out
}

/// Positives of one dataset re-keyed to vocabulary ids, labelled 1. Positives
/// whose design is not in the vocabulary are dropped.
pub fn vocab_positives(
    split: &Corpus,
    dataset_id: &str,
    vocab: &ConfigVocabulary,
) -> Vec<Visualization> {
    split
        .positives(dataset_id)
        .iter()
        .filter_map(|v| {
            let id = match split.configs.get(&v.config_id) {
                Some(c) => vocab.resolve(c)?,
                None => vocab.get(&v.config_id)?.id.as_str(),
            };
            Some(Visualization {
                combo: v.combo.clone(),
                config_id: id.to_string(),
                label: Some(1),
            })
        })
        .collect()
}

/// Build one pool per dataset of `split`, in dataset-id order. Positives
/// outside the candidate space (unknown configuration, excess arity) are
/// dropped; datasets left without positives or negatives are skipped.
pub fn build_pools(
    split: &Corpus,
    vocab: &ConfigVocabulary,
    cfg: &PoolConfig,
) -> Result<(Vec<Pool>, Vec<SkippedDataset>)> {
    let mut pools = Vec::new();
    let mut skipped = Vec::new();
    let mut datasets: Vec<&Dataset> = split.datasets.iter().collect();
    datasets.sort_by(|a, b| a.id.cmp(&b.id));
    for dataset in datasets {
        let space = scorable_candidates(dataset, vocab, cfg.max_arity);
        let space_keys: HashSet<String> = space.iter().map(Visualization::key).collect();
        let mut seen = HashSet::new();
        let positives: Vec<Visualization> = vocab_positives(split, &dataset.id, vocab)
            .into_iter()
            .filter(|v| space_keys.contains(&v.key()) && seen.insert(v.key()))
            .collect();
        if positives.is_empty() {
            log::warn!("dataset `{}`: no scorable positives; skipped", dataset.id);
            skipped.push(SkippedDataset {
                dataset_id: dataset.id.clone(),
                reason: Error::NoPositives(dataset.id.clone()).kind().into(),
            });
            continue;
        }
        let negatives: Vec<Visualization> = space
            .into_iter()
            .filter(|v| !seen.contains(&v.key()))
            .map(|v| v.with_label(0))
            .collect();
        if negatives.is_empty() {
            log::warn!("dataset `{}`: no negatives available; skipped", dataset.id);
            skipped.push(SkippedDataset {
                dataset_id: dataset.id.clone(),
                reason: Error::NoNegativesAvailable(dataset.id.clone())
                    .kind()
                    .into(),
            });
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &dataset.id));
        let take = cfg.negatives_per_dataset.min(negatives.len());
        let mut picked = sample(&mut rng, negatives.len(), take).into_vec();
        picked.sort_unstable();
        let mut candidates = positives;
        candidates.extend(picked.into_iter().map(|i| negatives[i].clone()));
        pools.push(Pool {
            dataset_id: dataset.id.clone(),
            candidates,
        });
    }
    Ok((pools, skipped))
}

/// Score and rank one pool.
pub fn rank_pool(scorer: &dyn Scorer, dataset: &Dataset, pool: &Pool) -> Result<RankedList> {
    let scores = scorer.score_pool(dataset, &pool.candidates)?;
    if scores.len() != pool.candidates.len() {
        return Err(Error::ShapeMismatch(format!(
            "scorer `{}` returned {} scores for {} candidates",
            scorer.name(),
            scores.len(),
            pool.candidates.len()
        )));
    }
    Ok(RankedList::new(
        &pool.dataset_id,
        pool.candidates
            .iter()
            .zip(scores)
            .map(|(v, score)| RankedEntry {
                key: v.key(),
                score,
                label: v.label.unwrap_or(0),
            })
            .collect(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    /// Mean nDCG at each cutoff, aligned with [`EvalResult::ks`].
    pub ndcg: Vec<f64>,
    pub per_dataset: BTreeMap<String, Vec<f64>>,
    /// Adjacent equal-score pairs summed over all ranked lists.
    pub ties: usize,
}

impl MethodResult {
    pub fn at(&self, ks: &[usize], k: usize) -> Option<f64> {
        ks.iter().position(|&x| x == k).map(|i| self.ndcg[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub ks: Vec<usize>,
    pub methods: Vec<MethodResult>,
    pub pool_sizes: BTreeMap<String, usize>,
    pub skipped: Vec<SkippedDataset>,
}

impl EvalResult {
    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn ndcg(&self, method: &str, k: usize) -> Option<f64> {
        self.method(method).and_then(|m| m.at(&self.ks, k))
    }

    /// One row per method, one `nDCG@K` column per cutoff, followed by the
    /// per-dataset breakdown.
    pub fn to_report(&self) -> Value {
        let columns: Vec<String> = self.ks.iter().map(|k| format!("nDCG@{k}")).collect();
        let rows: Vec<Value> = self
            .methods
            .iter()
            .map(|m| {
                let mut row = serde_json::Map::new();
                row.insert("method".into(), json!(m.method));
                for (c, v) in columns.iter().zip(&m.ndcg) {
                    row.insert(c.clone(), json!(v));
                }
                row.insert("ties".into(), json!(m.ties));
                Value::Object(row)
            })
            .collect();
        let per_dataset: serde_json::Map<String, Value> = self
            .methods
            .iter()
            .map(|m| (m.method.clone(), json!(m.per_dataset)))
            .collect();
        json!({
            "columns": columns,
            "rows": rows,
            "datasets": self.pool_sizes.len(),
            "pool_sizes": self.pool_sizes,
            "per_dataset": per_dataset,
            "skipped": self.skipped,
        })
    }

    pub fn to_report_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_report()).expect("report serializes")
    }

    /// Plain-text table in the same row/column layout.
    pub fn to_table(&self) -> String {
        let width = self
            .methods
            .iter()
            .map(|m| m.method.len())
            .max()
            .unwrap_or(6)
            .max(6);
        let mut out = format!("{:width$}", "method");
        for k in &self.ks {
            out.push_str(&format!("  {:>8}", format!("nDCG@{k}")));
        }
        out.push('\n');
        for m in &self.methods {
            out.push_str(&format!("{:width$}", m.method));
            for v in &m.ndcg {
                out.push_str(&format!("  {v:>8.4}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Evaluate several scorers on shared pools.
pub fn evaluate_pools(
    scorers: &[&dyn Scorer],
    split: &Corpus,
    pools: &[Pool],
    ks: &[usize],
) -> Result<EvalResult> {
    let mut methods = Vec::with_capacity(scorers.len());
    for scorer in scorers {
        let mut lists = Vec::with_capacity(pools.len());
        for pool in pools {
            let dataset = split.dataset(&pool.dataset_id).ok_or_else(|| {
                Error::DanglingReference(format!("pool for unknown dataset `{}`", pool.dataset_id))
            })?;
            lists.push(rank_pool(*scorer, dataset, pool)?);
        }
        let ndcg = ks
            .iter()
            .map(|&k| ndcg_at_k(&lists, k))
            .collect::<Result<Vec<_>>>()?;
        let per_dataset = lists
            .iter()
            .map(|l| {
                let values = ks.iter().map(|&k| l.ndcg(k).unwrap_or(0.0)).collect();
                (l.dataset_id.clone(), values)
            })
            .collect();
        methods.push(MethodResult {
            method: scorer.name(),
            ndcg,
            per_dataset,
            ties: lists.iter().map(RankedList::tie_count).sum(),
        });
    }
    Ok(EvalResult {
        ks: ks.to_vec(),
        methods,
        pool_sizes: pools
            .iter()
            .map(|p| (p.dataset_id.clone(), p.candidates.len()))
            .collect(),
        skipped: Vec::new(),
    })
}

/// Build pools from `test` and evaluate every scorer on them.
pub fn evaluate_many(
    scorers: &[&dyn Scorer],
    test: &Corpus,
    vocab: &ConfigVocabulary,
    cfg: &PoolConfig,
) -> Result<EvalResult> {
    let (pools, skipped) = build_pools(test, vocab, cfg)?;
    if pools.is_empty() {
        return Err(Error::NoPositives(
            "no test dataset has a scorable positive".into(),
        ));
    }
    let mut result = evaluate_pools(scorers, test, &pools, &DEFAULT_KS)?;
    result.skipped = skipped;
    Ok(result)
}

pub fn evaluate(
    scorer: &dyn Scorer,
    test: &Corpus,
    vocab: &ConfigVocabulary,
    cfg: &PoolConfig,
) -> Result<EvalResult> {
    evaluate_many(&[scorer], test, vocab, cfg)
}
