//! Example construction and mini-batch SGD with validation-based model
//! selection.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{
    encode_visualization, CrossProductSpec, DatasetFeatures, EncodingLayout, DEFAULT_CROSS_CAP,
    DEFAULT_CROSS_MIN_COUNT,
};
use crate::error::{Error, Result};
use crate::evaluator::{
    build_pools, ndcg_at_k, scorable_candidates, vocab_positives, PoolConfig, RankedEntry,
    RankedList, SkippedDataset,
};
use crate::metafeatures::{compute_metafeatures, MetaFeatureSchema, MetaFeatureVector, Normalizer};
use crate::model::{ModelHyperparams, WideDeepModel};
use crate::net::{binary_cross_entropy, Example};
use crate::tabular::{Corpus, Dataset};
use crate::vis_space::{
    derive_seed, extract_vocabulary, sample_from_space, ConfigVocabulary, Visualization,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub negatives_per_dataset: usize,
    pub learning_rate: f64,
    /// Multiplier on the learning rate of the wide weights and bias.
    pub wide_learning_rate_scale: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub early_stop_patience: usize,
    pub resample_negatives_per_epoch: bool,
    /// Negatives per validation pool used for model selection.
    pub validation_negatives: usize,
    pub cross_min_count: usize,
    pub cross_cap: usize,
    pub model: ModelHyperparams,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            negatives_per_dataset: 20,
            learning_rate: 0.05,
            wide_learning_rate_scale: 1.0,
            epochs: 30,
            batch_size: 64,
            seed: 1,
            early_stop_patience: 3,
            resample_negatives_per_epoch: false,
            validation_negatives: 99,
            cross_min_count: DEFAULT_CROSS_MIN_COUNT,
            cross_cap: DEFAULT_CROSS_CAP,
            model: ModelHyperparams::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("negatives_per_dataset", self.negatives_per_dataset),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("early_stop_patience", self.early_stop_patience),
            ("validation_negatives", self.validation_negatives),
            ("max_arity", self.model.max_arity),
            ("bins", self.model.bins),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "learning_rate must lie in (0, 1), got {}",
                self.learning_rate
            )));
        }
        if !(self.wide_learning_rate_scale > 0.0 && self.wide_learning_rate_scale <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "wide_learning_rate_scale must lie in (0, 1], got {}",
                self.wide_learning_rate_scale
            )));
        }
        Ok(())
    }
}

/// A labelled candidate of one training dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub dataset_id: String,
    pub visualization: Visualization,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BuiltExamples {
    pub examples: Vec<TrainingExample>,
    pub skipped: Vec<SkippedDataset>,
}

/// All usable positives of every dataset plus `m` sampled negatives, in
/// dataset-id order. Datasets without negatives are skipped with a warning.
pub fn build_examples(
    split: &Corpus,
    vocab: &ConfigVocabulary,
    cfg: &TrainConfig,
) -> Result<BuiltExamples> {
    build_examples_seeded(split, vocab, cfg, cfg.seed)
}

fn build_examples_seeded(
    split: &Corpus,
    vocab: &ConfigVocabulary,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<BuiltExamples> {
    let mut out = BuiltExamples::default();
    let mut datasets: Vec<&Dataset> = split.datasets.iter().collect();
    datasets.sort_by(|a, b| a.id.cmp(&b.id));
    for dataset in datasets {
        let space = scorable_candidates(dataset, vocab, cfg.model.max_arity);
        let space_keys: HashSet<String> = space.iter().map(Visualization::key).collect();
        let mut seen = HashSet::new();
        let positives: Vec<Visualization> = vocab_positives(split, &dataset.id, vocab)
            .into_iter()
            .filter(|v| space_keys.contains(&v.key()) && seen.insert(v.key()))
            .collect();
        let negative_space: Vec<Visualization> = space
            .into_iter()
            .filter(|v| !seen.contains(&v.key()))
            .map(|v| v.with_label(0))
            .collect();
        let negatives = match sample_from_space(
            &dataset.id,
            &negative_space,
            cfg.negatives_per_dataset,
            derive_seed(seed, &dataset.id),
        ) {
            Ok(n) => n,
            Err(e @ Error::NoNegativesAvailable(_)) => {
                log::warn!("dataset `{}`: {e}; skipped", dataset.id);
                out.skipped.push(SkippedDataset {
                    dataset_id: dataset.id.clone(),
                    reason: e.kind().into(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        for (v, label) in positives
            .into_iter()
            .map(|v| (v, 1))
            .chain(negatives.into_iter().map(|v| (v, 0)))
        {
            out.examples.push(TrainingExample {
                dataset_id: dataset.id.clone(),
                visualization: v,
                label,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example cross-entropy over the epoch.
    pub train_loss: f64,
    pub median_batch_loss: f64,
    pub val_ndcg5: Option<f64>,
    pub val_loss: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the returned parameters; 0 means the initialization.
    pub selected_epoch: usize,
    pub best_val_ndcg5: Option<f64>,
    pub initial_loss: f64,
    pub wall_clock_secs: f64,
    pub examples: usize,
    pub positives: usize,
    pub vocab_size: usize,
    pub cross_features: usize,
    pub skipped_datasets: Vec<SkippedDataset>,
    pub stopped_early: bool,
    pub config: TrainConfig,
}

impl TrainReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Raw meta-features per attribute of each dataset, computed once.
struct FeatureCache {
    raw: Vec<(String, Vec<(String, Option<MetaFeatureVector>)>)>,
}

impl FeatureCache {
    fn compute(corpus: &Corpus, schema: &MetaFeatureSchema) -> Result<Self> {
        let mut raw = Vec::with_capacity(corpus.datasets.len());
        for d in &corpus.datasets {
            let mut attrs = Vec::with_capacity(d.attributes.len());
            for a in &d.attributes {
                let v = match compute_metafeatures(a, schema) {
                    Ok(v) => Some(v),
                    Err(Error::EmptyAttribute(_)) => None,
                    Err(e) => return Err(e),
                };
                attrs.push((a.name.clone(), v));
            }
            raw.push((d.id.clone(), attrs));
        }
        Ok(FeatureCache { raw })
    }

    fn vectors(&self) -> impl Iterator<Item = &MetaFeatureVector> {
        self.raw
            .iter()
            .flat_map(|(_, attrs)| attrs.iter().filter_map(|(_, v)| v.as_ref()))
    }

    fn normalized(&self, normalizer: &Normalizer) -> Result<HashMap<String, DatasetFeatures>> {
        let mut out = HashMap::with_capacity(self.raw.len());
        for (id, attrs) in &self.raw {
            let mut by_name = HashMap::with_capacity(attrs.len());
            for (name, v) in attrs {
                let n = v
                    .as_ref()
                    .map(|v| normalizer.apply_values(&v.values))
                    .transpose()?;
                by_name.insert(name.clone(), n);
            }
            out.insert(id.clone(), DatasetFeatures::from_parts(id.clone(), by_name));
        }
        Ok(out)
    }
}

struct ValidationPools {
    lists: Vec<(String, Vec<(String, u8)>, Vec<Example>)>,
}

impl ValidationPools {
    /// nDCG@5 and mean cross-entropy over the pools.
    fn measure(&self, model: &WideDeepModel, batch: usize) -> Result<Option<(f64, f64)>> {
        if self.lists.is_empty() {
            return Ok(None);
        }
        let mut ranked = Vec::with_capacity(self.lists.len());
        let mut loss = 0.0;
        let mut n = 0usize;
        for (id, keys, examples) in &self.lists {
            let scores = model.net.scores(examples, batch)?;
            for ((_, label), s) in keys.iter().zip(&scores) {
                loss += binary_cross_entropy(*s, f64::from(*label));
                n += 1;
            }
            ranked.push(RankedList::new(
                id.clone(),
                keys.iter()
                    .zip(scores)
                    .map(|((key, label), score)| RankedEntry {
                        key: key.clone(),
                        score,
                        label: *label,
                    })
                    .collect(),
            ));
        }
        Ok(Some((ndcg_at_k(&ranked, 5)?, loss / n as f64)))
    }
}

fn check_disjoint(a: &Corpus, b: &Corpus, what: &str) -> Result<()> {
    let ids: HashSet<&str> = a.datasets.iter().map(|d| d.id.as_str()).collect();
    if let Some(d) = b.datasets.iter().find(|d| ids.contains(d.id.as_str())) {
        return Err(Error::InvalidConfig(format!(
            "dataset `{}` appears in both the training and {what} splits",
            d.id
        )));
    }
    Ok(())
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Train on `train`, selecting the epoch with the best validation nDCG@5.
pub fn train(
    train: &Corpus,
    val: &Corpus,
    cfg: &TrainConfig,
) -> Result<(WideDeepModel, TrainReport)> {
    let started = Instant::now();
    cfg.validate()?;
    check_disjoint(train, val, "validation")?;
    let vocab = extract_vocabulary(train)?;
    let schema = MetaFeatureSchema::default();

    let train_cache = FeatureCache::compute(train, &schema)?;
    let mut vectors = train_cache.vectors().peekable();
    if vectors.peek().is_none() {
        return Err(Error::EmptyCorpus);
    }
    let normalizer = Normalizer::fit(vectors);
    let train_features = train_cache.normalized(&normalizer)?;
    let val_features = FeatureCache::compute(val, &schema)?.normalized(&normalizer)?;

    let mut built = build_examples(train, &vocab, cfg)?;
    if built.examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let layout = EncodingLayout {
        k: schema.k,
        max_arity: cfg.model.max_arity,
        bins: cfg.model.bins,
        vocab_len: vocab.len(),
    };
    let mut positive_bundles = Vec::new();
    for ex in built.examples.iter().filter(|e| e.label == 1) {
        let features = &train_features[&ex.dataset_id];
        positive_bundles.push(encode_visualization(
            &ex.visualization,
            features,
            &vocab,
            &layout,
        )?);
    }
    let cross = CrossProductSpec::from_positive_cooccurrence(
        &positive_bundles,
        &layout,
        cfg.cross_min_count,
        cfg.cross_cap,
    )?;
    drop(positive_bundles);
    let mut model = WideDeepModel::init(
        schema,
        normalizer,
        vocab.clone(),
        cross,
        cfg.model.clone(),
        cfg.seed,
    )?;

    let (pools, _) = build_pools(
        val,
        &vocab,
        &PoolConfig {
            negatives_per_dataset: cfg.validation_negatives,
            seed: cfg.seed,
            max_arity: cfg.model.max_arity,
        },
    )?;
    let mut validation = ValidationPools { lists: Vec::new() };
    for pool in pools {
        let features = &val_features[&pool.dataset_id];
        let examples = pool
            .candidates
            .iter()
            .map(|v| model.example(v, features))
            .collect::<Result<Vec<_>>>()?;
        let keys = pool
            .candidates
            .iter()
            .map(|v| (v.key(), v.label.unwrap_or(0)))
            .collect();
        validation.lists.push((pool.dataset_id, keys, examples));
    }

    let batch = cfg.batch_size;
    let materialize = |model: &WideDeepModel,
                       examples: &[&TrainingExample]|
     -> Result<(Vec<Example>, Vec<f64>)> {
        let mut rows = Vec::with_capacity(examples.len());
        let mut labels = Vec::with_capacity(examples.len());
        for ex in examples {
            rows.push(model.example(&ex.visualization, &train_features[&ex.dataset_id])?);
            labels.push(f64::from(ex.label));
        }
        Ok((rows, labels))
    };

    let mut initial_loss = 0.0;
    for chunk in built.examples.chunks(batch) {
        let refs: Vec<&TrainingExample> = chunk.iter().collect();
        let (rows, labels) = materialize(&model, &refs)?;
        let scores = model.net.scores(&rows, batch)?;
        initial_loss += scores
            .iter()
            .zip(&labels)
            .map(|(&s, &y)| binary_cross_entropy(s, y))
            .sum::<f64>();
    }
    initial_loss /= built.examples.len() as f64;

    let mut best_params = model.net.params.clone();
    let mut best = validation.measure(&model, 256)?;
    let mut selected_epoch = 0;
    let mut since_best = 0;
    let mut stopped_early = false;
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..built.examples.len()).collect();

    for epoch in 1..=cfg.epochs {
        let epoch_start = Instant::now();
        if cfg.resample_negatives_per_epoch && epoch > 1 {
            built = build_examples_seeded(
                train,
                &vocab,
                cfg,
                derive_seed(cfg.seed, &format!("epoch-{epoch}")),
            )?;
            order = (0..built.examples.len()).collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("shuffle-{epoch}")));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batch_losses = Vec::new();
        for idx in order.chunks(batch) {
            let refs: Vec<&TrainingExample> = idx.iter().map(|&i| &built.examples[i]).collect();
            let (rows, labels) = materialize(&model, &refs)?;
            let row_refs: Vec<&Example> = rows.iter().collect();
            let (loss, mut grads, _) = model.net.loss_and_gradients(&row_refs, &labels)?;
            grads.wide *= cfg.wide_learning_rate_scale;
            grads.wide_bias *= cfg.wide_learning_rate_scale;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss {
                    epoch,
                    detail: format!(
                        "batch loss {loss} after {} examples",
                        batch_losses.len() * batch
                    ),
                });
            }
            model
                .net
                .sgd_step(&grads, cfg.learning_rate / rows.len() as f64);
            if !model.net.params.is_finite() {
                return Err(Error::DivergedLoss {
                    epoch,
                    detail: "non-finite parameters after update".into(),
                });
            }
            total += loss;
            batch_losses.push(loss / rows.len() as f64);
        }
        let train_loss = total / built.examples.len() as f64;
        let measured = validation.measure(&model, 256)?;
        let val_ndcg5 = measured.map(|m| m.0);
        log::info!(
            "epoch {epoch}: loss {train_loss:.5}, validation nDCG@5 {}",
            val_ndcg5.map_or("n/a".into(), |v| format!("{v:.4}"))
        );
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            median_batch_loss: median(batch_losses),
            val_ndcg5,
            val_loss: measured.map(|m| m.1),
            seconds: epoch_start.elapsed().as_secs_f64(),
        });
        // Higher nDCG@5 wins; equal nDCG@5 falls back to lower loss.
        let improved = match (measured, best) {
            (Some((v, l)), Some((bv, bl))) => v > bv || (v == bv && l < bl),
            _ => true,
        };
        if improved {
            best = measured;
            best_params = model.net.params.clone();
            selected_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.early_stop_patience {
                stopped_early = epoch < cfg.epochs;
                break;
            }
        }
    }
    model.net.params = best_params;
    let report = TrainReport {
        epochs,
        selected_epoch,
        best_val_ndcg5: best.map(|b| b.0),
        initial_loss,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        examples: built.examples.len(),
        positives: built.examples.iter().filter(|e| e.label == 1).count(),
        vocab_size: vocab.len(),
        cross_features: model.cross_spec.len(),
        skipped_datasets: built.skipped,
        stopped_early,
        config: cfg.clone(),
    };
    Ok((model, report))
}
