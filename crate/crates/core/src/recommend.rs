//! Constrained top-k recommendation with a frozen model.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::WideDeepModel;
use crate::tabular::{AttributeType, Dataset};
use crate::vis_space::{
    candidate_count_bound, chart_spec, generate_candidates, Aggregate, ConfigVocabulary, Mark,
    VisConfiguration, Visualization,
};

/// Largest constrained candidate space scored per request.
pub const CANDIDATE_LIMIT: u64 = 200_000;
pub const DEFAULT_TOP_K: usize = 10;

/// Empty sets leave the corresponding aspect unconstrained.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConstraints {
    /// Multiset: each listed type must be bound exactly as many times as it
    /// is listed. Unlisted types are unconstrained.
    pub required_attribute_types: Vec<AttributeType>,
    /// Attributes every candidate must bind.
    pub required_attributes: BTreeSet<String>,
    pub allowed_marks: BTreeSet<Mark>,
    /// Aggregates a configuration may use. Unless `none` is allowed, the
    /// configuration must aggregate at least one channel.
    pub allowed_aggregates: BTreeSet<Aggregate>,
}

impl QueryConstraints {
    fn required_type_counts(&self) -> BTreeMap<AttributeType, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.required_attribute_types {
            *counts.entry(*t).or_default() += 1;
        }
        counts
    }

    /// Configuration-level part of the constraints.
    pub fn admits_config(&self, config: &VisConfiguration) -> bool {
        if !self.allowed_marks.is_empty() && !self.allowed_marks.contains(&config.mark) {
            return false;
        }
        if !self.allowed_aggregates.is_empty() {
            let used: Vec<Aggregate> = config
                .aggregates()
                .filter(|a| *a != Aggregate::None)
                .collect();
            if used.iter().any(|a| !self.allowed_aggregates.contains(a)) {
                return false;
            }
            if used.is_empty() && !self.allowed_aggregates.contains(&Aggregate::None) {
                return false;
            }
        }
        let slots = config.slot_types();
        self.required_type_counts()
            .iter()
            .all(|(t, &n)| slots.iter().filter(|s| *s == t).count() == n)
    }

    /// Full check of one candidate.
    pub fn admits(&self, config: &VisConfiguration, vis: &Visualization) -> bool {
        self.admits_config(config)
            && self
                .required_attributes
                .iter()
                .all(|a| vis.combo.attribute_names.contains(a))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendQuery {
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default)]
    pub constraints: QueryConstraints,
}

fn default_top_k() -> usize {
    DEFAULT_TOP_K
}

impl Default for RecommendQuery {
    fn default() -> Self {
        RecommendQuery {
            top_k: DEFAULT_TOP_K,
            constraints: QueryConstraints::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub rank: usize,
    /// Raw model output in (0, 1), shown as a relevance score.
    pub score: f64,
    pub visualization: Visualization,
    pub chart_spec: Value,
}

/// Vocabulary restricted to the configurations the constraints admit.
fn admitted_vocabulary(
    vocab: &ConfigVocabulary,
    constraints: &QueryConstraints,
) -> Result<ConfigVocabulary> {
    ConfigVocabulary::new(
        vocab
            .configs()
            .iter()
            .zip(vocab.counts())
            .filter(|(c, _)| constraints.admits_config(c))
            .map(|(c, &n)| (c.clone(), n))
            .collect(),
    )
}

/// Upper bound on the constrained candidate space.
pub fn constrained_bound(
    model: &WideDeepModel,
    dataset: &Dataset,
    constraints: &QueryConstraints,
) -> Result<u64> {
    let admitted = admitted_vocabulary(&model.vocab, constraints)?;
    Ok(candidate_count_bound(
        dataset,
        &admitted,
        model.hyper.max_arity,
    ))
}

/// Score every admissible candidate and return the best `top_k`.
pub fn recommend(
    model: &WideDeepModel,
    dataset: &Dataset,
    query: &RecommendQuery,
) -> Result<Vec<Recommendation>> {
    if query.top_k == 0 {
        return Err(Error::InvalidConfig("top_k must be at least 1".into()));
    }
    let constraints = &query.constraints;
    if let Some(name) = constraints
        .required_attributes
        .iter()
        .find(|n| dataset.attribute(n).is_none())
    {
        return Err(Error::UnknownAttribute(name.clone()));
    }
    let bound = constrained_bound(model, dataset, constraints)?;
    if bound > CANDIDATE_LIMIT {
        return Err(Error::TooManyCandidates {
            bound,
            limit: CANDIDATE_LIMIT,
        });
    }
    let features = model.dataset_features(dataset)?;
    let filter = |c: &VisConfiguration| constraints.admits_config(c);
    let mut candidates =
        generate_candidates(dataset, &model.vocab, model.hyper.max_arity, Some(&filter));
    let required: HashSet<&str> = constraints
        .required_attributes
        .iter()
        .map(String::as_str)
        .collect();
    candidates.retain(|v| {
        let names = &v.combo.attribute_names;
        required.iter().all(|r| names.iter().any(|n| n == r))
            && names.iter().all(|n| features.is_encodable(n))
    });
    if candidates.is_empty() {
        return Err(Error::NoCandidates(format!(
            "no candidate of dataset `{}` satisfies the constraints",
            dataset.id
        )));
    }
    let scores = model.score_candidates(&features, &candidates)?;
    let mut ranked: Vec<(f64, String, Visualization)> = candidates
        .into_iter()
        .zip(scores)
        .map(|(v, s)| (s, v.key(), v))
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    ranked.truncate(query.top_k);
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, (score, _, visualization))| {
            let config = model
                .vocab
                .get(&visualization.config_id)
                .expect("candidate from vocabulary");
            Recommendation {
                rank: i + 1,
                score,
                chart_spec: chart_spec(&visualization, config),
                visualization,
            }
        })
        .collect())
}
