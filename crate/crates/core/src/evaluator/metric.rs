use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cutoffs reported by default.
pub const DEFAULT_KS: [usize; 5] = [1, 2, 5, 10, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub key: String,
    pub score: f64,
    pub label: u8,
}

/// A scored pool in rank order: score descending, then key ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub dataset_id: String,
    entries: Vec<RankedEntry>,
}

impl RankedList {
    pub fn new(dataset_id: impl Into<String>, mut entries: Vec<RankedEntry>) -> Self {
        entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key)));
        RankedList {
            dataset_id: dataset_id.into(),
            entries,
        }
    }

    /// A list whose labels are already in rank order.
    pub fn from_labels(dataset_id: impl Into<String>, labels: &[u8]) -> Self {
        let n = labels.len();
        RankedList {
            dataset_id: dataset_id.into(),
            entries: labels
                .iter()
                .enumerate()
                .map(|(j, &label)| RankedEntry {
                    key: format!("{j:08}"),
                    score: (n - j) as f64,
                    label,
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[RankedEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.entries.iter().filter(|e| e.label > 0).count()
    }

    /// Adjacent pairs with identical scores.
    pub fn tie_count(&self) -> usize {
        self.entries
            .windows(2)
            .filter(|w| w[0].score == w[1].score)
            .count()
    }

    /// Normalized DCG truncated at `k`; `None` without positives.
    pub fn ndcg(&self, k: usize) -> Option<f64> {
        ndcg_of_labels(&self.labels(), k)
    }
}

/// Normalized DCG of binary labels in rank order; the ideal DCG counts
/// `min(k, positives)` leading hits.
pub fn ndcg_of_labels(labels: &[u8], k: usize) -> Option<f64> {
    let positives = labels.iter().filter(|&&y| y > 0).count();
    if positives == 0 || k == 0 {
        return None;
    }
    let discount = |j: usize| 1.0 / ((j + 1) as f64).log2();
    let dcg: f64 = labels
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &y)| (2f64.powi(i32::from(y.min(1))) - 1.0) * discount(i + 1))
        .sum();
    let ideal: f64 = (1..=k.min(positives)).map(discount).sum();
    Some(dcg / ideal)
}

/// Mean nDCG@k over lists that contain a positive; lists without one are
/// skipped with a warning.
pub fn ndcg_at_k(lists: &[RankedList], k: usize) -> Result<f64> {
    let mut sum = 0.0;
    let mut n = 0usize;
    for list in lists {
        match list.ndcg(k) {
            Some(v) => {
                sum += v;
                n += 1;
            }
            None => log::warn!("dataset `{}` has no positives; skipped", list.dataset_id),
        }
    }
    if n == 0 {
        return Err(Error::NoPositives(
            "no ranked list contains a positive".into(),
        ));
    }
    Ok(sum / n as f64)
}

/// Like [`ndcg_at_k`] but any list without positives is an error.
pub fn ndcg_at_k_strict(lists: &[RankedList], k: usize) -> Result<f64> {
    if let Some(list) = lists.iter().find(|l| l.positives() == 0) {
        return Err(Error::NoPositives(list.dataset_id.clone()));
    }
    ndcg_at_k(lists, k)
}
