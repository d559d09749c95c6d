//! Network inputs for a candidate visualization.
//!
//! Dense attribute features are the normalized meta-feature vectors of the
//! bound attributes, concatenated in slot order and zero-padded to
//! `max_arity` slots. Sparse attribute features bucket every normalized
//! dimension into one of `bins` equal-width bins. The sparse configuration
//! features are the vocabulary one-hot followed by fixed field-value
//! indicator bits (mark, channel/slot-type, channel/aggregate). The dense
//! configuration feature is an embedding lookup resolved by the network.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metafeatures::{compute_metafeatures, MetaFeatureSchema, Normalizer};
use crate::tabular::Dataset;
use crate::vis_space::{Aggregate, Channel, ConfigVocabulary, Mark, Visualization};

pub const DEFAULT_BINS: usize = 10;
pub const DEFAULT_EMBEDDING_DIM: usize = 16;
pub const DEFAULT_CROSS_MIN_COUNT: usize = 5;
pub const DEFAULT_CROSS_CAP: usize = 5_000;

const SLOT_KINDS: usize = 5; // four attribute types + constant value
const CHANNEL_SLOT_BITS: usize = 4 * SLOT_KINDS;
const CHANNEL_AGG_BITS: usize = 4 * 5;
/// Number of field-value indicator bits following the configuration one-hot.
pub const FIELD_VALUE_BITS: usize = CHANNEL_SLOT_BITS + CHANNEL_AGG_BITS + Mark::ALL.len();

/// A bit vector stored as its sorted set of active positions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SparseBits {
    len: usize,
    active: Vec<u32>,
}

impl SparseBits {
    pub fn new(len: usize, mut active: Vec<u32>) -> Result<Self> {
        active.sort_unstable();
        active.dedup();
        if let Some(&last) = active.last() {
            if last as usize >= len {
                return Err(Error::IndexOutOfRange {
                    index: last as usize,
                    len,
                });
            }
        }
        Ok(SparseBits { len, active })
    }

    pub fn from_dense(bits: &[u8]) -> Self {
        SparseBits {
            len: bits.len(),
            active: bits
                .iter()
                .enumerate()
                .filter(|(_, b)| **b != 0)
                .map(|(i, _)| i as u32)
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active(&self) -> &[u32] {
        &self.active
    }

    pub fn count_ones(&self) -> usize {
        self.active.len()
    }

    pub fn get(&self, i: usize) -> bool {
        self.active.binary_search(&(i as u32)).is_ok()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len];
        for &i in &self.active {
            out[i as usize] = 1;
        }
        out
    }

    /// Concatenate `self` followed by `other`.
    pub fn concat(&self, other: &SparseBits) -> SparseBits {
        let offset = self.len as u32;
        let mut active = self.active.clone();
        active.extend(other.active.iter().map(|i| i + offset));
        SparseBits {
            len: self.len + other.len,
            active,
        }
    }
}

/// Widths of every encoded block, derived from the model hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodingLayout {
    /// Meta-feature dimensions per attribute.
    pub k: usize,
    pub max_arity: usize,
    pub bins: usize,
    pub vocab_len: usize,
}

impl EncodingLayout {
    pub fn dx_len(&self) -> usize {
        self.max_arity * self.k
    }

    pub fn sx_len(&self) -> usize {
        self.max_arity * self.k * self.bins
    }

    pub fn sc_len(&self) -> usize {
        self.vocab_len + FIELD_VALUE_BITS
    }

    /// Length of the concatenated sparse vector `s = [s_c, s_x]`.
    pub fn s_len(&self) -> usize {
        self.sc_len() + self.sx_len()
    }

    /// Position of an attribute-bin bit within `s`.
    pub fn attribute_bit(&self, slot: usize, dim: usize, bin: usize) -> usize {
        self.sc_len() + (slot * self.k + dim) * self.bins + bin
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    pub d_x: Vec<f64>,
    pub s_x: SparseBits,
    /// Vocabulary position of the configuration; the network resolves `d_c`
    /// from it.
    pub config_index: usize,
    pub s_c: SparseBits,
    pub combo_arity: usize,
}

impl FeatureBundle {
    /// The concatenated sparse vector `s = [s_c, s_x]`.
    pub fn sparse(&self) -> SparseBits {
        self.s_c.concat(&self.s_x)
    }
}

/// Bin of a normalized value; 1.0 falls in the last bin.
pub fn value_bin(v: f64, bins: usize) -> usize {
    let b = (v * bins as f64).floor();
    if b.is_nan() || b < 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Normalized meta-features of every attribute of one dataset.
#[derive(Debug, Clone)]
pub struct DatasetFeatures {
    dataset_id: String,
    by_name: HashMap<String, Option<Vec<f64>>>,
}

impl DatasetFeatures {
    /// Compute normalized meta-features; attributes without any non-missing
    /// value have none and cannot be encoded.
    pub fn compute(
        dataset: &Dataset,
        schema: &MetaFeatureSchema,
        normalizer: &Normalizer,
    ) -> Result<Self> {
        let mut by_name = HashMap::with_capacity(dataset.attributes.len());
        for attr in &dataset.attributes {
            let normalized = match compute_metafeatures(attr, schema) {
                Ok(v) => Some(normalizer.apply_values(&v.values)?),
                Err(Error::EmptyAttribute(_)) => None,
                Err(e) => return Err(e),
            };
            by_name.insert(attr.name.clone(), normalized);
        }
        Ok(DatasetFeatures {
            dataset_id: dataset.id.clone(),
            by_name,
        })
    }

    /// Assemble from already normalized vectors; `None` marks an attribute
    /// without observed values.
    pub fn from_parts(
        dataset_id: impl Into<String>,
        by_name: HashMap<String, Option<Vec<f64>>>,
    ) -> Self {
        DatasetFeatures {
            dataset_id: dataset_id.into(),
            by_name,
        }
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn get(&self, name: &str) -> Result<&[f64]> {
        match self.by_name.get(name) {
            Some(Some(v)) => Ok(v),
            Some(None) => Err(Error::EmptyAttribute(name.to_string())),
            None => Err(Error::UnknownAttribute(name.to_string())),
        }
    }

    pub fn is_encodable(&self, name: &str) -> bool {
        matches!(self.by_name.get(name), Some(Some(_)))
    }
}

/// Dense and sparse attribute features of a binding.
pub fn encode_attributes(
    names: &[String],
    features: &DatasetFeatures,
    layout: &EncodingLayout,
) -> Result<(Vec<f64>, SparseBits)> {
    if names.len() > layout.max_arity {
        return Err(Error::ShapeMismatch(format!(
            "binding of {} attributes exceeds max arity {}",
            names.len(),
            layout.max_arity
        )));
    }
    let mut d_x = vec![0.0; layout.dx_len()];
    let mut active = Vec::with_capacity(names.len() * layout.k);
    for (slot, name) in names.iter().enumerate() {
        let values = features.get(name)?;
        if values.len() != layout.k {
            return Err(Error::SchemaMismatch {
                expected: layout.k,
                actual: values.len(),
            });
        }
        d_x[slot * layout.k..(slot + 1) * layout.k].copy_from_slice(values);
        for (dim, &v) in values.iter().enumerate() {
            active.push(((slot * layout.k + dim) * layout.bins + value_bin(v, layout.bins)) as u32);
        }
    }
    Ok((d_x, SparseBits::new(layout.sx_len(), active)?))
}

/// Vocabulary one-hot followed by field-value indicators.
pub fn encode_config(config_id: &str, vocab: &ConfigVocabulary) -> Result<SparseBits> {
    let position = vocab
        .position(config_id)
        .ok_or_else(|| Error::UnknownConfig(config_id.to_string()))?;
    let config = &vocab.configs()[position];
    let base = vocab.len();
    let mut active = vec![position as u32];
    for c in &config.channels {
        let slot_kind = match c.field_type {
            Some(t) => t.index(),
            None => 4,
        };
        active.push((base + channel_slot_bit(c.channel, slot_kind)) as u32);
        active.push((base + CHANNEL_SLOT_BITS + channel_agg_bit(c.channel, c.aggregate)) as u32);
    }
    active.push((base + CHANNEL_SLOT_BITS + CHANNEL_AGG_BITS + config.mark.index()) as u32);
    SparseBits::new(base + FIELD_VALUE_BITS, active)
}

fn channel_slot_bit(channel: Channel, slot_kind: usize) -> usize {
    channel.index() * SLOT_KINDS + slot_kind
}

fn channel_agg_bit(channel: Channel, aggregate: Aggregate) -> usize {
    channel.index() * Aggregate::ALL.len() + aggregate.index()
}

/// Encode a candidate visualization.
pub fn encode_visualization(
    vis: &Visualization,
    features: &DatasetFeatures,
    vocab: &ConfigVocabulary,
    layout: &EncodingLayout,
) -> Result<FeatureBundle> {
    let (d_x, s_x) = encode_attributes(&vis.combo.attribute_names, features, layout)?;
    let s_c = encode_config(&vis.config_id, vocab)?;
    Ok(FeatureBundle {
        d_x,
        s_x,
        config_index: vocab
            .position(&vis.config_id)
            .expect("checked by encode_config"),
        s_c,
        combo_arity: vis.combo.arity(),
    })
}

/// Conjunctions of sparse-feature positions; feature `k` fires when every
/// position of mask `k` is set.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CrossProductSpec {
    masks: Vec<Vec<u32>>,
    // Masks keyed by their smallest position.
    by_first: HashMap<u32, Vec<u32>>,
}

impl CrossProductSpec {
    pub fn new(masks: Vec<Vec<u32>>) -> Result<Self> {
        let mut by_first: HashMap<u32, Vec<u32>> = HashMap::new();
        let mut normalized = Vec::with_capacity(masks.len());
        for (k, mut mask) in masks.into_iter().enumerate() {
            mask.sort_unstable();
            mask.dedup();
            if mask.len() < 2 {
                return Err(Error::InvalidShape(format!(
                    "cross-product mask {k} needs at least two positions"
                )));
            }
            by_first.entry(mask[0]).or_default().push(k as u32);
            normalized.push(mask);
        }
        Ok(CrossProductSpec {
            masks: normalized,
            by_first,
        })
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    pub fn masks(&self) -> &[Vec<u32>] {
        &self.masks
    }

    /// Largest referenced position, if any.
    pub fn max_index(&self) -> Option<u32> {
        self.masks.iter().filter_map(|m| m.last().copied()).max()
    }

    pub fn apply(&self, s: &SparseBits) -> Result<SparseBits> {
        if let Some(max) = self.max_index() {
            if max as usize >= s.len() {
                return Err(Error::IndexOutOfRange {
                    index: max as usize,
                    len: s.len(),
                });
            }
        }
        let mut fired = Vec::new();
        for i in s.active() {
            if let Some(candidates) = self.by_first.get(i) {
                for &k in candidates {
                    if self.masks[k as usize][1..]
                        .iter()
                        .all(|j| s.get(*j as usize))
                    {
                        fired.push(k);
                    }
                }
            }
        }
        SparseBits::new(self.masks.len(), fired)
    }

    /// Pairs of (configuration one-hot bit, attribute-bin bit) that co-occur
    /// at least `min_count` times among the given positive bundles, keeping
    /// the `cap` most frequent.
    pub fn from_positive_cooccurrence<'a>(
        positives: impl IntoIterator<Item = &'a FeatureBundle>,
        layout: &EncodingLayout,
        min_count: usize,
        cap: usize,
    ) -> Result<Self> {
        let sx_offset = layout.sc_len() as u32;
        let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
        for b in positives {
            let config_bit = b.config_index as u32;
            for &bit in b.s_x.active() {
                *counts.entry((config_bit, sx_offset + bit)).or_default() += 1;
            }
        }
        let mut frequent: Vec<((u32, u32), usize)> = counts
            .into_iter()
            .filter(|(_, n)| *n >= min_count)
            .collect();
        frequent.sort_by(|(pa, na), (pb, nb)| nb.cmp(na).then_with(|| pa.cmp(pb)));
        frequent.truncate(cap);
        CrossProductSpec::new(frequent.into_iter().map(|((a, b), _)| vec![a, b]).collect())
    }
}

/// Evaluate `spec` on `s`.
pub fn cross_products(s: &SparseBits, spec: &CrossProductSpec) -> Result<SparseBits> {
    spec.apply(s)
}

/// Counts of feature bundles per configuration, for diagnostics.
pub fn config_histogram<'a>(
    bundles: impl IntoIterator<Item = &'a FeatureBundle>,
) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for b in bundles {
        *out.entry(b.config_index).or_default() += 1;
    }
    out
}
