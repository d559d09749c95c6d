//! Visualization configurations and the dataset-dependent space of candidate
//! visualizations.
//!
//! A configuration is a chart with its attribute references replaced by
//! attribute types. Binding a configuration's typed slots to concrete
//! attributes of a dataset yields a candidate visualization; the set of all
//! such bindings is the dataset's visualization space.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tabular::{AttributeType, Corpus, Dataset};

pub const DEFAULT_MAX_ARITY: usize = 3;
pub const VOCABULARY_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Bar,
    Scatter,
    Line,
    Area,
    Box,
    Histogram,
    Pie,
}

impl Mark {
    pub const ALL: [Mark; 7] = [
        Mark::Bar,
        Mark::Scatter,
        Mark::Line,
        Mark::Area,
        Mark::Box,
        Mark::Histogram,
        Mark::Pie,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mark::Bar => "bar",
            Mark::Scatter => "scatter",
            Mark::Line => "line",
            Mark::Area => "area",
            Mark::Box => "box",
            Mark::Histogram => "histogram",
            Mark::Pie => "pie",
        }
    }

    fn vega_lite(self) -> &'static str {
        match self {
            Mark::Bar | Mark::Histogram => "bar",
            Mark::Scatter => "point",
            Mark::Line => "line",
            Mark::Area => "area",
            Mark::Box => "boxplot",
            Mark::Pie => "arc",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Color,
    Size,
}

impl Channel {
    pub const ALL: [Channel; 4] = [Channel::X, Channel::Y, Channel::Color, Channel::Size];

    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
            Channel::Size => "size",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn from_name(s: &str) -> Option<Channel> {
        Channel::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    None,
    Sum,
    Mean,
    Bin,
    Count,
}

impl Aggregate {
    pub const ALL: [Aggregate; 5] = [
        Aggregate::None,
        Aggregate::Sum,
        Aggregate::Mean,
        Aggregate::Bin,
        Aggregate::Count,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::None => "none",
            Aggregate::Sum => "sum",
            Aggregate::Mean => "mean",
            Aggregate::Bin => "bin",
            Aggregate::Count => "count",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// What a channel encodes: an attribute of some type, or a literal value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Slot {
    Field(AttributeType),
    Value(String),
}

/// One encoding channel of a configuration. Exactly one of `field_type` and
/// `value` is set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub channel: Channel,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub field_type: Option<AttributeType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    #[serde(default, skip_serializing_if = "is_none_aggregate")]
    pub aggregate: Aggregate,
}

fn is_none_aggregate(a: &Aggregate) -> bool {
    *a == Aggregate::None
}

impl ChannelSpec {
    pub fn field(channel: Channel, kind: AttributeType) -> Self {
        ChannelSpec {
            channel,
            field_type: Some(kind),
            value: None,
            aggregate: Aggregate::None,
        }
    }

    pub fn constant(channel: Channel, value: impl Into<String>) -> Self {
        ChannelSpec {
            channel,
            field_type: None,
            value: Some(value.into()),
            aggregate: Aggregate::None,
        }
    }

    pub fn with_aggregate(mut self, aggregate: Aggregate) -> Self {
        self.aggregate = aggregate;
        self
    }

    pub fn slot(&self) -> Slot {
        match (&self.field_type, &self.value) {
            (Some(t), _) => Slot::Field(*t),
            (None, Some(v)) => Slot::Value(v.clone()),
            (None, None) => Slot::Value(String::new()),
        }
    }
}

/// A data-independent chart: design choices with attribute slots replaced by
/// attribute types. Channels are kept in `Channel` order, which is also the
/// order in which attributes bind to typed slots.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VisConfiguration {
    #[serde(default)]
    pub id: String,
    pub mark: Mark,
    pub channels: Vec<ChannelSpec>,
}

impl VisConfiguration {
    /// Build a configuration; channels are sorted into canonical order and an
    /// empty id is replaced by the canonical id.
    pub fn new(id: impl Into<String>, mark: Mark, mut channels: Vec<ChannelSpec>) -> Result<Self> {
        channels.sort_by_key(|c| c.channel);
        let mut config = VisConfiguration {
            id: id.into(),
            mark,
            channels,
        };
        if config.id.is_empty() {
            config.id = config.canonical_id();
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidConfig("empty configuration id".into()));
        }
        if !self
            .channels
            .windows(2)
            .all(|w| w[0].channel < w[1].channel)
        {
            return Err(Error::InvalidConfig(format!(
                "`{}`: channels must be distinct and ordered x, y, color, size",
                self.id
            )));
        }
        for c in &self.channels {
            match (&c.field_type, &c.value) {
                (Some(_), None) => {}
                (None, Some(_)) if c.aggregate == Aggregate::None => {}
                (None, Some(_)) => {
                    return Err(Error::InvalidConfig(format!(
                        "`{}`: constant channel {} cannot be aggregated",
                        self.id,
                        c.channel.as_str()
                    )))
                }
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "`{}`: channel {} needs exactly one of type or value",
                        self.id,
                        c.channel.as_str()
                    )))
                }
            }
        }
        if self.arity() == 0 {
            return Err(Error::InvalidConfig(format!(
                "`{}`: at least one channel must encode an attribute",
                self.id
            )));
        }
        Ok(())
    }

    /// Attribute types of the typed slots, in binding order.
    pub fn slot_types(&self) -> Vec<AttributeType> {
        self.channels.iter().filter_map(|c| c.field_type).collect()
    }

    pub fn arity(&self) -> usize {
        self.channels
            .iter()
            .filter(|c| c.field_type.is_some())
            .count()
    }

    pub fn aggregates(&self) -> impl Iterator<Item = Aggregate> + '_ {
        self.channels.iter().map(|c| c.aggregate)
    }

    /// Identifier derived from the design choices alone.
    pub fn canonical_id(&self) -> String {
        let mut id = self.mark.as_str().to_string();
        for c in &self.channels {
            id.push('|');
            id.push_str(c.channel.as_str());
            match (&c.field_type, &c.value) {
                (Some(t), _) => {
                    id.push(':');
                    id.push_str(t.as_str());
                }
                (None, Some(v)) => {
                    id.push('=');
                    id.push_str(v);
                }
                (None, None) => {}
            }
            if c.aggregate != Aggregate::None {
                id.push(':');
                id.push_str(c.aggregate.as_str());
            }
        }
        id
    }

    /// Same mark and channels, regardless of id.
    pub fn same_design(&self, other: &VisConfiguration) -> bool {
        self.mark == other.mark && self.channels == other.channels
    }
}

impl fmt::Display for VisConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id)
    }
}

/// Ordered configuration vocabulary with training-corpus frequencies. The
/// order defines one-hot positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigVocabulary {
    configs: Vec<VisConfiguration>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyEntry {
    #[serde(flatten)]
    config: VisConfiguration,
    count: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    version: u32,
    configs: Vec<VocabularyEntry>,
}

impl ConfigVocabulary {
    pub fn new(entries: Vec<(VisConfiguration, u64)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (c, _)) in entries.iter().enumerate() {
            c.validate()?;
            if index.insert(c.id.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!(
                    "duplicate configuration `{}`",
                    c.id
                )));
            }
        }
        let (configs, counts) = entries.into_iter().unzip();
        Ok(ConfigVocabulary {
            configs,
            counts,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[VisConfiguration] {
        &self.configs
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&VisConfiguration> {
        self.position(id).map(|i| &self.configs[i])
    }

    pub fn count(&self, id: &str) -> u64 {
        self.position(id).map(|i| self.counts[i]).unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Vocabulary id of the configuration with the same design as `config`.
    pub fn resolve(&self, config: &VisConfiguration) -> Option<&str> {
        if let Some(c) = self.get(&config.id).filter(|c| c.same_design(config)) {
            return Some(&c.id);
        }
        self.configs
            .iter()
            .find(|c| c.same_design(config))
            .map(|c| c.id.as_str())
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            version: VOCABULARY_VERSION,
            configs: self
                .configs
                .iter()
                .zip(&self.counts)
                .map(|(c, n)| VocabularyEntry {
                    config: c.clone(),
                    count: *n,
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: VocabularyFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("vocabulary: {e}")))?;
        if file.version != VOCABULARY_VERSION {
            return Err(Error::VersionMismatch {
                found: file.version,
                expected: VOCABULARY_VERSION,
            });
        }
        ConfigVocabulary::new(
            file.configs
                .into_iter()
                .map(|e| (e.config, e.count))
                .collect(),
        )
    }

    /// SHA-256 of the serialized vocabulary, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

/// Deduplicate the configurations used by the corpus's visualizations,
/// ordered by descending frequency, then id.
pub fn extract_vocabulary(train: &Corpus) -> Result<ConfigVocabulary> {
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for v in train.visualizations.values().flatten() {
        *counts.entry(v.config_id.as_str()).or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    // Merge configurations whose design choices coincide under different ids.
    let mut merged: Vec<(VisConfiguration, u64)> = Vec::new();
    for (id, n) in counts {
        let config = train
            .configs
            .get(id)
            .ok_or_else(|| Error::DanglingReference(format!("unknown configuration `{id}`")))?;
        match merged.iter_mut().find(|(c, _)| c.same_design(config)) {
            Some((_, count)) => *count += n,
            None => merged.push((config.clone(), n)),
        }
    }
    merged.sort_by(|(a, na), (b, nb)| nb.cmp(na).then_with(|| a.id.cmp(&b.id)));
    ConfigVocabulary::new(merged)
}

/// An ordered subset of a dataset's attributes; order is slot-binding order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AttributeCombination {
    pub dataset_id: String,
    pub attribute_names: Vec<String>,
}

impl AttributeCombination {
    pub fn arity(&self) -> usize {
        self.attribute_names.len()
    }
}

/// A (binding, configuration) pair, optionally labelled relevant (1) or not (0).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Visualization {
    pub combo: AttributeCombination,
    pub config_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
}

impl Visualization {
    /// Canonical candidate key; embeds the dataset id so keys of different
    /// datasets never collide.
    pub fn key(&self) -> String {
        let mut key = String::with_capacity(64);
        key.push_str(&self.combo.dataset_id);
        key.push('\u{1f}');
        key.push_str(&self.config_id);
        for name in &self.combo.attribute_names {
            key.push('\u{1f}');
            key.push_str(name);
        }
        key
    }

    pub fn with_label(mut self, label: u8) -> Self {
        self.label = Some(label);
        self
    }

    /// Check that the binding is valid for the dataset and configuration.
    pub fn check_binding(&self, dataset: &Dataset, config: &VisConfiguration) -> Result<()> {
        let slots = config.slot_types();
        if slots.len() != self.combo.arity() {
            return Err(Error::DanglingReference(format!(
                "configuration `{}` has {} slots but {} attributes are bound",
                config.id,
                slots.len(),
                self.combo.arity()
            )));
        }
        let mut seen = HashSet::new();
        for (name, slot) in self.combo.attribute_names.iter().zip(&slots) {
            let attr = dataset.attribute(name).ok_or_else(|| {
                Error::DanglingReference(format!(
                    "dataset `{}` has no attribute `{name}`",
                    dataset.id
                ))
            })?;
            if !seen.insert(name) {
                return Err(Error::DanglingReference(format!(
                    "attribute `{name}` bound twice"
                )));
            }
            if attr.kind != *slot {
                return Err(Error::DanglingReference(format!(
                    "attribute `{name}` is {} but configuration `{}` expects {slot}",
                    attr.kind, config.id
                )));
            }
        }
        Ok(())
    }
}

/// Predicate restricting the configurations considered relevant.
pub trait ConfigFilter {
    fn keep(&self, config: &VisConfiguration) -> bool;
}

impl<F: Fn(&VisConfiguration) -> bool> ConfigFilter for F {
    fn keep(&self, config: &VisConfiguration) -> bool {
        self(config)
    }
}

/// All attribute subsets of size 1..=max_arity, in canonical (column) order.
pub fn enumerate_combinations(dataset: &Dataset, max_arity: usize) -> Vec<AttributeCombination> {
    let m = dataset.attributes.len();
    let mut out = Vec::new();
    for size in 1..=max_arity.min(m) {
        for_each_subset(m, size, |idx| {
            out.push(AttributeCombination {
                dataset_id: dataset.id.clone(),
                attribute_names: idx
                    .iter()
                    .map(|&i| dataset.attributes[i].name.clone())
                    .collect(),
            });
        });
    }
    out
}

fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 {
            i -= 1;
            if idx[i] != i + n - k {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
            if i == 0 {
                return;
            }
        }
    }
}

fn for_each_permutation(items: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        f(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        for_each_permutation(items, start + 1, f);
        items.swap(start, i);
    }
}

/// Generate every type-valid binding of every vocabulary configuration to
/// the dataset's attribute combinations, then apply the filter.
pub fn generate_candidates(
    dataset: &Dataset,
    vocab: &ConfigVocabulary,
    max_arity: usize,
    filter: Option<&dyn ConfigFilter>,
) -> Vec<Visualization> {
    let kinds: Vec<AttributeType> = dataset.attributes.iter().map(|a| a.kind).collect();
    let mut by_arity: BTreeMap<usize, Vec<(&VisConfiguration, Vec<AttributeType>)>> =
        BTreeMap::new();
    for c in vocab.configs() {
        let slots = c.slot_types();
        if slots.len() <= max_arity {
            by_arity.entry(slots.len()).or_default().push((c, slots));
        }
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for size in 1..=max_arity.min(kinds.len()) {
        let Some(configs) = by_arity.get(&size) else {
            continue;
        };
        for_each_subset(kinds.len(), size, |subset| {
            let mut sorted_kinds: Vec<AttributeType> = subset.iter().map(|&i| kinds[i]).collect();
            sorted_kinds.sort();
            for (config, slots) in configs {
                let mut want = slots.clone();
                want.sort();
                if want != sorted_kinds {
                    continue;
                }
                let mut perm = subset.to_vec();
                for_each_permutation(&mut perm, 0, &mut |p: &[usize]| {
                    if p.iter().zip(slots.iter()).all(|(&i, t)| kinds[i] == *t) {
                        let vis = Visualization {
                            combo: AttributeCombination {
                                dataset_id: dataset.id.clone(),
                                attribute_names: p
                                    .iter()
                                    .map(|&i| dataset.attributes[i].name.clone())
                                    .collect(),
                            },
                            config_id: config.id.clone(),
                            label: None,
                        };
                        if seen.insert(vis.key()) {
                            out.push(vis);
                        }
                    }
                });
            }
        });
    }
    if let Some(filter) = filter {
        out.retain(|v| vocab.get(&v.config_id).is_some_and(|c| filter.keep(c)));
    }
    out
}

/// Number of candidates `generate_candidates` would produce without a
/// filter, computed from attribute-type counts alone.
pub fn candidate_count_bound(dataset: &Dataset, vocab: &ConfigVocabulary, max_arity: usize) -> u64 {
    let mut available = [0u64; 4];
    for a in &dataset.attributes {
        available[a.kind.index()] += 1;
    }
    vocab
        .configs()
        .iter()
        .filter(|c| c.arity() <= max_arity)
        .map(|c| {
            let mut needed = [0u64; 4];
            for t in c.slot_types() {
                needed[t.index()] += 1;
            }
            needed
                .iter()
                .zip(&available)
                .map(|(&k, &n)| falling_factorial(n, k))
                .product::<u64>()
        })
        .sum()
}

fn falling_factorial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i))
}

/// Stable 64-bit mix of a base seed and a string, for per-dataset streams.
pub fn derive_seed(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Draw `m` negatives uniformly with replacement from the candidate space
/// minus the positives.
pub fn sample_negatives(
    dataset: &Dataset,
    positives: &[Visualization],
    vocab: &ConfigVocabulary,
    max_arity: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Visualization>> {
    let space = negative_space(dataset, positives, vocab, max_arity);
    sample_from_space(&dataset.id, &space, m, seed)
}

/// Candidate space minus the positives, labelled 0.
pub fn negative_space(
    dataset: &Dataset,
    positives: &[Visualization],
    vocab: &ConfigVocabulary,
    max_arity: usize,
) -> Vec<Visualization> {
    let positive_keys: HashSet<String> = positives.iter().map(Visualization::key).collect();
    generate_candidates(dataset, vocab, max_arity, None)
        .into_iter()
        .filter(|v| !positive_keys.contains(&v.key()))
        .map(|v| v.with_label(0))
        .collect()
}

pub(crate) fn sample_from_space(
    dataset_id: &str,
    space: &[Visualization],
    m: usize,
    seed: u64,
) -> Result<Vec<Visualization>> {
    if space.is_empty() {
        return Err(Error::NoNegativesAvailable(dataset_id.to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..m)
        .map(|_| space[rng.gen_range(0..space.len())].clone())
        .collect())
}

/// Concrete Vega-Lite chart specification for a visualization.
pub fn chart_spec(vis: &Visualization, config: &VisConfiguration) -> Value {
    let mut encoding = serde_json::Map::new();
    let mut names = vis.combo.attribute_names.iter();
    for c in &config.channels {
        let mut enc = serde_json::Map::new();
        match (&c.field_type, &c.value) {
            (Some(t), _) => {
                enc.insert(
                    "field".into(),
                    json!(names.next().cloned().unwrap_or_default()),
                );
                enc.insert("type".into(), json!(t.as_str()));
                match c.aggregate {
                    Aggregate::None => {}
                    Aggregate::Bin => {
                        enc.insert("bin".into(), json!(true));
                    }
                    other => {
                        enc.insert("aggregate".into(), json!(other.as_str()));
                    }
                }
            }
            (None, Some(v)) => {
                enc.insert("value".into(), json!(v));
            }
            (None, None) => {}
        }
        encoding.insert(c.channel.as_str().into(), Value::Object(enc));
    }
    json!({
        "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
        "mark": { "type": config.mark.vega_lite() },
        "encoding": Value::Object(encoding),
        "usermeta": { "config_id": config.id, "mark": config.mark.as_str() },
    })
}

/// Recover the configuration and attribute binding from a chart spec produced
/// by [`chart_spec`].
pub fn abstract_chart_spec(spec: &Value) -> Result<(VisConfiguration, Vec<String>)> {
    let bad = |what: &str| Error::Parse(format!("chart spec: {what}"));
    let meta = spec
        .get("usermeta")
        .ok_or_else(|| bad("missing usermeta"))?;
    let mark: Mark = serde_json::from_value(
        meta.get("mark")
            .cloned()
            .ok_or_else(|| bad("missing mark"))?,
    )
    .map_err(|e| bad(&e.to_string()))?;
    let id = meta
        .get("config_id")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let encoding = spec
        .get("encoding")
        .and_then(Value::as_object)
        .ok_or_else(|| bad("missing encoding"))?;
    let mut channels = Vec::new();
    for (name, enc) in encoding {
        let channel =
            Channel::from_name(name).ok_or_else(|| bad(&format!("unknown channel {name}")))?;
        if let Some(v) = enc.get("value") {
            let v = v
                .as_str()
                .map(str::to_string)
                .unwrap_or_else(|| v.to_string());
            channels.push((ChannelSpec::constant(channel, v), None));
            continue;
        }
        let field = enc
            .get("field")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("channel without field"))?;
        let kind: AttributeType = enc
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| bad("channel without type"))?
            .parse()?;
        let aggregate = if enc.get("bin").and_then(Value::as_bool) == Some(true) {
            Aggregate::Bin
        } else {
            match enc.get("aggregate").and_then(Value::as_str) {
                None => Aggregate::None,
                Some(a) => Aggregate::ALL
                    .into_iter()
                    .find(|x| x.as_str() == a)
                    .ok_or_else(|| bad(&format!("unknown aggregate {a}")))?,
            }
        };
        channels.push((
            ChannelSpec::field(channel, kind).with_aggregate(aggregate),
            Some(field.to_string()),
        ));
    }
    channels.sort_by_key(|(c, _)| c.channel);
    let fields = channels.iter().filter_map(|(_, f)| f.clone()).collect();
    let config = VisConfiguration::new(id, mark, channels.into_iter().map(|(c, _)| c).collect())?;
    Ok((config, fields))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tabular::{Attribute, Cell};

    fn dataset(id: &str, kinds: &[(&str, AttributeType)]) -> Dataset {
        let attrs = kinds
            .iter()
            .map(|(n, k)| Attribute {
                name: n.to_string(),
                kind: *k,
                values: vec![Cell::Number(1.0), Cell::Number(2.0)],
            })
            .collect();
        Dataset::new(id, attrs).unwrap()
    }

    fn scatter_qq() -> VisConfiguration {
        VisConfiguration::new(
            "scatter-qq",
            Mark::Scatter,
            vec![
                ChannelSpec::field(Channel::X, AttributeType::Quantitative),
                ChannelSpec::field(Channel::Y, AttributeType::Quantitative),
            ],
        )
        .unwrap()
    }

    fn vocab(configs: Vec<VisConfiguration>) -> ConfigVocabulary {
        ConfigVocabulary::new(configs.into_iter().map(|c| (c, 1)).collect()).unwrap()
    }

    fn binomial(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn three_attributes_give_seven_combinations() {
        use AttributeType::Quantitative as Q;
        let d = dataset("d", &[("a", Q), ("b", Q), ("c", Q)]);
        let combos = enumerate_combinations(&d, 3);
        assert_eq!(combos.len(), 7);
        assert_eq!(combos[0].attribute_names, vec!["a"]);
        assert_eq!(combos[6].attribute_names, vec!["a", "b", "c"]);
        assert_eq!(
            enumerate_combinations(&dataset("e", &[("a", Q)]), 3).len(),
            1
        );
    }

    #[test]
    fn five_choose_up_to_two_matches_brute_force() {
        use AttributeType::Quantitative as Q;
        let d = dataset("d", &[("a", Q), ("b", Q), ("c", Q), ("d", Q), ("e", Q)]);
        // Brute force over bitmasks.
        let brute = (1u32..32).filter(|m| m.count_ones() <= 2).count();
        assert_eq!(brute, 15);
        assert_eq!(enumerate_combinations(&d, 2).len(), brute);
        assert_eq!(binomial(5, 1) + binomial(5, 2), brute);
    }

    #[test]
    fn scatter_binds_both_orders() {
        use AttributeType::*;
        let d = dataset("d", &[("a", Quantitative), ("b", Quantitative)]);
        let v = vocab(vec![scatter_qq()]);
        let cands = generate_candidates(&d, &v, 3, None);
        let bindings: Vec<Vec<String>> = cands
            .iter()
            .map(|c| c.combo.attribute_names.clone())
            .collect();
        assert_eq!(bindings, vec![vec!["a", "b"], vec!["b", "a"]]);

        let n = dataset("n", &[("a", Nominal)]);
        assert!(generate_candidates(&n, &v, 3, None).is_empty());
    }

    #[test]
    fn mixed_slots_respect_positions() {
        use AttributeType::*;
        let bar = VisConfiguration::new(
            "",
            Mark::Bar,
            vec![
                ChannelSpec::field(Channel::Y, Nominal),
                ChannelSpec::field(Channel::X, Quantitative).with_aggregate(Aggregate::Mean),
            ],
        )
        .unwrap();
        assert_eq!(bar.id, "bar|x:quantitative:mean|y:nominal");
        let d = dataset(
            "d",
            &[("q1", Quantitative), ("n1", Nominal), ("q2", Quantitative)],
        );
        let cands = generate_candidates(&d, &vocab(vec![bar.clone()]), 3, None);
        assert_eq!(cands.len(), 2);
        for c in &cands {
            c.check_binding(&d, &bar).unwrap();
        }
        assert_eq!(candidate_count_bound(&d, &vocab(vec![bar]), 3), 2);
    }

    #[test]
    fn filter_is_applied() {
        use AttributeType::*;
        let d = dataset("d", &[("a", Quantitative), ("b", Quantitative)]);
        let v = vocab(vec![scatter_qq()]);
        let none = |_: &VisConfiguration| false;
        assert!(generate_candidates(&d, &v, 3, Some(&none)).is_empty());
    }

    #[test]
    fn no_negatives_when_all_positive() {
        use AttributeType::*;
        let d = dataset("d", &[("a", Quantitative), ("b", Quantitative)]);
        let v = vocab(vec![scatter_qq()]);
        let positives: Vec<_> = generate_candidates(&d, &v, 3, None)
            .into_iter()
            .map(|c| c.with_label(1))
            .collect();
        assert!(matches!(
            sample_negatives(&d, &positives, &v, 3, 5, 1),
            Err(Error::NoNegativesAvailable(_))
        ));
    }

    #[test]
    fn negatives_are_uniform() {
        use AttributeType::*;
        // Three attributes: 3 histogram + 6 scatter candidates. Five are
        // marked positive, leaving a 4-candidate negative space.
        let d = dataset(
            "d",
            &[
                ("a", Quantitative),
                ("b", Quantitative),
                ("c", Quantitative),
            ],
        );
        let hist = VisConfiguration::new(
            "",
            Mark::Histogram,
            vec![ChannelSpec::field(Channel::X, Quantitative).with_aggregate(Aggregate::Bin)],
        )
        .unwrap();
        let v = vocab(vec![scatter_qq(), hist]);
        let all = generate_candidates(&d, &v, 3, None);
        assert_eq!(all.len(), 9);
        let positives: Vec<_> = all[..5].iter().cloned().map(|c| c.with_label(1)).collect();
        let negatives = sample_negatives(&d, &positives, &v, 3, 1000, 42).unwrap();
        let pos_keys: HashSet<_> = positives.iter().map(Visualization::key).collect();
        let all_keys: HashSet<_> = all.iter().map(Visualization::key).collect();
        let mut freq: HashMap<String, usize> = HashMap::new();
        for n in &negatives {
            assert_eq!(n.label, Some(0));
            assert!(!pos_keys.contains(&n.key()));
            assert!(all_keys.contains(&n.key()));
            *freq.entry(n.key()).or_default() += 1;
        }
        assert_eq!(freq.len(), 4);
        // Binomial(1000, 1/4): mean 250, sigma = sqrt(1000 * 0.25 * 0.75).
        let sigma = (1000.0f64 * 0.25 * 0.75).sqrt();
        for (_, n) in freq {
            assert!((n as f64 - 250.0).abs() <= 3.0 * sigma, "{n}");
        }
        let again = sample_negatives(&d, &positives, &v, 3, 1000, 42).unwrap();
        assert_eq!(negatives, again);
    }

    #[test]
    fn vocabulary_merges_identical_designs() {
        use AttributeType::*;
        let d = dataset(
            "d",
            &[
                ("a", Quantitative),
                ("b", Quantitative),
                ("c", Quantitative),
            ],
        );
        let text = format!(
            "{}\n",
            serde_json::json!({
                "dataset": d.to_record(),
                "visualizations": [
                    {"config": {"mark": "scatter", "channels": [{"channel": "x", "type": "quantitative"}, {"channel": "y", "type": "quantitative"}]}, "attributes": ["a", "b"]},
                    {"config": {"mark": "scatter", "channels": [{"channel": "x", "type": "quantitative"}, {"channel": "y", "type": "quantitative"}]}, "attributes": ["b", "c"]}
                ]
            })
        );
        let corpus = Corpus::from_jsonl(&text).unwrap();
        let v = extract_vocabulary(&corpus).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.counts(), &[2]);
        let back = ConfigVocabulary::from_json(&v.to_json()).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn chart_spec_round_trip() {
        use AttributeType::*;
        let config = VisConfiguration::new(
            "c7",
            Mark::Histogram,
            vec![
                ChannelSpec::field(Channel::X, Quantitative).with_aggregate(Aggregate::Bin),
                ChannelSpec::field(Channel::Y, Quantitative).with_aggregate(Aggregate::Count),
                ChannelSpec::constant(Channel::Color, "red"),
            ],
        )
        .unwrap();
        let vis = Visualization {
            combo: AttributeCombination {
                dataset_id: "d".into(),
                attribute_names: vec!["hp".into(), "mpg".into()],
            },
            config_id: "c7".into(),
            label: None,
        };
        let spec = chart_spec(&vis, &config);
        assert_eq!(spec["encoding"]["x"]["field"], "hp");
        assert_eq!(spec["encoding"]["x"]["bin"], true);
        assert_eq!(spec["encoding"]["y"]["aggregate"], "count");
        assert_eq!(spec["encoding"]["color"]["value"], "red");
        let (back, fields) = abstract_chart_spec(&spec).unwrap();
        assert_eq!(back, config);
        assert_eq!(fields, vis.combo.attribute_names);
    }

    #[test]
    fn invalid_configs_rejected() {
        use AttributeType::*;
        assert!(VisConfiguration::new(
            "c",
            Mark::Bar,
            vec![ChannelSpec::constant(Channel::X, "1")]
        )
        .is_err());
        assert!(VisConfiguration::new(
            "c",
            Mark::Bar,
            vec![
                ChannelSpec::field(Channel::X, Nominal),
                ChannelSpec::field(Channel::X, Quantitative)
            ]
        )
        .is_err());
    }
}
