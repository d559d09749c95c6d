//! Fixed-width meta-feature vectors for attributes of any type and length.
//!
//! An attribute is first mapped to numbers (quantitative values as-is,
//! nominal values to their value frequencies, ordinal and temporal values to
//! dense rank codes). Each of several representations of that vector is
//! then partitioned, and every statistic in [`MetaFunction`] is evaluated on
//! every part. A handful of column-level counts computed on the raw cells
//! complete the vector.

mod normalizer;
pub mod stats;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::tabular::{Attribute, AttributeType, Cell};

pub use normalizer::Normalizer;
pub use stats::MetaFunction;

pub const SCHEMA_VERSION: u32 = 1;
/// Bins of the probability-distribution representation.
pub const DIST_BINS: usize = 10;
/// Bins of the log-binned representation.
pub const LOG_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    /// The numeric values themselves.
    Raw,
    /// Equal-width histogram normalized to sum to 1.
    ProbabilityDist,
    /// Values scaled to [0, 1] by (x - min) / (max - min).
    ScaledUnit,
    /// Equal-width histogram counts of log1p(|x|).
    LogBinned,
}

impl Representation {
    pub const ALL: [Representation; 4] = [
        Representation::Raw,
        Representation::ProbabilityDist,
        Representation::ScaledUnit,
        Representation::LogBinned,
    ];

    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        match self {
            Representation::Raw => x.to_vec(),
            Representation::ProbabilityDist => {
                let counts = histogram(x, DIST_BINS);
                let total: f64 = counts.iter().sum();
                if total > 0.0 {
                    counts.iter().map(|c| c / total).collect()
                } else {
                    counts
                }
            }
            Representation::ScaledUnit => {
                let (lo, hi) = min_max(x);
                let width = hi - lo;
                if width > 0.0 && width.is_finite() {
                    x.iter().map(|v| (v - lo) / width).collect()
                } else {
                    vec![0.0; x.len()]
                }
            }
            Representation::LogBinned => {
                let logs: Vec<f64> = x.iter().map(|v| v.abs().ln_1p()).collect();
                histogram(&logs, LOG_BINS)
            }
        }
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    x.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        })
}

fn histogram(x: &[f64], bins: usize) -> Vec<f64> {
    let mut counts = vec![0.0; bins];
    if x.is_empty() {
        return counts;
    }
    let (lo, hi) = min_max(x);
    for &v in x {
        counts[stats::bin_index(v, lo, hi, bins)] += 1.0;
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum Partitioner {
    Whole,
    EqualWidthBins(usize),
    Quartiles,
}

impl Partitioner {
    pub fn parts(self) -> usize {
        match self {
            Partitioner::Whole => 1,
            Partitioner::EqualWidthBins(k) => k,
            Partitioner::Quartiles => 4,
        }
    }

    /// Split `x` into disjoint parts covering it; each part keeps the input
    /// order of its elements.
    pub fn split(self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            Partitioner::Whole => vec![x.to_vec()],
            Partitioner::EqualWidthBins(k) => stats::equal_width_bins(x, k),
            Partitioner::Quartiles => {
                let mut sorted = x.to_vec();
                sorted.sort_by(f64::total_cmp);
                let cuts = [0.25, 0.5, 0.75].map(|p| stats::quantile_sorted(&sorted, p));
                let mut parts = vec![Vec::new(); 4];
                for &v in x {
                    let idx = cuts.iter().take_while(|&&c| v > c).count();
                    parts[idx].push(v);
                }
                parts
            }
        }
    }
}

/// Column-level counts computed on the raw cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnFunction {
    NumInstances,
    LogNumInstances,
    NumMissing,
    FracMissing,
    NumNonzero,
    NumUnique,
    Density,
}

impl ColumnFunction {
    pub const ALL: [ColumnFunction; 7] = [
        ColumnFunction::NumInstances,
        ColumnFunction::LogNumInstances,
        ColumnFunction::NumMissing,
        ColumnFunction::FracMissing,
        ColumnFunction::NumNonzero,
        ColumnFunction::NumUnique,
        ColumnFunction::Density,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FeatureDescriptor {
    Column {
        function: ColumnFunction,
    },
    Statistic {
        representation: Representation,
        partition: Partitioner,
        part: usize,
        function: MetaFunction,
    },
}

/// Ordered layout of the meta-feature vector. Training and inference must
/// use the same schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaFeatureSchema {
    pub version: u32,
    /// Realized vector length.
    pub k: usize,
    pub features: Vec<FeatureDescriptor>,
    /// Free-form notes on the chosen statistic variants.
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

impl Default for MetaFeatureSchema {
    fn default() -> Self {
        let mut features: Vec<FeatureDescriptor> = ColumnFunction::ALL
            .iter()
            .map(|&function| FeatureDescriptor::Column { function })
            .collect();
        for representation in Representation::ALL {
            for partition in [Partitioner::Whole, Partitioner::Quartiles] {
                for part in 0..partition.parts() {
                    for &function in MetaFunction::ALL {
                        features.push(FeatureDescriptor::Statistic {
                            representation,
                            partition,
                            part,
                            function,
                        });
                    }
                }
            }
        }
        let notes = [
            ("quantiles", "linear interpolation between order statistics"),
            (
                "variance",
                "population (divide by n); std is its square root",
            ),
            ("skewness", "biased Fisher-Pearson m3 / m2^1.5"),
            ("kurtosis", "Pearson (non-excess) m4 / m2^2"),
            ("moments", "central moments 6..10, population"),
            ("kstat", "unbiased k-statistics k3, k4"),
            ("entropy", "base 2, vector magnitudes taken as weights"),
            ("norm_entropy", "entropy / log2(length)"),
            ("gini", "Gini coefficient of magnitudes"),
            ("centroid_max_gap", "means of 5 equal-width bins"),
            ("frac_missing", "missing / instances"),
            ("undefined", "statistics undefined for the input are 0"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        MetaFeatureSchema {
            version: SCHEMA_VERSION,
            k: features.len(),
            features,
            notes,
        }
    }
}

impl MetaFeatureSchema {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() || self.k != self.features.len() {
            return Err(Error::SchemaMismatch {
                expected: self.k,
                actual: self.features.len(),
            });
        }
        for f in &self.features {
            if let FeatureDescriptor::Statistic {
                partition, part, ..
            } = f
            {
                if let Partitioner::EqualWidthBins(k) = partition {
                    if *k < 2 {
                        return Err(Error::Parse("equal-width partitions need k >= 2".into()));
                    }
                }
                if *part >= partition.parts() {
                    return Err(Error::Parse(format!(
                        "part {part} out of range for {partition:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let schema: MetaFeatureSchema =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("schema: {e}")))?;
        if schema.version != SCHEMA_VERSION {
            return Err(Error::VersionMismatch {
                found: schema.version,
                expected: SCHEMA_VERSION,
            });
        }
        schema.validate()?;
        Ok(schema)
    }

    /// Short content fingerprint identifying the layout.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(&self.features).expect("serializable");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaFeatureVector {
    pub values: Vec<f64>,
    /// Fingerprint of the schema that produced the vector.
    pub schema: String,
}

impl MetaFeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Numeric view of an attribute's non-missing cells, in row order.
pub fn numeric_encoding(attr: &Attribute) -> Vec<f64> {
    let present: Vec<&Cell> = attr.values.iter().filter(|c| !c.is_missing()).collect();
    match attr.kind {
        AttributeType::Quantitative => present
            .iter()
            .map(|c| match c {
                Cell::Number(v) => *v,
                Cell::Text(s) => crate::tabular::parse_number(s).unwrap_or(0.0),
                Cell::Missing => unreachable!(),
            })
            .collect(),
        AttributeType::Nominal => {
            let keys: Vec<String> = present.iter().map(|c| cell_key(c)).collect();
            let mut freq: HashMap<&str, usize> = HashMap::new();
            for k in &keys {
                *freq.entry(k.as_str()).or_default() += 1;
            }
            keys.iter().map(|k| freq[k.as_str()] as f64).collect()
        }
        AttributeType::Ordinal | AttributeType::Temporal => {
            let numeric: Option<Vec<f64>> = present
                .iter()
                .map(|c| match c {
                    Cell::Number(v) => Some(*v),
                    Cell::Text(s) => crate::tabular::parse_number(s),
                    Cell::Missing => None,
                })
                .collect();
            match numeric {
                Some(values) => dense_ranks(&values, f64::total_cmp),
                // Text ordinals rank lexicographically.
                None => {
                    let keys: Vec<String> = present.iter().map(|c| cell_key(c)).collect();
                    let mut distinct: Vec<&str> = keys.iter().map(String::as_str).collect();
                    distinct.sort_unstable();
                    distinct.dedup();
                    keys.iter()
                        .map(|k| (distinct.binary_search(&k.as_str()).unwrap_or(0) + 1) as f64)
                        .collect()
                }
            }
        }
    }
}

fn cell_key(c: &Cell) -> String {
    match c {
        Cell::Number(v) => format!("{v}"),
        Cell::Text(s) => s.clone(),
        Cell::Missing => String::new(),
    }
}

fn dense_ranks(values: &[f64], cmp: impl Fn(&f64, &f64) -> std::cmp::Ordering) -> Vec<f64> {
    let mut distinct = values.to_vec();
    distinct.sort_by(&cmp);
    distinct.dedup();
    values
        .iter()
        .map(|v| (distinct.binary_search_by(|p| cmp(p, v)).unwrap_or(0) + 1) as f64)
        .collect()
}

fn column_function(f: ColumnFunction, attr: &Attribute, encoded: &[f64]) -> f64 {
    let n = attr.row_count() as f64;
    let missing = attr.missing_count() as f64;
    let nnz = encoded.iter().filter(|v| **v != 0.0).count() as f64;
    match f {
        ColumnFunction::NumInstances => n,
        ColumnFunction::LogNumInstances => n.max(1.0).ln(),
        ColumnFunction::NumMissing => missing,
        ColumnFunction::FracMissing if n > 0.0 => missing / n,
        ColumnFunction::FracMissing => 0.0,
        ColumnFunction::NumNonzero => nnz,
        ColumnFunction::NumUnique => {
            let mut keys: Vec<String> = attr
                .values
                .iter()
                .filter(|c| !c.is_missing())
                .map(cell_key)
                .collect();
            keys.sort_unstable();
            keys.dedup();
            keys.len() as f64
        }
        ColumnFunction::Density if n > 0.0 => nnz / n,
        ColumnFunction::Density => 0.0,
    }
}

/// Compute the meta-feature vector of an attribute under `schema`.
pub fn compute_metafeatures(
    attr: &Attribute,
    schema: &MetaFeatureSchema,
) -> Result<MetaFeatureVector> {
    let encoded = numeric_encoding(attr);
    if encoded.is_empty() {
        return Err(Error::EmptyAttribute(attr.name.clone()));
    }
    let mut representations: HashMap<Representation, Vec<f64>> = HashMap::new();
    let mut summaries: HashMap<(Representation, Partitioner), Vec<[f64; stats::N_FUNCTIONS]>> =
        HashMap::new();
    let mut values = Vec::with_capacity(schema.len());
    for feature in &schema.features {
        let v = match *feature {
            FeatureDescriptor::Column { function } => column_function(function, attr, &encoded),
            FeatureDescriptor::Statistic {
                representation,
                partition,
                part,
                function,
            } => {
                let parts = summaries
                    .entry((representation, partition))
                    .or_insert_with(|| {
                        let rep = representations
                            .entry(representation)
                            .or_insert_with(|| representation.apply(&encoded));
                        partition
                            .split(rep)
                            .iter()
                            .map(|p| stats::summarize(p))
                            .collect()
                    });
                parts.get(part).map(|s| s[function as usize]).unwrap_or(0.0)
            }
        };
        values.push(if v.is_finite() { v } else { 0.0 });
    }
    Ok(MetaFeatureVector {
        values,
        schema: schema.fingerprint(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantitative(values: &[f64]) -> Attribute {
        Attribute {
            name: "x".into(),
            kind: AttributeType::Quantitative,
            values: values.iter().map(|v| Cell::Number(*v)).collect(),
        }
    }

    fn position(schema: &MetaFeatureSchema, target: FeatureDescriptor) -> usize {
        schema.features.iter().position(|f| *f == target).unwrap()
    }

    #[test]
    fn default_schema_layout() {
        let schema = MetaFeatureSchema::default();
        assert_eq!(schema.k, 7 + 4 * 5 * MetaFunction::ALL.len());
        schema.validate().unwrap();
        let back = MetaFeatureSchema::from_json(&schema.to_json()).unwrap();
        assert_eq!(back, schema);
    }

    #[test]
    fn probability_dist_sums_to_one() {
        let p = Representation::ProbabilityDist.apply(&[1.0, 5.0, 2.0, 9.0, 9.0]);
        assert_eq!(p.len(), DIST_BINS);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn quartile_parts_cover_input() {
        let x = [5.0, 1.0, 3.0, 3.0, 8.0, 2.0, 9.0];
        let parts = Partitioner::Quartiles.split(&x);
        let mut all: Vec<f64> = parts.concat();
        all.sort_by(f64::total_cmp);
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        assert_eq!(all, sorted);
    }

    #[test]
    fn fixed_arity_for_any_attribute() {
        let schema = MetaFeatureSchema::default();
        let text = Attribute {
            name: "n".into(),
            kind: AttributeType::Nominal,
            values: vec![
                Cell::Text("a".into()),
                Cell::Missing,
                Cell::Text("b".into()),
            ],
        };
        for attr in [quantitative(&[1.0]), quantitative(&[2.0; 40]), text] {
            let v = compute_metafeatures(&attr, &schema).unwrap();
            assert_eq!(v.len(), schema.k);
            assert!(v.values.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn all_missing_is_an_error() {
        let attr = Attribute {
            name: "m".into(),
            kind: AttributeType::Quantitative,
            values: vec![Cell::Missing, Cell::Missing],
        };
        assert!(matches!(
            compute_metafeatures(&attr, &MetaFeatureSchema::default()),
            Err(Error::EmptyAttribute(_))
        ));
    }

    #[test]
    fn whole_raw_features_match_direct_statistics() {
        let schema = MetaFeatureSchema::default();
        let v = compute_metafeatures(&quantitative(&[1.0, 2.0, 3.0, 4.0]), &schema).unwrap();
        let range = position(
            &schema,
            FeatureDescriptor::Statistic {
                representation: Representation::Raw,
                partition: Partitioner::Whole,
                part: 0,
                function: MetaFunction::Range,
            },
        );
        assert_eq!(v.values[range], 3.0);
        let instances = position(
            &schema,
            FeatureDescriptor::Column {
                function: ColumnFunction::NumInstances,
            },
        );
        assert_eq!(v.values[instances], 4.0);
    }

    #[test]
    fn nominal_values_encode_as_frequencies() {
        let attr = Attribute {
            name: "n".into(),
            kind: AttributeType::Nominal,
            values: ["a", "b", "a", "c", "a"]
                .iter()
                .map(|s| Cell::Text(s.to_string()))
                .collect(),
        };
        assert_eq!(numeric_encoding(&attr), vec![3.0, 1.0, 3.0, 1.0, 3.0]);
    }

    #[test]
    fn temporal_values_encode_as_ranks() {
        let attr = Attribute {
            name: "t".into(),
            kind: AttributeType::Temporal,
            values: [300.0, 100.0, 200.0, 100.0]
                .iter()
                .map(|v| Cell::Number(*v))
                .collect(),
        };
        assert_eq!(numeric_encoding(&attr), vec![3.0, 1.0, 2.0, 1.0]);
    }
}
