//! Synthetic corpora with planted design preferences.
//!
//! Every dataset mixes attributes with distinct statistical profiles:
//! continuous measures (strictly positive levels or signed changes),
//! small-integer counts, identifiers, one low-cardinality category,
//! high-cardinality labels and sometimes a date column. Positives come from
//! rules that depend only on those per-attribute profiles and on the row
//! count, so a model that sees attribute statistics can recover them. The
//! scatter rule pairs measures of the same kind, which no model that is
//! additive over slots can express.

use std::collections::{BTreeMap, HashSet};

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabular::{AttributeType, Cell, Corpus, Dataset};
use crate::vis_space::{
    Aggregate, AttributeCombination, Channel, ChannelSpec, Mark, VisConfiguration, Visualization,
};

/// Row count from which the colored scatter variant applies.
pub const HIGH_ROW_COUNT: usize = 100;
/// Largest category count the generator uses for the category attribute.
pub const MAX_CATEGORIES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlantedRule {
    /// Every ordered pair of measures of the same kind gets a scatter plot;
    /// with many rows, also one colored by the category.
    Scatter,
    /// The category against each measure as a horizontal bar of means.
    Bar,
    /// The date against each measure as a line.
    Line,
}

impl PlantedRule {
    pub const ALL: [PlantedRule; 3] = [PlantedRule::Scatter, PlantedRule::Bar, PlantedRule::Line];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_datasets: usize,
    pub rules: Vec<PlantedRule>,
    pub seed: u64,
    pub min_rows: usize,
    pub max_rows: usize,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_datasets: 200,
            rules: PlantedRule::ALL.to_vec(),
            seed: 1,
            min_rows: 40,
            max_rows: 200,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_datasets == 0 {
            return Err(Error::InvalidRuleSpec("n_datasets must be positive".into()));
        }
        if self.rules.is_empty() {
            return Err(Error::InvalidRuleSpec(
                "at least one rule is required".into(),
            ));
        }
        let unique: HashSet<_> = self.rules.iter().collect();
        if unique.len() != self.rules.len() {
            return Err(Error::InvalidRuleSpec("rules must not repeat".into()));
        }
        if self.min_rows < 8 || self.min_rows > self.max_rows {
            return Err(Error::InvalidRuleSpec(format!(
                "row range {}..={} is invalid (minimum 8 rows)",
                self.min_rows, self.max_rows
            )));
        }
        Ok(())
    }
}

pub fn scatter_config() -> VisConfiguration {
    VisConfiguration::new(
        "",
        Mark::Scatter,
        vec![
            ChannelSpec::field(Channel::X, AttributeType::Quantitative),
            ChannelSpec::field(Channel::Y, AttributeType::Quantitative),
        ],
    )
    .expect("valid configuration")
}

pub fn colored_scatter_config() -> VisConfiguration {
    VisConfiguration::new(
        "",
        Mark::Scatter,
        vec![
            ChannelSpec::field(Channel::X, AttributeType::Quantitative),
            ChannelSpec::field(Channel::Y, AttributeType::Quantitative),
            ChannelSpec::field(Channel::Color, AttributeType::Nominal),
        ],
    )
    .expect("valid configuration")
}

pub fn horizontal_bar_config() -> VisConfiguration {
    VisConfiguration::new(
        "",
        Mark::Bar,
        vec![
            ChannelSpec::field(Channel::X, AttributeType::Quantitative)
                .with_aggregate(Aggregate::Mean),
            ChannelSpec::field(Channel::Y, AttributeType::Nominal),
        ],
    )
    .expect("valid configuration")
}

pub fn line_config() -> VisConfiguration {
    VisConfiguration::new(
        "",
        Mark::Line,
        vec![
            ChannelSpec::field(Channel::X, AttributeType::Temporal),
            ChannelSpec::field(Channel::Y, AttributeType::Quantitative),
        ],
    )
    .expect("valid configuration")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Level,
    Change,
    Count,
    Identifier,
    Category,
    Label,
    Date,
}

const CATEGORY_WORDS: [&str; 8] = [
    "north", "south", "east", "west", "central", "coastal", "inland", "remote",
];

fn column(role: Role, rows: usize, rng: &mut ChaCha8Rng) -> Vec<Option<String>> {
    match role {
        Role::Level => {
            let values: Vec<f64> = if rng.gen_bool(0.5) {
                let mean = rng.gen_range(10.0..1000.0);
                let sd = mean * rng.gen_range(0.05..0.2);
                let dist = Normal::new(mean, sd).expect("positive sd");
                (0..rows)
                    .map(|_| f64::max(dist.sample(rng), 0.001))
                    .collect()
            } else {
                let dist = LogNormal::new(rng.gen_range(1.0..5.0), rng.gen_range(0.3..1.0))
                    .expect("positive sigma");
                (0..rows).map(|_| dist.sample(rng)).collect()
            };
            values
                .into_iter()
                .map(|v| Some(format!("{v:.3}")))
                .collect()
        }
        Role::Change => {
            let dist = Normal::new(0.0, rng.gen_range(1.0..50.0)).expect("positive sd");
            let mut values: Vec<f64> = (0..rows).map(|_| dist.sample(rng)).collect();
            // Guarantee a sign change.
            values[0] = -values[0].abs().max(0.5);
            values[1] = values[1].abs().max(0.5);
            values
                .into_iter()
                .map(|v| Some(format!("{v:.3}")))
                .collect()
        }
        Role::Count => {
            let (lo, hi) = if rng.gen_bool(0.5) {
                (1, 5)
            } else {
                (0, rng.gen_range(3..=9))
            };
            let missing = rng.gen_range(0.0..0.05);
            (0..rows)
                .map(|_| (!rng.gen_bool(missing)).then(|| rng.gen_range(lo..=hi).to_string()))
                .collect()
        }
        Role::Identifier => {
            let start = rng.gen_range(1..1000);
            (0..rows).map(|i| Some((start + i).to_string())).collect()
        }
        Role::Category => {
            let k = rng.gen_range(3..=MAX_CATEGORIES);
            let mut words = CATEGORY_WORDS.to_vec();
            words.shuffle(rng);
            (0..rows)
                .map(|_| Some(words[rng.gen_range(0..k)].to_string()))
                .collect()
        }
        Role::Label => (0..rows)
            .map(|_| Some(format!("item-{:05}", rng.gen_range(0..100_000))))
            .collect(),
        Role::Date => {
            let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date")
                + Duration::days(rng.gen_range(0..7000));
            let step = if rng.gen_bool(0.5) { 1 } else { 7 };
            (0..rows)
                .map(|i| {
                    Some(
                        (start + Duration::days(step * i as i64))
                            .format("%Y-%m-%d")
                            .to_string(),
                    )
                })
                .collect()
        }
    }
}

fn vis(dataset_id: &str, config: &VisConfiguration, names: &[&str]) -> Visualization {
    Visualization {
        combo: AttributeCombination {
            dataset_id: dataset_id.to_string(),
            attribute_names: names.iter().map(|s| s.to_string()).collect(),
        },
        config_id: config.id.clone(),
        label: Some(1),
    }
}

/// Generate a corpus whose positives follow the planted rules.
pub fn generate_synthetic_corpus(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let rules: HashSet<PlantedRule> = spec.rules.iter().copied().collect();
    let mut configs = BTreeMap::new();
    let scatter = scatter_config();
    let colored = colored_scatter_config();
    let bar = horizontal_bar_config();
    let line = line_config();
    if rules.contains(&PlantedRule::Scatter) {
        configs.insert(scatter.id.clone(), scatter.clone());
        configs.insert(colored.id.clone(), colored.clone());
    }
    if rules.contains(&PlantedRule::Bar) {
        configs.insert(bar.id.clone(), bar.clone());
    }
    if rules.contains(&PlantedRule::Line) {
        configs.insert(line.id.clone(), line.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut datasets = Vec::with_capacity(spec.n_datasets);
    let mut visualizations = BTreeMap::new();
    let width = spec.n_datasets.to_string().len().max(4);
    for i in 0..spec.n_datasets {
        let id = format!("syn-{i:0width$}");
        let rows = rng.gen_range(spec.min_rows..=spec.max_rows);
        let mut roles = vec![Role::Category];
        for _ in 0..3 {
            roles.push(if rng.gen_bool(0.5) {
                Role::Level
            } else {
                Role::Change
            });
        }
        roles.extend(std::iter::repeat_n(Role::Count, rng.gen_range(1..=3)));
        roles.extend(std::iter::repeat_n(Role::Label, rng.gen_range(1..=3)));
        if rng.gen_bool(0.5) {
            roles.push(Role::Identifier);
        }
        let only_line = rules.len() == 1 && rules.contains(&PlantedRule::Line);
        if only_line || rng.gen_bool(0.6) {
            roles.push(Role::Date);
        }
        roles.shuffle(&mut rng);

        let mut columns = Vec::with_capacity(roles.len());
        for (j, role) in roles.iter().enumerate() {
            columns.push((format!("col{j:02}"), column(*role, rows, &mut rng)));
        }
        let dataset = Dataset::from_raw_columns(id.clone(), columns, None)?;

        let names_with = |r: Role| -> Vec<&str> {
            roles
                .iter()
                .zip(&dataset.attributes)
                .filter(|(role, _)| **role == r)
                .map(|(_, a)| a.name.as_str())
                .collect()
        };
        let levels = names_with(Role::Level);
        let changes = names_with(Role::Change);
        let measures: Vec<&str> = roles
            .iter()
            .zip(&dataset.attributes)
            .filter(|(role, _)| matches!(role, Role::Level | Role::Change))
            .map(|(_, a)| a.name.as_str())
            .collect();
        let category = names_with(Role::Category)[0];
        let dates = names_with(Role::Date);
        let mut positives = Vec::new();
        if rules.contains(&PlantedRule::Scatter) {
            for group in [&levels, &changes] {
                for a in group.iter() {
                    for b in group.iter() {
                        if a == b {
                            continue;
                        }
                        positives.push(vis(&id, &scatter, &[a, b]));
                        if rows >= HIGH_ROW_COUNT {
                            positives.push(vis(&id, &colored, &[a, b, category]));
                        }
                    }
                }
            }
        }
        if rules.contains(&PlantedRule::Bar) {
            for m in &measures {
                positives.push(vis(&id, &bar, &[m, category]));
            }
        }
        if rules.contains(&PlantedRule::Line) {
            for d in &dates {
                for m in &measures {
                    positives.push(vis(&id, &line, &[d, m]));
                }
            }
        }
        visualizations.insert(id.clone(), positives);
        datasets.push(dataset);
    }
    Corpus::new(datasets, visualizations, configs)
}

/// Scores 1 for candidates the planted rules would emit, judged from the
/// data alone, and 0 otherwise.
pub struct RuleOracle {
    pub rules: Vec<PlantedRule>,
}

fn is_measure(dataset: &Dataset, name: &str) -> bool {
    let Some(attr) = dataset.attribute(name) else {
        return false;
    };
    attr.kind == AttributeType::Quantitative
        && attr
            .values
            .iter()
            .any(|c| matches!(c, Cell::Number(v) if v.fract() != 0.0))
}

fn has_negative(dataset: &Dataset, name: &str) -> bool {
    dataset.attribute(name).is_some_and(|a| {
        a.values
            .iter()
            .any(|c| matches!(c, Cell::Number(v) if *v < 0.0))
    })
}

fn same_kind_measures(dataset: &Dataset, a: &str, b: &str) -> bool {
    is_measure(dataset, a)
        && is_measure(dataset, b)
        && has_negative(dataset, a) == has_negative(dataset, b)
}

fn is_category(dataset: &Dataset, name: &str) -> bool {
    let Some(attr) = dataset.attribute(name) else {
        return false;
    };
    let distinct: HashSet<String> = attr
        .values
        .iter()
        .filter_map(|c| match c {
            Cell::Text(s) => Some(s.clone()),
            _ => None,
        })
        .collect();
    attr.kind == AttributeType::Nominal && distinct.len() <= MAX_CATEGORIES
}

impl RuleOracle {
    pub fn matches(&self, dataset: &Dataset, v: &Visualization) -> bool {
        let names: Vec<&str> = v.combo.attribute_names.iter().map(String::as_str).collect();
        let has = |r: PlantedRule| self.rules.contains(&r);
        if v.config_id == scatter_config().id {
            has(PlantedRule::Scatter) && same_kind_measures(dataset, names[0], names[1])
        } else if v.config_id == colored_scatter_config().id {
            has(PlantedRule::Scatter)
                && dataset.row_count() >= HIGH_ROW_COUNT
                && same_kind_measures(dataset, names[0], names[1])
                && is_category(dataset, names[2])
        } else if v.config_id == horizontal_bar_config().id {
            has(PlantedRule::Bar) && is_measure(dataset, names[0]) && is_category(dataset, names[1])
        } else if v.config_id == line_config().id {
            has(PlantedRule::Line) && is_measure(dataset, names[1])
        } else {
            false
        }
    }
}

impl super::Scorer for RuleOracle {
    fn name(&self) -> String {
        "rule_oracle".into()
    }

    fn score_pool(&self, dataset: &Dataset, pool: &[Visualization]) -> Result<Vec<f64>> {
        Ok(pool
            .iter()
            .map(|v| if self.matches(dataset, v) { 1.0 } else { 0.0 })
            .collect())
    }
}
