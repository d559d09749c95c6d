//! Tabular data model: typed attributes, datasets, and the training corpus.
//!
//! Datasets come from delimited text (CSV/TSV with a header row) or from one
//! record of the newline-delimited corpus format:
//!
//! ```text
//! {"configs": [ ...configuration definitions... ]}
//! {"dataset": {"id": "cars", "columns": [{"name": "mpg", "type": "quantitative", "values": [18, 15, null]}]},
//!  "visualizations": [{"config_id": "scatter-qq", "attributes": ["hp", "mpg"]}]}
//! ```
//!
//! The optional `configs` record defines the configurations referenced by
//! `config_id`. A visualization may instead carry its full design choices
//! inline under `config`, in which case its configuration id is derived from
//! the design choices themselves.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vis_space::{AttributeCombination, VisConfiguration, Visualization};

/// Datasets longer than this are truncated on load.
pub const MAX_ROWS: usize = 100_000;

const MISSING_MARKERS: &[&str] = &[
    "", "NA", "N/A", "na", "n/a", "null", "NULL", "None", "NaN", "nan",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeType {
    Quantitative,
    Nominal,
    Ordinal,
    Temporal,
}

impl AttributeType {
    pub const ALL: [AttributeType; 4] = [
        AttributeType::Quantitative,
        AttributeType::Nominal,
        AttributeType::Ordinal,
        AttributeType::Temporal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttributeType::Quantitative => "quantitative",
            AttributeType::Nominal => "nominal",
            AttributeType::Ordinal => "ordinal",
            AttributeType::Temporal => "temporal",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for AttributeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AttributeType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quantitative" | "q" => Ok(AttributeType::Quantitative),
            "nominal" | "n" => Ok(AttributeType::Nominal),
            "ordinal" | "o" => Ok(AttributeType::Ordinal),
            "temporal" | "t" => Ok(AttributeType::Temporal),
            other => Err(Error::Parse(format!("unknown attribute type `{other}`"))),
        }
    }
}

/// One cell of an attribute. Temporal values are stored as seconds since the
/// Unix epoch.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Number(f64),
    Text(String),
}

impl Cell {
    pub fn is_missing(&self) -> bool {
        matches!(self, Cell::Missing)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub kind: AttributeType,
    pub values: Vec<Cell>,
}

impl Attribute {
    pub fn row_count(&self) -> usize {
        self.values.len()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|c| c.is_missing()).count()
    }

    /// Build an attribute of the given type from raw text cells.
    pub fn from_raw(name: &str, kind: AttributeType, raw: &[Option<String>]) -> Result<Self> {
        let values = raw
            .iter()
            .map(|cell| match cell {
                None => Ok(Cell::Missing),
                Some(s) => convert_cell(name, kind, s),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Attribute {
            name: name.to_string(),
            kind,
            values,
        })
    }

    fn cell_to_string(&self, cell: &Cell) -> Option<String> {
        match cell {
            Cell::Missing => None,
            Cell::Number(v) if self.kind == AttributeType::Temporal => Some(format_timestamp(*v)),
            Cell::Number(v) => Some(format_number(*v)),
            Cell::Text(s) => Some(s.clone()),
        }
    }
}

fn convert_cell(name: &str, kind: AttributeType, s: &str) -> Result<Cell> {
    match kind {
        AttributeType::Quantitative => parse_number(s).map(Cell::Number).ok_or_else(|| {
            Error::Parse(format!("attribute `{name}`: `{s}` is not a finite number"))
        }),
        AttributeType::Temporal => parse_timestamp(s)
            .map(Cell::Number)
            .ok_or_else(|| Error::Parse(format!("attribute `{name}`: `{s}` is not a timestamp"))),
        AttributeType::Nominal | AttributeType::Ordinal => Ok(Cell::Text(s.to_string())),
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

fn format_timestamp(secs: f64) -> String {
    match DateTime::from_timestamp(secs as i64, 0) {
        Some(dt) => dt.naive_utc().format("%Y-%m-%dT%H:%M:%S").to_string(),
        None => format_number(secs),
    }
}

pub fn parse_number(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse a timestamp in one of the accepted date/time layouts, returning
/// seconds since the Unix epoch.
pub fn parse_timestamp(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp() as f64);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp() as f64);
        }
    }
    for fmt in ["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y", "%d-%b-%Y"] {
        if let Ok(d) = NaiveDate::parse_from_str(s, fmt) {
            return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp() as f64);
        }
    }
    None
}

fn is_missing_marker(s: &str) -> bool {
    MISSING_MARKERS.contains(&s.trim())
}

/// Infer the type of a column from its non-missing raw values.
///
/// All-numeric columns are quantitative, all-date columns temporal, and
/// everything else nominal. Ordinal is only assigned through overrides.
pub fn infer_type(raw: &[Option<String>]) -> AttributeType {
    let present: Vec<&str> = raw.iter().flatten().map(String::as_str).collect();
    if present.is_empty() {
        return AttributeType::Nominal;
    }
    if present.iter().all(|s| parse_number(s).is_some()) {
        AttributeType::Quantitative
    } else if present.iter().all(|s| parse_timestamp(s).is_some()) {
        AttributeType::Temporal
    } else {
        AttributeType::Nominal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub id: String,
    pub attributes: Vec<Attribute>,
}

impl Dataset {
    /// Validate the dataset invariants and build it.
    pub fn new(id: impl Into<String>, attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::EmptyDataset("columns"));
        }
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if !seen.insert(a.name.as_str()) {
                return Err(Error::DuplicateAttribute(a.name.clone()));
            }
        }
        let rows = attributes[0].row_count();
        if let Some(bad) = attributes.iter().find(|a| a.row_count() != rows) {
            return Err(Error::Parse(format!(
                "attribute `{}` has {} rows, expected {rows}",
                bad.name,
                bad.row_count()
            )));
        }
        Ok(Dataset {
            id: id.into(),
            attributes,
        })
    }

    /// Build a dataset from named raw columns, inferring types unless overridden.
    pub fn from_raw_columns(
        id: impl Into<String>,
        columns: Vec<(String, Vec<Option<String>>)>,
        type_overrides: Option<&HashMap<String, AttributeType>>,
    ) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::EmptyDataset("columns"));
        }
        if columns[0].1.is_empty() {
            return Err(Error::EmptyDataset("rows"));
        }
        let mut attributes = Vec::with_capacity(columns.len());
        for (name, mut raw) in columns {
            if raw.len() > MAX_ROWS {
                log::warn!(
                    "attribute `{name}`: truncating {} rows to {MAX_ROWS}",
                    raw.len()
                );
                raw.truncate(MAX_ROWS);
            }
            let kind = type_overrides
                .and_then(|o| o.get(&name).copied())
                .unwrap_or_else(|| infer_type(&raw));
            attributes.push(Attribute::from_raw(&name, kind, &raw)?);
        }
        Dataset::new(id, attributes)
    }

    pub fn row_count(&self) -> usize {
        self.attributes[0].row_count()
    }

    pub fn attribute(&self, name: &str) -> Option<&Attribute> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// Parse delimited text with a header row.
    pub fn from_delimited(
        id: impl Into<String>,
        text: &str,
        delimiter: u8,
        type_overrides: Option<&HashMap<String, AttributeType>>,
    ) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(delimiter)
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(Error::EmptyDataset("columns"));
        }
        let mut columns: Vec<(String, Vec<Option<String>>)> =
            headers.into_iter().map(|h| (h, Vec::new())).collect();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            if record.len() != columns.len() {
                return Err(Error::Parse(format!(
                    "row has {} fields, header has {}",
                    record.len(),
                    columns.len()
                )));
            }
            for (field, (_, col)) in record.iter().zip(columns.iter_mut()) {
                col.push((!is_missing_marker(field)).then(|| field.trim().to_string()));
            }
        }
        Dataset::from_raw_columns(id, columns, type_overrides)
    }

    /// Serialize as CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer
            .write_record(self.attributes.iter().map(|a| a.name.as_str()))
            .expect("in-memory write");
        for row in 0..self.row_count() {
            let fields: Vec<String> = self
                .attributes
                .iter()
                .map(|a| a.cell_to_string(&a.values[row]).unwrap_or_default())
                .collect();
            writer.write_record(&fields).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }

    pub fn to_record(&self) -> DatasetRecord {
        DatasetRecord {
            id: self.id.clone(),
            columns: self
                .attributes
                .iter()
                .map(|a| ColumnRecord {
                    name: a.name.clone(),
                    kind: Some(a.kind),
                    values: a
                        .values
                        .iter()
                        .map(|c| match c {
                            Cell::Missing => serde_json::Value::Null,
                            Cell::Number(v) if a.kind == AttributeType::Temporal => {
                                serde_json::Value::String(format_timestamp(*v))
                            }
                            Cell::Number(v) => serde_json::Number::from_f64(*v)
                                .map(serde_json::Value::Number)
                                .unwrap_or(serde_json::Value::Null),
                            Cell::Text(s) => serde_json::Value::String(s.clone()),
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_record(record: DatasetRecord) -> Result<Self> {
        if record.columns.is_empty() {
            return Err(Error::EmptyDataset("columns"));
        }
        let mut overrides = HashMap::new();
        let mut columns = Vec::with_capacity(record.columns.len());
        for col in record.columns {
            if let Some(kind) = col.kind {
                overrides.insert(col.name.clone(), kind);
            }
            let raw = col
                .values
                .iter()
                .map(|v| match v {
                    serde_json::Value::Null => Ok(None),
                    serde_json::Value::String(s) if is_missing_marker(s) => Ok(None),
                    serde_json::Value::String(s) => Ok(Some(s.clone())),
                    serde_json::Value::Number(n) => Ok(Some(n.to_string())),
                    serde_json::Value::Bool(b) => Ok(Some(b.to_string())),
                    other => Err(Error::Parse(format!(
                        "column `{}`: unsupported cell value {other}",
                        col.name
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            columns.push((col.name, raw));
        }
        Dataset::from_raw_columns(record.id, columns, Some(&overrides))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnRecord {
    pub name: String,
    #[serde(rename = "type", default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<AttributeType>,
    pub values: Vec<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRecord {
    #[serde(default)]
    pub id: String,
    pub columns: Vec<ColumnRecord>,
}

/// Load a dataset from a CSV/TSV file, or from a file holding a single corpus
/// record (or a bare dataset JSON object).
pub fn load_dataset(
    path: impl AsRef<Path>,
    type_overrides: Option<&HashMap<String, AttributeType>>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    parse_dataset(
        &stem,
        &text,
        path.extension().and_then(|e| e.to_str()),
        type_overrides,
    )
}

/// Parse dataset text; `hint` is a file extension used to pick the delimiter.
pub fn parse_dataset(
    default_id: &str,
    text: &str,
    hint: Option<&str>,
    type_overrides: Option<&HashMap<String, AttributeType>>,
) -> Result<Dataset> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(Error::Parse("empty input".into()));
    }
    if trimmed.starts_with('{') {
        let value: serde_json::Value =
            serde_json::from_str(trimmed).map_err(|e| Error::Parse(e.to_string()))?;
        let record_value = value.get("dataset").cloned().unwrap_or(value);
        let mut record: DatasetRecord =
            serde_json::from_value(record_value).map_err(|e| Error::Parse(e.to_string()))?;
        if record.id.is_empty() {
            record.id = default_id.to_string();
        }
        if let Some(overrides) = type_overrides {
            for col in &mut record.columns {
                if let Some(kind) = overrides.get(&col.name) {
                    col.kind = Some(*kind);
                }
            }
        }
        return Dataset::from_record(record);
    }
    let delimiter = match hint {
        Some("tsv") | Some("tab") => b'\t',
        Some(_) => b',',
        None if text
            .lines()
            .next()
            .is_some_and(|l| l.contains('\t') && !l.contains(',')) =>
        {
            b'\t'
        }
        None => b',',
    };
    Dataset::from_delimited(default_id, text, delimiter, type_overrides)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VisRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config: Option<VisConfiguration>,
    attributes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CorpusRecord {
    dataset: DatasetRecord,
    #[serde(default)]
    visualizations: Vec<VisRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigsRecord {
    configs: Vec<VisConfiguration>,
}

/// Datasets paired with their user-created (positive) visualizations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub datasets: Vec<Dataset>,
    pub visualizations: BTreeMap<String, Vec<Visualization>>,
    /// Every configuration definition known to the corpus, by id.
    pub configs: BTreeMap<String, VisConfiguration>,
}

/// Counts in the layout of a corpus statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub datasets: usize,
    pub configs: usize,
    pub attributes: usize,
    pub visualizations: usize,
    pub attributes_per_dataset: f64,
    pub configs_per_dataset: f64,
}

impl Corpus {
    /// Build a corpus and check every cross-reference.
    pub fn new(
        datasets: Vec<Dataset>,
        visualizations: BTreeMap<String, Vec<Visualization>>,
        configs: BTreeMap<String, VisConfiguration>,
    ) -> Result<Self> {
        let corpus = Corpus {
            datasets,
            visualizations,
            configs,
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn dataset(&self, id: &str) -> Option<&Dataset> {
        self.datasets.iter().find(|d| d.id == id)
    }

    pub fn positives(&self, dataset_id: &str) -> &[Visualization] {
        self.visualizations
            .get(dataset_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn visualization_count(&self) -> usize {
        self.visualizations.values().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for d in &self.datasets {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::Parse(format!("duplicate dataset id `{}`", d.id)));
            }
        }
        for (id, config) in &self.configs {
            if id != &config.id {
                return Err(Error::Parse(format!(
                    "configuration keyed `{id}` has id `{}`",
                    config.id
                )));
            }
            config.validate()?;
        }
        for (dataset_id, vis) in &self.visualizations {
            let dataset = self.dataset(dataset_id).ok_or_else(|| {
                Error::DanglingReference(format!(
                    "visualizations for unknown dataset `{dataset_id}`"
                ))
            })?;
            for v in vis {
                if &v.combo.dataset_id != dataset_id {
                    return Err(Error::DanglingReference(format!(
                        "visualization of dataset `{}` filed under `{dataset_id}`",
                        v.combo.dataset_id
                    )));
                }
                let config = self.configs.get(&v.config_id).ok_or_else(|| {
                    Error::DanglingReference(format!(
                        "dataset `{dataset_id}` references unknown configuration `{}`",
                        v.config_id
                    ))
                })?;
                v.check_binding(dataset, config)?;
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> CorpusStats {
        let datasets = self.datasets.len();
        let attributes: usize = self.datasets.iter().map(|d| d.attributes.len()).sum();
        let used: BTreeSet<&str> = self
            .visualizations
            .values()
            .flatten()
            .map(|v| v.config_id.as_str())
            .collect();
        let per_dataset_configs: usize = self
            .visualizations
            .values()
            .map(|vs| {
                vs.iter()
                    .map(|v| v.config_id.as_str())
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .sum();
        let denom = datasets.max(1) as f64;
        CorpusStats {
            datasets,
            configs: used.len(),
            attributes,
            visualizations: self.visualization_count(),
            attributes_per_dataset: attributes as f64 / denom,
            configs_per_dataset: per_dataset_configs as f64 / denom,
        }
    }

    /// Restrict the corpus to the given dataset ids, keeping the config catalogue.
    pub fn subset(&self, ids: &BTreeSet<&str>) -> Corpus {
        Corpus {
            datasets: self
                .datasets
                .iter()
                .filter(|d| ids.contains(d.id.as_str()))
                .cloned()
                .collect(),
            visualizations: self
                .visualizations
                .iter()
                .filter(|(k, _)| ids.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            configs: self.configs.clone(),
        }
    }

    /// Parse the newline-delimited corpus format.
    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut configs: BTreeMap<String, VisConfiguration> = BTreeMap::new();
        let mut pending: Vec<(Dataset, Vec<VisRecord>)> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: serde_json::Value = serde_json::from_str(line)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            if value.get("configs").is_some() {
                let rec: ConfigsRecord = serde_json::from_value(value)
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                for c in rec.configs {
                    insert_config(&mut configs, c)?;
                }
                continue;
            }
            let rec: CorpusRecord = serde_json::from_value(value)
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let dataset = Dataset::from_record(rec.dataset)?;
            pending.push((dataset, rec.visualizations));
        }
        let mut datasets = Vec::with_capacity(pending.len());
        let mut visualizations = BTreeMap::new();
        for (dataset, records) in pending {
            let mut vis = Vec::with_capacity(records.len());
            for r in records {
                let config_id = match (r.config_id, r.config) {
                    (_, Some(mut inline)) => {
                        if inline.id.is_empty() {
                            inline.id = inline.canonical_id();
                        }
                        let id = inline.id.clone();
                        insert_config(&mut configs, inline)?;
                        id
                    }
                    (Some(id), None) => id,
                    (None, None) => {
                        return Err(Error::Parse(format!(
                            "dataset `{}`: visualization without config_id or config",
                            dataset.id
                        )))
                    }
                };
                vis.push(Visualization {
                    combo: AttributeCombination {
                        dataset_id: dataset.id.clone(),
                        attribute_names: r.attributes,
                    },
                    config_id,
                    label: Some(1),
                });
            }
            visualizations.insert(dataset.id.clone(), vis);
            datasets.push(dataset);
        }
        Corpus::new(datasets, visualizations, configs)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        if !self.configs.is_empty() {
            let rec = ConfigsRecord {
                configs: self.configs.values().cloned().collect(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
            out.push('\n');
        }
        for d in &self.datasets {
            let rec = CorpusRecord {
                dataset: d.to_record(),
                visualizations: self
                    .positives(&d.id)
                    .iter()
                    .map(|v| VisRecord {
                        config_id: Some(v.config_id.clone()),
                        config: None,
                        attributes: v.combo.attribute_names.clone(),
                    })
                    .collect(),
            };
            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn insert_config(
    configs: &mut BTreeMap<String, VisConfiguration>,
    c: VisConfiguration,
) -> Result<()> {
    if c.id.is_empty() {
        return Err(Error::InvalidConfig("configuration without id".into()));
    }
    match configs.get(&c.id) {
        Some(existing) if existing != &c => Err(Error::InvalidConfig(format!(
            "conflicting definitions for configuration `{}`",
            c.id
        ))),
        Some(_) => Ok(()),
        None => {
            configs.insert(c.id.clone(), c);
            Ok(())
        }
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    Corpus::from_jsonl(&text)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl SplitFractions {
    pub const fn new(train: f64, val: f64, test: f64) -> Self {
        SplitFractions { train, val, test }
    }
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions::new(0.8, 0.1, 0.1)
    }
}

/// Partition the corpus by dataset into train/validation/test parts.
pub fn split_corpus(
    corpus: &Corpus,
    fractions: SplitFractions,
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus)> {
    let SplitFractions { train, val, test } = fractions;
    if [train, val, test]
        .iter()
        .any(|f| !(f.is_finite() && *f > 0.0))
        || ((train + val + test) - 1.0).abs() > 1e-9
    {
        return Err(Error::InvalidFractions(format!(
            "({train}, {val}, {test}) must be positive and sum to 1"
        )));
    }
    let n = corpus.datasets.len();
    let mut ids: Vec<&str> = corpus.datasets.iter().map(|d| d.id.as_str()).collect();
    ids.sort_unstable();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_train = (n as f64 * train).round() as usize;
    let n_val = (n as f64 * val).round() as usize;
    if n_train == 0 || n_val == 0 || n_train + n_val >= n {
        return Err(Error::TooFewDatasets { datasets: n });
    }
    let part = |range: std::ops::Range<usize>| -> Corpus {
        let set: BTreeSet<&str> = ids[range].iter().copied().collect();
        corpus.subset(&set)
    };
    Ok((
        part(0..n_train),
        part(n_train..n_train + n_val),
        part(n_train + n_val..n),
    ))
}
