//! Command-line entry points.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde_json::json;

use vizrec::evaluator::synthetic::{generate_synthetic_corpus, SyntheticSpec};
use vizrec::evaluator::{baseline_configpop, baseline_random, evaluate_many, PoolConfig, Scorer};
use vizrec::metafeatures::{compute_metafeatures, FeatureDescriptor, MetaFeatureSchema};
use vizrec::model::WideDeepModel;
use vizrec::net::Variant;
use vizrec::recommend::{recommend, QueryConstraints, RecommendQuery};
use vizrec::tabular::{load_corpus, load_dataset, split_corpus, Corpus, SplitFractions};
use vizrec::trainer::{train, TrainConfig};

#[derive(Debug, Parser)]
#[command(
    name = "vizrec",
    version,
    about = "Learned visualization recommendation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on the training part of a corpus.
    Train(TrainArgs),
    /// Rank held-out pools with a model and the baselines.
    Evaluate(EvaluateArgs),
    /// Print the top recommendations for one dataset.
    Recommend(RecommendArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
    /// Inspect a corpus file.
    Corpus {
        #[command(subcommand)]
        action: CorpusAction,
    },
    /// Print the meta-feature vector of one attribute.
    Metafeatures(MetafeatureArgs),
    /// Write a synthetic corpus with planted rules.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VariantArg {
    Full,
    WideOnly,
    DeepOnly,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Full => Variant::Full,
            VariantArg::WideOnly => Variant::WideOnly,
            VariantArg::DeepOnly => Variant::DeepOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus in JSONL form; it is split 80/10/10 by dataset using `--seed`.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "model.bin")]
    pub out: PathBuf,
    /// Negatives sampled per training dataset.
    #[arg(long, default_value_t = 20)]
    pub neg: usize,
    #[arg(long, default_value_t = 0.05)]
    pub lr: f64,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Multiplier on the learning rate of the wide component.
    #[arg(long, default_value_t = 1.0)]
    pub wide_lr_scale: f64,
    #[arg(long)]
    pub resample_negatives_per_epoch: bool,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Negatives per test pool.
    #[arg(long, default_value_t = 99)]
    pub negatives: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Evaluate only the test part of the split made by `train --seed <N>`.
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Skip the Random and ConfigPop baselines.
    #[arg(long)]
    pub no_baselines: bool,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long, env = "VIZREC_MODEL")]
    pub model: PathBuf,
    /// CSV, TSV or dataset JSON.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub top_k: usize,
    /// Attribute types each result must bind, repeated for multiples (e.g. `nominal,nominal`).
    #[arg(long, value_delimiter = ',')]
    pub types: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub attributes: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub marks: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub aggregates: Vec<String>,
    /// Write one Vega-Lite spec per recommendation into this directory.
    #[arg(long)]
    pub emit_specs: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "VIZREC_MODEL")]
    pub model: Option<PathBuf>,
    #[arg(long, env = "VIZREC_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
}

#[derive(Debug, Subcommand)]
pub enum CorpusAction {
    /// Dataset, attribute, visualization and configuration counts.
    Stats { path: PathBuf },
    /// Check every reference and binding; exits non-zero on the first error.
    Validate { path: PathBuf },
}

#[derive(Debug, Args)]
pub struct MetafeatureArgs {
    /// CSV, TSV or dataset JSON.
    pub dataset: PathBuf,
    #[arg(long)]
    pub attribute: String,
    /// Print descriptor names next to the values.
    #[arg(long)]
    pub named: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    pub datasets: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Path of the training report written next to a model file.
pub fn report_path(model: &Path) -> PathBuf {
    model.with_extension("report.json")
}

fn parse_names<T: DeserializeOwned>(values: &[String], what: &str) -> Result<Vec<T>> {
    values
        .iter()
        .map(|v| {
            serde_json::from_value(json!(v.trim().to_lowercase()))
                .with_context(|| format!("unknown {what} `{v}`"))
        })
        .collect()
}

pub fn split(corpus: &Corpus, seed: u64) -> Result<(Corpus, Corpus, Corpus)> {
    Ok(split_corpus(corpus, SplitFractions::default(), seed)?)
}

pub fn run_train(args: &TrainArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let (train_split, val_split, test_split) = split(&corpus, args.seed)?;
    log::info!(
        "split {} datasets into {}/{}/{}",
        corpus.datasets.len(),
        train_split.datasets.len(),
        val_split.datasets.len(),
        test_split.datasets.len()
    );
    let mut cfg = TrainConfig {
        negatives_per_dataset: args.neg,
        learning_rate: args.lr,
        wide_learning_rate_scale: args.wide_lr_scale,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        early_stop_patience: args.patience,
        resample_negatives_per_epoch: args.resample_negatives_per_epoch,
        ..Default::default()
    };
    cfg.model.variant = args.variant.into();
    let (model, report) = train(&train_split, &val_split, &cfg)?;
    model.save(&args.out)?;
    let report_file = report_path(&args.out);
    std::fs::write(&report_file, report.to_json())
        .with_context(|| format!("writing {}", report_file.display()))?;
    println!(
        "model written to {} (epoch {} selected, validation nDCG@5 {})",
        args.out.display(),
        report.selected_epoch,
        report
            .best_val_ndcg5
            .map_or("n/a".to_string(), |v| format!("{v:.4}"))
    );
    println!("report written to {}", report_file.display());
    Ok(())
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<String> {
    let model = WideDeepModel::load(&args.model)?;
    let corpus = load_corpus(&args.corpus)?;
    let test = match args.split_seed {
        Some(seed) => split(&corpus, seed)?.2,
        None => corpus,
    };
    let pop = baseline_configpop(&model.vocab);
    let random = baseline_random(args.seed);
    let mut scorers: Vec<&dyn Scorer> = vec![&model];
    if !args.no_baselines {
        scorers.push(&pop);
        scorers.push(&random);
    }
    let cfg = PoolConfig {
        negatives_per_dataset: args.negatives,
        seed: args.seed,
        max_arity: model.hyper.max_arity,
    };
    let result = evaluate_many(&scorers, &test, &model.vocab, &cfg)?;
    if let Some(path) = &args.report {
        std::fs::write(path, result.to_report_string())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(result.to_table())
}

pub fn query_from_args(args: &RecommendArgs) -> Result<RecommendQuery> {
    Ok(RecommendQuery {
        top_k: args.top_k,
        constraints: QueryConstraints {
            required_attribute_types: parse_names(&args.types, "attribute type")?,
            required_attributes: args.attributes.iter().cloned().collect(),
            allowed_marks: parse_names(&args.marks, "mark")?.into_iter().collect(),
            allowed_aggregates: parse_names(&args.aggregates, "aggregate")?
                .into_iter()
                .collect(),
        },
    })
}

pub fn run_recommend(args: &RecommendArgs) -> Result<String> {
    let model = WideDeepModel::load(&args.model)?;
    let dataset = load_dataset(&args.dataset, None)?;
    let recs = recommend(&model, &dataset, &query_from_args(args)?)?;
    if let Some(dir) = &args.emit_specs {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for r in &recs {
            let path = dir.join(format!("rank{:02}.vl.json", r.rank));
            std::fs::write(&path, serde_json::to_string_pretty(&r.chart_spec)?)
                .with_context(|| format!("writing {}", path.display()))?;
        }
    }
    Ok(serde_json::to_string_pretty(&recs)?)
}

pub fn run_metafeatures(args: &MetafeatureArgs) -> Result<String> {
    let dataset = load_dataset(&args.dataset, None)?;
    let Some(attr) = dataset.attribute(&args.attribute) else {
        bail!("dataset has no attribute `{}`", args.attribute);
    };
    let schema = MetaFeatureSchema::default();
    let v = compute_metafeatures(attr, &schema)?;
    let out = if args.named {
        let named: Vec<_> = schema
            .features
            .iter()
            .zip(&v.values)
            .map(|(f, x)| json!({"feature": descriptor_name(f), "value": x}))
            .collect();
        json!({"attribute": attr.name, "type": attr.kind, "k": schema.k, "features": named})
    } else {
        json!({"attribute": attr.name, "type": attr.kind, "k": schema.k, "values": v.values})
    };
    Ok(serde_json::to_string_pretty(&out)?)
}

fn descriptor_name(f: &FeatureDescriptor) -> String {
    match f {
        FeatureDescriptor::Column { function } => serde_json::to_value(function)
            .unwrap()
            .as_str()
            .unwrap()
            .to_string(),
        FeatureDescriptor::Statistic {
            representation,
            partition,
            part,
            function,
        } => {
            let rep = serde_json::to_value(representation).unwrap();
            let partition = match partition {
                vizrec::metafeatures::Partitioner::Whole => "whole".to_string(),
                vizrec::metafeatures::Partitioner::Quartiles => format!("quartile{}", part + 1),
                vizrec::metafeatures::Partitioner::EqualWidthBins(k) => {
                    format!("bin{}of{k}", part + 1)
                }
            };
            format!("{}.{partition}.{}", rep.as_str().unwrap(), function.name())
        }
    }
}

pub fn run_corpus(action: &CorpusAction) -> Result<String> {
    match action {
        CorpusAction::Stats { path } => {
            let corpus = load_corpus(path)?;
            Ok(serde_json::to_string_pretty(&corpus.stats())?)
        }
        CorpusAction::Validate { path } => {
            let corpus = load_corpus(path)?;
            corpus.validate()?;
            Ok(format!(
                "ok: {} datasets, {} visualizations",
                corpus.datasets.len(),
                corpus.visualization_count()
            ))
        }
    }
}

pub fn run_synth(args: &SynthArgs) -> Result<String> {
    let corpus = generate_synthetic_corpus(&SyntheticSpec {
        n_datasets: args.datasets,
        seed: args.seed,
        ..Default::default()
    })?;
    corpus.save(&args.out)?;
    Ok(format!(
        "wrote {} datasets with {} visualizations to {}",
        corpus.datasets.len(),
        corpus.visualization_count(),
        args.out.display()
    ))
}

/// Print to stdout; a closed pipe (e.g. `| head`) ends output quietly.
fn emit(text: &str) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => run_train(&args),
        Command::Evaluate(args) => emit(&run_evaluate(&args)?),
        Command::Recommend(args) => emit(&format!("{}\n", run_recommend(&args)?)),
        Command::Serve(args) => {
            let model = match &args.model {
                Some(path) => Some(
                    WideDeepModel::load(path)
                        .with_context(|| format!("loading {}", path.display()))?,
                ),
                None => {
                    log::warn!("no model given (--model or VIZREC_MODEL); recommendation routes return 503");
                    None
                }
            };
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(crate::api::serve(model, &args.bind))
        }
        Command::Corpus { action } => emit(&format!("{}\n", run_corpus(&action)?)),
        Command::Metafeatures(args) => emit(&format!("{}\n", run_metafeatures(&args)?)),
        Command::Synth(args) => emit(&format!("{}\n", run_synth(&args)?)),
    }
}
