use std::path::PathBuf;

use archlens::eval::Scheme;
use archlens::model::Category;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "archlens", version, about = "Detective archetype analysis over literary character corpora")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check a characters file (and optional embeddings) against the data model.
    Validate(ValidateArgs),
    /// Cross-validate a classifier and write the evaluation report.
    Eval(EvalArgs),
    /// Train on labeled data, label a corpus and write diachronic series.
    Detect(DetectArgs),
    /// Score attribute distinctiveness between two groups of characters.
    Zscore(ZscoreArgs),
    /// Cluster character embeddings and extract per-cluster vocabulary.
    Cluster(ClusterArgs),
    /// Fit a quadratic trend to a series CSV.
    Trend(TrendArgs),
    /// Write a seeded synthetic corpus with planted class structure.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Characters file, one JSON object per line.
    #[arg(long)]
    pub characters: PathBuf,
    /// Embeddings file in the CEMB binary format.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// CSV `character_id,label` overriding labels in the characters file.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Earliest accepted publication year.
    #[arg(long, default_value_t = 1700)]
    pub min_year: i32,
    /// Latest accepted publication year.
    #[arg(long, default_value_t = 2100)]
    pub max_year: i32,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureArg {
    Bow,
    Emb,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelArg {
    Logreg,
    Svm,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Character representation.
    #[arg(long, value_enum, default_value_t = FeatureArg::Emb)]
    pub features: FeatureArg,
    /// Linear classifier.
    #[arg(long, value_enum, default_value_t = ModelArg::Svm)]
    pub model: ModelArg,
    /// Bag-of-words vocabulary size.
    #[arg(long, default_value_t = 1000)]
    pub vocab_size: usize,
    /// Attribute categories for bag-of-words features, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_category, default_value = "agent_verbs,modifiers,possessives")]
    pub categories: Vec<Category>,
    /// L2 regularization strength.
    #[arg(long, default_value_t = 1e-2)]
    pub lambda: f64,
    /// Maximum training epochs.
    #[arg(long, default_value_t = 500)]
    pub max_epochs: usize,
    /// Seed for every random choice.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

pub fn parse_category(s: &str) -> Result<Category, String> {
    Category::parse(s.trim()).ok_or_else(|| {
        format!("unknown category `{s}` (expected agent_verbs, patient_verbs, modifiers or possessives)")
    })
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Protocol: stratified:K, logo:character, logo:author or logo:timebin:W.
    #[arg(long, default_value = "stratified:5")]
    pub scheme: Scheme,
    /// Bin width in years for the error-over-time series.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    pub bin_width: u32,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG chart of the error-over-time series.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct DetectArgs {
    /// Labeled training characters.
    #[arg(long)]
    pub train_characters: PathBuf,
    #[arg(long)]
    pub train_embeddings: Option<PathBuf>,
    #[arg(long)]
    pub train_labels: Option<PathBuf>,
    /// Corpus characters to label.
    #[arg(long)]
    pub corpus_characters: PathBuf,
    #[arg(long)]
    pub corpus_embeddings: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Characters kept per novel, by mention count.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub top_k: u64,
    /// Bin width in years for the ratio and centrality series.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
    pub bin_width: u32,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct ZscoreArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// CSV `character_id,group` with group 1 or 2. Defaults to detectives
    /// (group 1) against non-detectives (group 2).
    #[arg(long)]
    pub groups: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_category, default_value = "agent_verbs,modifiers,possessives")]
    pub categories: Vec<Category>,
    /// Rows per sign in the chart.
    #[arg(long, default_value_t = 14)]
    pub top: usize,
    /// Output CSV path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write an SVG chart next to the CSV.
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of clusters.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub restarts: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Cluster every character instead of labeled detectives only.
    #[arg(long)]
    pub all: bool,
    /// External 2-D coordinates, CSV `character_id,x,y`.
    #[arg(long)]
    pub coords: Option<PathBuf>,
    /// Run k-means on the 2-D coordinates instead of full embeddings.
    #[arg(long)]
    pub on_2d: bool,
    /// Distinctive attributes kept per cluster and category.
    #[arg(long, default_value_t = 14)]
    pub top: usize,
    #[arg(long, value_delimiter = ',', value_parser = parse_category, default_value = "agent_verbs,modifiers,possessives")]
    pub categories: Vec<Category>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct TrendArgs {
    /// Series CSV with columns `bin_start,value,support`.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV path; the fit is written as a leading comment line.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 180)]
    pub detectives: usize,
    #[arg(long, default_value_t = 420)]
    pub others: usize,
    #[arg(long, default_value_t = 30)]
    pub authors: usize,
    #[arg(long, default_value_t = 4)]
    pub novels_per_author: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Centroid distance in within-class standard deviations.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    /// Detectives only appear in novels published in or after this year.
    #[arg(long)]
    pub detectives_from: Option<i32>,
    /// Drop gold labels from the output.
    #[arg(long)]
    pub unlabeled: bool,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output directory for characters.jsonl and embeddings.cemb.
    #[arg(long)]
    pub out: PathBuf,
}
