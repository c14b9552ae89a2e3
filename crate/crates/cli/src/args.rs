use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "bnlu", version, about = "Train, evaluate and serve a Bangla conversational assistant")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and cross-check the nlu, domain and stories files.
    DataValidate(DataArgs),
    /// Train the NLU pipeline and dialogue policies on all data and write a model archive.
    Train(TrainArgs),
    /// Train on a stratified split and write metrics, confusion matrix and histogram.
    Evaluate(EvaluateArgs),
    /// Evaluate several presets on one shared split.
    Ablate(AblateArgs),
    /// Run the HTTP gateway.
    Serve(ServeArgs),
    /// Chat with a trained model on standard input.
    Shell(ShellArgs),
    /// Write the deterministic synthetic corpus.
    GenCorpus(GenCorpusArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Directory holding nlu.yml, domain.yml and optionally stories.yml.
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainingFlags {
    /// Seeds the split, the classifier and the dialogue policy.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Word vectors in fastText text format for `dense.source = fasttext`.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    /// Overrides `classifier.epochs` of every pipeline.
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Pipeline config file, or a preset name such as P8.
    #[arg(long)]
    pub pipeline: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Overrides the dialogue policy's training epochs.
    #[arg(long)]
    pub policy_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub pipeline: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// `all`, or a comma-separated list of preset names or config files.
    #[arg(long, value_delimiter = ',', default_value = "all")]
    pub presets: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    /// Configurations evaluated concurrently.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub jobs: u64,
    #[command(flatten)]
    pub training: TrainingFlags,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Gateway config file (TOML).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model archive directory; overrides the config file and BNLU_MODEL.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Overrides the config file and BNLU_PORT.
    #[arg(long)]
    pub port: Option<u16>,
}

#[derive(Debug, Args)]
pub struct ShellArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, default_value = "shell")]
    pub session: String,
    /// Print the parsed intent and entities of every message.
    #[arg(long)]
    pub verbose: bool,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u64).range(2..))]
    pub intents: u64,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(4..))]
    pub examples: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(0..=9))]
    pub entity_types: u64,
}
