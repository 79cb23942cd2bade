//! The `hgl` command line.
//!
//! Every subcommand accepts `--config FILE`, a flat `key = value` file whose
//! keys are the subcommand's long flags (underscores and hyphens are
//! interchangeable). Command-line flags win over the file. Each run writes
//! `manifest.cfg` into its output directory; passing it back as `--config`
//! replays the run.

mod commands;
mod outputs;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::formats;

pub use outputs::Outputs;

#[derive(Debug, Parser)]
#[command(name = "hgl", version, about = "Denoise distantly supervised NER data with hypergeometric learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded synthetic corpus, development split and dictionary.
    Synth(SynthArgs),
    /// Weak-label a corpus with a dictionary.
    Label(LabelArgs),
    /// Estimate per-type noise rates from a gold development corpus.
    Estimate(EstimateArgs),
    /// Train one denoiser per entity type.
    Train(TrainArgs),
    /// Build and dump mention blocks.
    Block(BlockArgs),
    /// Rank weak labels with trained denoisers and export the kept ones.
    Denoise(DenoiseArgs),
    /// Ranking and span metrics for scored instances.
    Eval(EvalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Synth(_) => "synth",
            Command::Label(_) => "label",
            Command::Estimate(_) => "estimate",
            Command::Train(_) => "train",
            Command::Block(_) => "block",
            Command::Denoise(_) => "denoise",
            Command::Eval(_) => "eval",
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct SynthArgs {
    /// Flat config file.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Generator setting as KEY=VALUE (repeatable).
    #[arg(long, value_name = "KEY=VALUE")]
    #[serde(skip)]
    pub param: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct LabelArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct EstimateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Gold-annotated development corpus.
    #[arg(long)]
    pub dev: PathBuf,
    /// Training corpus; its weak-label counts become the populations.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loss {
    Hgl,
    Em,
    Xr,
    Naive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Confidences {
    PerBatch,
    EpochFrozen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChunkerArg {
    Capitalized,
    Auxiliary,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct NoiseArgs {
    /// Noise profile TSV, e.g. from `estimate`.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    /// Per-type noise rate TYPE=RATE; overrides the profile.
    #[arg(long, value_name = "TYPE=RATE", value_delimiter = ',')]
    pub noise_rate: Vec<String>,
}

#[derive(Debug, Args, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = Loss::Hgl)]
    pub loss: Loss,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    #[arg(long, default_value_t = 150)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "16")]
    pub hidden: Vec<usize>,
    /// Average each embedding with its neighbours.
    #[arg(long, action = clap::ArgAction::Set, default_value_t = false)]
    pub context_window: bool,
    #[arg(long, value_enum, default_value_t = Confidences::PerBatch)]
    pub ranking: Confidences,
    #[arg(long, value_enum, default_value_t = Confidences::EpochFrozen)]
    pub em_targets: Confidences,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    /// Train jointly with a mention block holding this fraction of the
    /// candidates.
    #[arg(long)]
    pub block_fraction: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub block_lambda: f64,
    /// Accuracy of the blocked occurrences; estimated from `--dev` if absent.
    #[arg(long)]
    pub block_accuracy: Option<f64>,
    /// Gold development corpus for estimating block accuracy.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ChunkerArg::Capitalized)]
    pub chunker: ChunkerArg,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct BlockArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Entity types to block (comma separated); all dictionary types if
    /// absent.
    #[arg(long = "type", value_delimiter = ',')]
    #[serde(rename = "type")]
    pub types: Vec<String>,
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    #[arg(long, value_enum, default_value_t = ChunkerArg::Capitalized)]
    pub chunker: ChunkerArg,
    #[arg(long)]
    pub seed: u64,
    /// Gold development corpus for estimating block accuracy.
    #[arg(long)]
    pub dev: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct DenoiseArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub dictionary: PathBuf,
    /// `models.json` written by `train`.
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub noise: NoiseArgs,
}

#[derive(Debug, Args, Serialize)]
#[command(args_override_self = true)]
#[serde(rename_all = "kebab-case")]
pub struct EvalArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Scored instance table, e.g. `scores.tsv` from `denoise`.
    #[arg(long)]
    pub scores: PathBuf,
    /// Gold corpus; replaces the gold flags of the table.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Predicted corpus for span metrics against `--corpus`.
    #[arg(long, requires = "corpus")]
    pub predicted: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Flattens serialised arguments into manifest entries.
fn flat_entries(value: &impl Serialize) -> Vec<(String, String)> {
    let serde_json::Value::Object(map) = serde_json::to_value(value).expect("arguments serialise") else {
        unreachable!("argument structs serialise to objects")
    };
    map.into_iter()
        .filter_map(|(k, v)| {
            let v = match v {
                serde_json::Value::Null => return None,
                serde_json::Value::String(s) => s,
                serde_json::Value::Array(items) if items.is_empty() => return None,
                serde_json::Value::Array(items) => items
                    .iter()
                    .map(|i| match i {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            Some((k, v))
        })
        .collect()
}

/// Turns config-file entries into arguments for `subcommand`. Unknown keys
/// of `synth` become generator settings.
fn config_args(subcommand: &str, entries: Vec<(String, String)>) -> Result<Vec<OsString>> {
    let root = Cli::command();
    let sub = root
        .find_subcommand(subcommand)
        .ok_or_else(|| Error::Usage(format!("unknown subcommand {subcommand:?}")))?;
    let mut out = Vec::new();
    for (key, value) in entries {
        let flag = key.replace('_', "-");
        if flag == "command" {
            if value != subcommand {
                return Err(Error::Usage(format!("config is for {value:?}, not {subcommand:?}")));
            }
            continue;
        }
        if flag == "config" {
            return Err(Error::Usage("config files cannot include other config files".into()));
        }
        let known = sub.get_arguments().any(|a| a.get_long() == Some(flag.as_str()));
        if known && flag != "param" {
            out.push(OsString::from(format!("--{flag}")));
            out.push(OsString::from(value));
        } else if subcommand == "synth" {
            out.push(OsString::from("--param"));
            out.push(OsString::from(format!("{key}={value}")));
        } else {
            return Err(Error::Usage(format!("unknown config key {key:?} for {subcommand}")));
        }
    }
    Ok(out)
}

/// Splices the entries of a `--config` file in front of the command-line
/// flags so that the latter win.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(sub) = argv.get(1).and_then(|s| s.to_str()).map(String::from) else {
        return Ok(argv);
    };
    if Cli::command().find_subcommand(&sub).is_none() {
        return Ok(argv);
    }
    let mut path = None;
    let mut rest = Vec::new();
    let mut it = argv[2..].iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => match it.next() {
                Some(p) => path = Some(PathBuf::from(p)),
                None => return Err(Error::Usage("--config needs a file".into())),
            },
            Some(s) if s.starts_with("--config=") => path = Some(PathBuf::from(&s["--config=".len()..])),
            _ => rest.push(a.clone()),
        }
    }
    let Some(path) = path else {
        return Ok(argv);
    };
    let mut out = vec![argv[0].clone(), argv[1].clone()];
    out.extend(config_args(&sub, formats::load_config(&path)?)?);
    out.extend(rest);
    Ok(out)
}

/// Runs the command line and returns the process exit status.
pub fn run(argv: impl IntoIterator<Item = impl Into<OsString>>) -> i32 {
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let argv = match expand_config(argv) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
