//! `vtalarm`: synthetic data, WFDB ingest, features, training, evaluation
//! and alerting for ventricular-tachycardia alarms.

mod config;
mod error;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vtalarm::imbalance::ResampleMethod;
use vtalarm::Architecture;

use config::{Overrides, PipelineConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "vtalarm", version, about = "VT alarm classification pipeline")]
struct Cli {
    /// Pipeline configuration (TOML). Flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Working directory for every artifact.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a synthetic corpus of WFDB records and its alarms.csv.
    Synth(SynthArgs),
    /// Cut alarm windows out of the records listed in alarms.csv.
    Ingest {
        /// Directory with the records and alarms.csv (default: <out>/raw).
        #[arg(long, value_name = "DIR")]
        data_dir: Option<PathBuf>,
    },
    /// Extract feature vectors from the ingested windows.
    Featurize,
    /// Split, scale, resample and fit a model.
    Train(TrainArgs),
    /// Score the test split and write report.json and scores.csv.
    Evaluate(ScoreArgs),
    /// Alert decisions for every event.
    Predict {
        #[command(flatten)]
        score: ScoreArgs,
        /// Feature CSV to score instead of <out>/features.csv.
        #[arg(long, value_name = "PATH")]
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    separability: Option<f64>,
    /// Sampling frequency in Hz.
    #[arg(long)]
    fs: Option<f64>,
    /// Fraction of true alarms.
    #[arg(long)]
    class_ratio: Option<f64>,
    /// Output directory for the records (default: <out>/raw).
    #[arg(long, value_name = "DIR")]
    data_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// cnn or fcnn.
    #[arg(long)]
    arch: Option<Architecture>,
    /// smote, adasyn or none.
    #[arg(long)]
    resample: Option<ResampleMethod>,
    /// Minority/majority ratio after resampling.
    #[arg(long)]
    ratio: Option<f64>,
    /// Neighbours for SMOTE and ADASYN.
    #[arg(long)]
    k: Option<usize>,
    /// Weight the loss by inverse class frequency.
    #[arg(long)]
    class_weights: bool,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    /// Require the checkpoint to hold this architecture.
    #[arg(long)]
    arch: Option<Architecture>,
    /// Alert when the score is at least this.
    #[arg(long)]
    threshold: Option<f64>,
}

fn run(cli: Cli) -> Result<String, CliError> {
    let mut o = Overrides { seed: cli.seed, out_dir: cli.out.clone(), ..Default::default() };
    match &cli.command {
        Command::Synth(a) => {
            o.data_dir = a.data_dir.clone();
        }
        Command::Ingest { data_dir } => o.data_dir = data_dir.clone(),
        Command::Featurize => {}
        Command::Train(a) => {
            o.architecture = a.arch;
            o.resample = a.resample;
            o.ratio = a.ratio;
            o.k_neighbors = a.k;
            o.class_weights = a.class_weights;
            o.max_epochs = a.epochs;
        }
        Command::Evaluate(a) | Command::Predict { score: a, .. } => {
            o.architecture = a.arch;
            o.threshold = a.threshold;
        }
    }
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), &o)?;
    match cli.command {
        Command::Synth(a) => {
            if let Some(v) = a.events {
                cfg.synth.n_events = v;
            }
            if let Some(v) = a.separability {
                cfg.synth.separability = v;
            }
            if let Some(v) = a.fs {
                cfg.synth.fs = v;
            }
            if let Some(v) = a.class_ratio {
                cfg.synth.class_ratio = v;
            }
            cfg.validate()?;
            stages::synth(&cfg)
        }
        Command::Ingest { .. } => stages::ingest(&cfg),
        Command::Featurize => stages::featurize(&cfg),
        Command::Train(_) => stages::train_model(&cfg),
        Command::Evaluate(a) => stages::evaluate(&cfg, a.arch),
        Command::Predict { score, input } => stages::predict(&cfg, score.arch, input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Config(e.render().to_string().trim().to_string());
            eprintln!("{}", err.json_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.json_line());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
