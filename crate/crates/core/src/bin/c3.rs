use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use constructive::experiment::{self, Command, LoadedConfig};

/// Constructive comment classification experiments.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// JSON experiment config.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set linear.train.epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Load and aggregate the corpus into corpus.csv.
    Ingest,
    /// Label counts and sub-characteristic presence.
    Stats,
    /// Krippendorff's alpha and controversial-pair agreement.
    Agreement,
    /// Extract features for the train/test split.
    Features,
    /// Train the linear model and the sub-characteristic regression.
    TrainLinear,
    /// Train the convolutional text classifier.
    TrainCnn,
    /// Score the test split with every trained model.
    Evaluate,
    /// One linear model per feature group.
    Ablate,
    /// Cross-corpus training and testing.
    Transfer,
    /// Length profile of misclassified comments.
    LengthBias,
    /// Constructiveness against toxicity, agreement and length.
    Correlate,
    /// Concatenate the report tables.
    Report,
    /// Print the config JSON schema.
    Schema,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Schema => {
            print!("{}", experiment::schema_json());
            return ExitCode::SUCCESS;
        }
        Cmd::Ingest => Command::Ingest,
        Cmd::Stats => Command::Stats,
        Cmd::Agreement => Command::Agreement,
        Cmd::Features => Command::Features,
        Cmd::TrainLinear => Command::TrainLinear,
        Cmd::TrainCnn => Command::TrainCnn,
        Cmd::Evaluate => Command::Evaluate,
        Cmd::Ablate => Command::Ablate,
        Cmd::Transfer => Command::Transfer,
        Cmd::LengthBias => Command::LengthBias,
        Cmd::Correlate => Command::Correlate,
        Cmd::Report => Command::Report,
    };
    let result = LoadedConfig::load(cli.config.as_deref(), &cli.overrides).and_then(|cfg| experiment::run(command, &cfg));
    match result {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("payload serialises"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", experiment::error_json(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
