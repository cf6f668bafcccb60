use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use newsprobe_cli::{run, Invocation, Stage};

/// Detect LLM-rewritten news: build a paired corpus, fine-tune a classifier
/// and estimate prevalence per source and year.
#[derive(Debug, Parser)]
#[command(name = "newsprobe", version)]
struct Args {
    /// Pipeline config file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Stage to run; `pipeline` runs all of them in order.
    #[arg(long, value_enum, default_value = "pipeline")]
    stage: Stage,
    /// Replace every seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output root; overrides `out_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the offline mock rewriter whatever the configured provider.
    #[arg(long)]
    mock_rewriter: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = match args.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(format!("{level},candle=warn")))
        .format_timestamp(None)
        .init();
    let inv = Invocation {
        config: args.config,
        stage: args.stage,
        seed: args.seed,
        out: args.out,
        mock_rewriter: args.mock_rewriter,
    };
    match run(&inv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
