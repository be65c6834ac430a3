use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use schurtomo_cli::{run, ExperimentConfig, RunOptions};

/// Run a schurtomo experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "schurtomo", version, about)]
struct Args {
    /// Experiment config (JSON, "schema": 1).
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config value.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent trials.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output directory; overrides `output_path` in the config.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = ExperimentConfig::load(&args.config).and_then(|mut cfg| {
        if args.seed.is_some() {
            cfg.seed = args.seed;
        }
        let out = args
            .output
            .or_else(|| cfg.output_path.clone())
            .unwrap_or_else(|| PathBuf::from("schurtomo-out"));
        run(&cfg, &RunOptions { jobs: args.jobs, output: out })
    });
    match result {
        Ok(summary) => {
            println!("{}", summary.message);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
