use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hilbert_cli::config::json_or_path;
use hilbert_cli::{ConfigError, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "hilbert", version, about = "Hilbert geometry experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <out-dir>/<experiment>.csv and .json.
    Run {
        /// Experiment name; may instead come from the config file.
        experiment: Option<String>,
        /// JSON config file; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Domain as inline JSON or a path.
        #[arg(long)]
        domain: Option<String>,
        /// Group as inline JSON or a path; bare names are looked up in fixtures/.
        #[arg(long)]
        group: Option<String>,
        #[arg(long)]
        max_word: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List the experiment names.
    List,
}

fn config_from_flags(
    experiment: Option<String>,
    config: Option<PathBuf>,
    domain: Option<String>,
    group: Option<String>,
    max_word: Option<usize>,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> Result<ExperimentConfig, ConfigError> {
    let base = match config {
        Some(p) => ExperimentConfig::from_file(&p)?,
        None => ExperimentConfig::default(),
    };
    let flags = ExperimentConfig {
        experiment,
        domain: domain.as_deref().map(json_or_path).transpose()?,
        group: group.as_deref().map(json_or_path).transpose()?,
        max_word,
        seed,
        output: out_dir,
        ..Default::default()
    };
    Ok(base.merged(flags))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for e in hilbert_cli::config::EXPERIMENTS {
                println!("{e}");
            }
            ExitCode::SUCCESS
        }
        Command::Run { experiment, config, domain, group, max_word, seed, workers, out_dir } => {
            if workers == Some(0) {
                eprintln!("invalid config: workers must be positive");
                return ExitCode::from(2);
            }
            let result = config_from_flags(experiment, config, domain, group, max_word, seed, out_dir)
                .map_err(RunError::Config)
                .and_then(|cfg| hilbert_cli::run(cfg, workers));
            match result {
                Ok(report) => {
                    println!("{}", serde_json::to_string_pretty(&report.summary["results"]).unwrap_or_default());
                    println!("pass: {}", report.pass);
                    for f in &report.files {
                        println!("wrote {}", f.display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
