use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use prior_ci::cli::{self, CliError};
use prior_ci::config::{self, Mode, Override};

/// Confidence intervals in linear regression that utilize uncertain prior
/// information.
#[derive(Debug, Parser)]
#[command(name = "prior-ci", version)]
struct Args {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Interval functions file (curves, apply).
    #[arg(long)]
    functions: Option<PathBuf>,
    /// CSV data file (apply).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn flag_overrides(args: &Args) -> Result<Vec<Override>, CliError> {
    let mut o = Vec::new();
    let mut push = |key: &str, v: toml::Value| o.push(("run".to_string(), key.to_string(), v));
    let path = |p: &PathBuf| toml::Value::String(p.to_string_lossy().into_owned());
    if let Some(p) = &args.functions {
        push("functions", path(p));
    }
    if let Some(p) = &args.data {
        push("data", path(p));
    }
    if let Some(p) = &args.out {
        push("out", path(p));
    }
    if let Some(m) = args.mode {
        push("mode", toml::Value::try_from(m).expect("mode serialises to a string"));
    }
    let int = |v: u64, flag: &str| i64::try_from(v).map_err(|_| CliError::Usage(format!("{flag} {v} is too large")));
    if let Some(s) = args.seed {
        push("seed", toml::Value::Integer(int(s, "--seed")?));
    }
    if let Some(t) = args.threads {
        push("threads", toml::Value::Integer(int(t as u64, "--threads")?));
    }
    Ok(o)
}

fn run(args: &Args) -> Result<cli::Outcome, CliError> {
    let loaded = config::load_path(&args.config, &flag_overrides(args)?)?;
    let threads = loaded.config.run.threads;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    cli::run(&loaded)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
