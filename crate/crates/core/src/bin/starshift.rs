use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use starshift::cli::{parse_config, run, RunOptions};

/// Spectral shift and trace-formula checks for Schrödinger operators on star graphs.
#[derive(Parser, Debug)]
#[command(name = "starshift", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config, then `./out`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Multiplies every residual tolerance.
    #[arg(long, default_value_t = 1.0)]
    tolerance_scale: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, short)]
    verbose: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if !(args.tolerance_scale > 0.0 && args.tolerance_scale.is_finite()) {
        eprintln!("error: --tolerance-scale must be positive");
        return ExitCode::from(1);
    }
    let config = match parse_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let output_dir = args
        .output
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        output_dir,
        tolerance_scale: args.tolerance_scale,
        verbose: args.verbose,
    };
    match pool.install(|| run(&config, &opts)) {
        Ok(summary) => {
            for t in &summary.tasks {
                let status = format!("{:?}", t.status).to_lowercase();
                match &t.error {
                    Some(e) => println!("{:<20} {status}: {e}", t.task.name()),
                    None => println!("{:<20} {status}", t.task.name()),
                }
            }
            ExitCode::from(summary.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
