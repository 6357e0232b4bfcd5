use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mht_ggsp::config;
use mht_ggsp::runner::{exit_code, run, Overrides};

/// Lfdr-based multiple testing over a sensor graph and time, driven by a
/// TOML run configuration.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Check the config and exit.
    #[arg(long)]
    validate_only: bool,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Suppress the summary table.
    #[arg(long)]
    quiet: bool,
    /// Write per-sample detection maps to rejections/rep_<i>.csv.
    #[arg(long)]
    emit_rejections: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if cli.validate_only {
        return match config::validate(&cli.config) {
            Ok(v) if v.is_empty() => {
                if !cli.quiet {
                    println!("{}: ok", cli.config.display());
                }
                ExitCode::SUCCESS
            }
            Ok(v) => {
                for violation in v {
                    eprintln!("{violation}");
                }
                ExitCode::from(1)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        };
    }

    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.output_dir,
        jobs: cli.jobs,
        emit_rejections: cli.emit_rejections,
    };
    let result = run(&cli.config, &overrides);
    match &result {
        Ok(summary) => {
            for (rep, e) in &summary.report.failures {
                eprintln!("repetition {rep} failed: {e}");
            }
            if !cli.quiet {
                println!(
                    "{:<10} {:>6} {:>8} {:>8} {:>8} {:>8}",
                    "method", "alpha", "fdr", "se", "power", "se"
                );
                for r in &summary.report.rows {
                    println!(
                        "{:<10} {:>6} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                        r.method.id(),
                        r.alpha,
                        r.fdr,
                        r.se_fdr,
                        r.power,
                        r.se_power
                    );
                }
                println!("null proportion {:.4}", summary.report.null_proportion());
                println!("wrote {}", summary.output_dir.display());
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
