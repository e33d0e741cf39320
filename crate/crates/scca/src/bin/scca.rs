//! Thin command-line front end over the library.

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scca::bench::{
    parse_results_csv, run_experiment, summarize, write_results_csv, write_summary_csv,
    ExperimentConfig,
};
use scca::lowdeg::{lowdeg_norm_exact, lowdeg_norm_mc, LowDegConfig, NormMethod};
use scca::theory::{classify_regime, impossible_sparsity_predicate, min_signal_threshold};

#[derive(Parser)]
#[command(name = "scca", about = "Sparse CCA support recovery toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep from a TOML config and write the results CSV.
    Run {
        /// Path to the experiment config file.
        config: String,
        /// Override the config's output path.
        #[arg(long)]
        output: Option<String>,
    },
    /// Aggregate a results CSV into a plot-ready summary CSV.
    Summarize {
        /// Path to a results CSV produced by `run`.
        results: String,
        /// Output path for the summary CSV (stdout if omitted).
        #[arg(long)]
        output: Option<String>,
    },
    /// Classify a problem size into its hardness regime.
    Regime {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        sx: usize,
        #[arg(long)]
        sy: usize,
        /// Emit the full report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Estimate the truncated likelihood-ratio norm.
    Lowdeg {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        sx: usize,
        #[arg(long)]
        sy: usize,
        /// Model-class constant B.
        #[arg(long, default_value_t = 3.0)]
        b: f64,
        /// Polynomial degree ceiling.
        #[arg(long, default_value_t = 4)]
        degree: usize,
        #[arg(long, default_value_t = 100_000)]
        mc_samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use the exact evaluator instead of Monte Carlo.
        #[arg(long)]
        exact: bool,
    },
    /// Impossibility bounds: the sparsity predicate and the minimal-signal
    /// threshold at a given size.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        s: usize,
        /// Model-class constant B.
        #[arg(long)]
        b: f64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

enum RunError {
    Config(String),
    Runtime(String),
}

impl From<scca::Error> for RunError {
    fn from(e: scca::Error) -> Self {
        match e {
            scca::Error::Config(msg) => RunError::Config(msg),
            other => RunError::Runtime(other.to_string()),
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), RunError> {
    match cmd {
        Command::Run { config, output } => {
            let text = fs::read_to_string(&config)
                .map_err(|e| RunError::Config(format!("{config}: {e}")))?;
            let mut cfg = ExperimentConfig::from_toml(&text)?;
            if let Some(out) = output {
                cfg.output_path = out;
            }
            let rows = run_experiment(&cfg)?;
            let csv = write_results_csv(&rows);
            fs::write(&cfg.output_path, csv)
                .map_err(|e| RunError::Runtime(format!("{}: {e}", cfg.output_path)))?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            eprintln!(
                "wrote {} rows ({} error-tagged) to {}",
                rows.len(),
                failed,
                cfg.output_path
            );
            Ok(())
        }
        Command::Summarize { results, output } => {
            let text = fs::read_to_string(&results)
                .map_err(|e| RunError::Config(format!("{results}: {e}")))?;
            let rows = parse_results_csv(&text)?;
            let summary = summarize(&rows)?;
            let csv = write_summary_csv(&summary);
            match output {
                Some(path) => fs::write(&path, csv)
                    .map_err(|e| RunError::Runtime(format!("{path}: {e}")))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::Regime { n, p, q, sx, sy, json } => {
            let report = classify_regime(n, p, q, sx, sy)?;
            if json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&report)
                        .map_err(|e| RunError::Runtime(e.to_string()))?
                );
            } else {
                println!("{:?}", report.regime);
                println!(
                    "boundaries: easy {:.4}, difficult {:.4}, hard {:.4} (max sparsity {})",
                    report.easy_boundary,
                    report.difficult_boundary,
                    report.hard_boundary,
                    sx.max(sy)
                );
            }
            Ok(())
        }
        Command::Lowdeg {
            n,
            p,
            q,
            sx,
            sy,
            b,
            degree,
            mc_samples,
            seed,
            exact,
        } => {
            let cfg = LowDegConfig {
                n,
                p,
                q,
                s_x: sx,
                s_y: sy,
                b_const: b,
                degree,
                mc_samples,
                seed,
            };
            for w in cfg.warnings() {
                eprintln!("warning: {w}");
            }
            let est = if exact {
                lowdeg_norm_exact(&cfg)?
            } else {
                lowdeg_norm_mc(&cfg)?
            };
            let method = match est.method {
                NormMethod::Exact => "exact",
                NormMethod::MonteCarlo => "monte-carlo",
            };
            println!(
                "norm^2 = {:.6} (std error {:.6}, {method})",
                est.value, est.std_error
            );
            Ok(())
        }
        Command::Bounds { n, p, s, b } => {
            let impossible = impossible_sparsity_predicate(n, p, s, b)?;
            let threshold = min_signal_threshold(n, p, s, b)?;
            println!("sparsity_impossible: {impossible}");
            println!("min_signal_threshold: {threshold:.6}");
            Ok(())
        }
    }
}
