//! Batch front end: runs scenario files, validates them, and fits
//! far-field rates between field dumps.

use clap::{Parser, Subcommand};
use nozzleflow::analysis::RateModel;
use nozzleflow::config::load_config;
use nozzleflow::runner;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nozzleflow",
    about = "Subsonic nozzle potential-flow solver and verification harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: solve, run the declared studies, emit artifacts.
    /// Exits 0 exactly when every declared check passed.
    Run {
        config: PathBuf,
        /// Worker threads for studies (default: NOZZLEFLOW_WORKERS or the
        /// available parallelism)
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Validate a scenario file and report every violation.
    Check { config: PathBuf },
    /// Fit a far-field decay rate between two field dumps (the second is
    /// the reference).
    Rates {
        field_a: PathBuf,
        field_b: PathBuf,
        /// Decay model to fit
        #[arg(long, value_parser = parse_model)]
        model: RateModel,
        /// Window starts as start:end (unit windows, integer steps) or a
        /// comma-separated list
        #[arg(long)]
        windows: String,
        /// Optional rates.csv output path
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_model(s: &str) -> Result<RateModel, String> {
    match s {
        "exponential" => Ok(RateModel::Exponential),
        "algebraic" => Ok(RateModel::Algebraic),
        other => Err(format!("'{other}' is not 'exponential' or 'algebraic'")),
    }
}

fn parse_windows(arg: &str) -> Result<Vec<f64>, String> {
    if let Some((a, b)) = arg.split_once(':') {
        let start: f64 = a.parse().map_err(|_| format!("bad window start '{a}'"))?;
        let end: f64 = b.parse().map_err(|_| format!("bad window end '{b}'"))?;
        if !(end > start) {
            return Err("window end must exceed the start".to_string());
        }
        let mut t = start;
        let mut out = Vec::new();
        while t <= end + 1e-9 {
            out.push(t);
            t += 1.0;
        }
        Ok(out)
    } else {
        arg.split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad window start '{tok}'"))
            })
            .collect()
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, workers } => {
            let config = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let workers = workers.unwrap_or_else(runner::workers_from_env);
            match runner::run(&config, workers) {
                Ok(outcome) => {
                    for check in &outcome.checks {
                        println!(
                            "check {} {} {}",
                            check.name,
                            if check.passed { "pass" } else { "fail" },
                            check.detail
                        );
                    }
                    for err in &outcome.errors {
                        eprintln!("{err}");
                    }
                    println!(
                        "result {} (manifest: {})",
                        if outcome.passed { "pass" } else { "fail" },
                        outcome.manifest_path.display()
                    );
                    if outcome.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Check { config } => match load_config(&config) {
            Ok(_) => {
                println!("configuration valid");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::FAILURE
            }
        },
        Command::Rates {
            field_a,
            field_b,
            model,
            windows,
            out,
        } => {
            let t_list = match parse_windows(&windows) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            match runner::rates_between(&field_a, &field_b, &t_list, model, out.as_deref()) {
                Ok(fit) => {
                    for w in &fit.windows {
                        println!(
                            "window T={} D_L2={:e} D_Linf={:e}{}",
                            w.t,
                            w.d_l2,
                            w.d_linf,
                            if w.used { "" } else { " (below floor, excluded)" }
                        );
                    }
                    let label = match fit.model {
                        RateModel::Exponential => "rate",
                        RateModel::Algebraic => "exponent",
                    };
                    println!(
                        "fit {label}={} prefactor={:e} r2={}",
                        fit.rate, fit.prefactor, fit.r_squared
                    );
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("{e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
