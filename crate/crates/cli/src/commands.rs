//! Command-line interface and the two subcommands.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ccal_core::{fit_hetero, fit_usual, run_scenario, Options};
use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{CliError, ExitClass};
use crate::io::{parse_first_stage, parse_second_stage};
use crate::report::{input_digest, render_csv, render_json, render_text, FitReport, Model};
use crate::scenario::{parse_scenarios, render_summary_csv, render_summary_text};

#[derive(Debug, Parser)]
#[command(name = "ccal", version, about = "Calibration with uncertain standard concentrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate an unknown concentration from standards and sample readings.
    Fit(FitArgs),
    /// Run Monte Carlo scenarios and write a summary CSV.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Usual,
    Proposed,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Text,
    Csv,
    Json,
}

#[derive(Debug, clap::Args)]
pub struct FitArgs {
    /// Standards CSV with header `X,u,Y`.
    #[arg(long)]
    pub standards: PathBuf,
    /// Sample CSV with header `Y0`.
    #[arg(long)]
    pub sample: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    pub model: ModelChoice,
    /// Confidence level of the reported interval.
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value = "text")]
    pub format: OutputFormat,
    /// Label shown in reports; defaults to the standards file stem.
    #[arg(long)]
    pub label: Option<String>,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scenario CSV, one scenario per row.
    #[arg(long)]
    pub scenarios: PathBuf,
    /// Destination of the summary CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Suppress the console table.
    #[arg(long)]
    pub quiet: bool,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn label_for(args: &FitArgs) -> String {
    if let Some(l) = &args.label {
        return l.clone();
    }
    let stem = args.standards.file_stem().and_then(|s| s.to_str()).unwrap_or("sample");
    stem.strip_suffix("_std").unwrap_or(stem).to_string()
}

/// Fits the requested models and returns their reports.
pub fn fit_reports(args: &FitArgs) -> Result<Vec<FitReport>, CliError> {
    let std_bytes = read(&args.standards)?;
    let sample_bytes = read(&args.sample)?;
    let first = parse_first_stage(&std_bytes)?;
    let second = parse_second_stage(&sample_bytes)?;
    let digest = input_digest(&std_bytes, &sample_bytes);
    let label = label_for(args);

    let models: &[Model] = match args.model {
        ModelChoice::Usual => &[Model::Usual],
        ModelChoice::Proposed => &[Model::Proposed],
        ModelChoice::Both => &[Model::Usual, Model::Proposed],
    };
    let opts = Options {
        ci_level: args.level,
        ..Options::default()
    };
    models
        .iter()
        .map(|&model| {
            let fit = match model {
                Model::Usual => fit_usual(&first, &second, args.level)?,
                Model::Proposed => fit_hetero(&first, &second, &opts)?,
            };
            Ok(FitReport {
                model,
                analyte_label: label.clone(),
                fit,
                input_digest: digest.clone(),
            })
        })
        .collect()
}

/// Writes the reports to `out`; non-converged fits are still printed.
pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<ExitClass, CliError> {
    let reports = fit_reports(args)?;
    let rendered = match args.format {
        OutputFormat::Text => render_text(&reports, args.level),
        OutputFormat::Csv => render_csv(&reports),
        OutputFormat::Json => render_json(&reports),
    };
    out.write_all(rendered.as_bytes())?;
    Ok(if reports.iter().all(|r| r.fit.converged) {
        ExitClass::Success
    } else {
        ExitClass::NoConvergence
    })
}

/// Runs every scenario, writes the CSV to `args.out` and the console table to
/// `out`. A scenario in which every replicate failed is reported in its row
/// and makes the exit class `NoConvergence`.
pub fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<ExitClass, CliError> {
    let configs = parse_scenarios(&read(&args.scenarios)?)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::Pool(e.to_string()))?;
    let rows: Vec<_> = configs
        .into_iter()
        .map(|cfg| {
            let outcome = pool.install(|| run_scenario(&cfg));
            (cfg, outcome)
        })
        .collect();
    fs::write(&args.out, render_summary_csv(&rows)).map_err(|source| CliError::Io {
        path: args.out.clone(),
        source,
    })?;
    if !args.quiet {
        out.write_all(render_summary_text(&rows).as_bytes())?;
    }
    Ok(if rows.iter().all(|(_, r)| r.is_ok()) {
        ExitClass::Success
    } else {
        ExitClass::NoConvergence
    })
}
