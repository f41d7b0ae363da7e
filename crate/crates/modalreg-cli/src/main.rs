//! Command-line front end for nonparametric modal regression.

mod commands;
mod io;

use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{
    ClusterArgs, ConfidenceArgs, ExperimentCmd, FitArgs, GenArgs, PredictArgs, RidgeCheckArgs,
    SelectHArgs,
};

#[derive(Debug, Parser)]
#[command(name = "modalreg", version, about = "Nonparametric modal regression toolkit")]
struct Cli {
    /// Worker-thread cap (falls back to MODALREG_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Draw a synthetic sample from a mixture spec.
    Gen(GenArgs),
    /// Estimate the modal set over a mesh.
    Fit(FitArgs),
    /// Bootstrap confidence bands around the modal set.
    Confidence(ConfidenceArgs),
    /// Prediction bands and their volume.
    Predict(PredictArgs),
    /// Bandwidth selection by prediction-set volume.
    #[command(name = "select-h")]
    SelectH(SelectHArgs),
    /// Cluster observations by mean-shift destination.
    Cluster(ClusterArgs),
    /// Ridge-membership diagnostics at the estimated modes.
    #[command(name = "ridge-check")]
    RidgeCheck(RidgeCheckArgs),
    /// Monte Carlo studies.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

fn init_threads(cap: Option<usize>) -> Result<()> {
    let cap = cap.or_else(|| {
        std::env::var("MODALREG_THREADS").ok().and_then(|raw| raw.parse().ok())
    });
    if let Some(threads) = cap {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    Ok(())
}

fn dispatch(cmd: &Cmd) -> Result<()> {
    match cmd {
        Cmd::Gen(args) => commands::gen(args),
        Cmd::Fit(args) => commands::fit(args),
        Cmd::Confidence(args) => commands::confidence(args),
        Cmd::Predict(args) => commands::predict(args),
        Cmd::SelectH(args) => commands::select_h(args),
        Cmd::Cluster(args) => commands::cluster(args),
        Cmd::RidgeCheck(args) => commands::ridge_check(args),
        Cmd::Experiment(ExperimentCmd::Rate(args)) => commands::experiment_rate(args),
        Cmd::Experiment(ExperimentCmd::Coverage(args)) => commands::experiment_coverage(args),
    }
}

/// Machine-readable failure report for stderr.
#[derive(Serialize)]
struct ErrorReport {
    error: ErrorBody,
}

#[derive(Serialize)]
struct ErrorBody {
    kind: &'static str,
    message: String,
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    use modalreg::ModalError;
    if let Some(me) = err.downcast_ref::<ModalError>() {
        return match me {
            ModalError::InvalidArgument(_) => "invalid_argument",
            ModalError::LowDensity { .. } => "low_density",
            ModalError::DegenerateCurvature { .. } => "degenerate_curvature",
            ModalError::NoModes { .. } => "no_modes",
            ModalError::UnreachableMass { .. } => "unreachable_mass",
            ModalError::SelectionFailure => "selection_failure",
            ModalError::Unsupported(_) => "unsupported",
        };
    }
    if err.downcast_ref::<csv::Error>().is_some()
        || err.downcast_ref::<std::num::ParseFloatError>().is_some()
        || err.downcast_ref::<serde_json::Error>().is_some()
    {
        return "parse";
    }
    if err.downcast_ref::<std::io::Error>().is_some() {
        return "io";
    }
    "cli"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = init_threads(cli.threads).and_then(|()| dispatch(&cli.cmd));
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let report = ErrorReport {
                error: ErrorBody { kind: error_kind(&err), message: format!("{err:#}") },
            };
            eprintln!("{}", serde_json::to_string(&report).expect("error report serializes"));
            ExitCode::FAILURE
        }
    }
}
