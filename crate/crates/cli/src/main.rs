//! `hflow`: run the equivariant harmonic map heat flow and its checks.
//!
//! Exit codes: 0 success, 2 invalid input or violated hypothesis,
//! 3 flow did not converge, 4 internal error.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand, ValueEnum};
use commands::{Common, NonConvergence, ValidationFailure};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hflow", version, about = "Equivariant harmonic maps to H^3 by heat flow")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.directory).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Mesh refinement level (overrides flow.refinement).
    #[arg(long, global = true)]
    refine: Option<u32>,
    /// RNG seed (overrides seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write SVG plots.
    #[arg(long, global = true)]
    plots: Option<Toggle>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate the surface, framing, end types and principal parts.
    Check,
    /// Build the framed representation from the coordinates.
    BuildRep,
    /// Assemble and sample the smoothed domain metric of the model differential.
    MakeMetric,
    /// Build the fixture's initial map and report its energy and tension.
    InitMap,
    /// Run the heat flow.
    Flow,
    /// Summarise a finished run directory.
    Report {
        /// Run directory (defaults to --out).
        dir: Option<PathBuf>,
    },
    /// Tabulate the metric interpolations near a zero and a simple pole.
    InterpDemo {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        pole_eps: f64,
    },
    /// Run the fast invariant suite.
    Validate,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = Common { out: cli.out.clone(), refine: cli.refine, seed: cli.seed, plots: cli.plots.map(|t| matches!(t, Toggle::On)) };
    let cfg = match &cli.config {
        Some(p) => Some(config::load(p).map_err(|e| ValidationFailure(vec![e.to_string()]))?),
        None => None,
    };
    let need = || cfg.as_ref().ok_or_else(|| commands::invalid("this subcommand needs --config"));
    match cli.cmd {
        Cmd::Check => commands::check(need()?, &common),
        Cmd::BuildRep => commands::build_rep(need()?, &common),
        Cmd::MakeMetric => commands::make_metric(need()?, &common),
        Cmd::InitMap => commands::init_map(need()?, &common),
        Cmd::Flow => commands::flow_cmd(need()?, &common),
        Cmd::Report { dir } => {
            let dir = dir.or(cli.out).ok_or_else(|| commands::invalid("report needs a run directory"))?;
            commands::report(&dir)
        }
        Cmd::InterpDemo { n, eps, pole_eps } => commands::interp_demo(n, eps, pole_eps, &common),
        Cmd::Validate => commands::validate(cfg.as_ref(), &common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ValidationFailure>().is_some() {
                ExitCode::from(2)
            } else if e.downcast_ref::<NonConvergence>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(4)
            }
        }
    }
}
