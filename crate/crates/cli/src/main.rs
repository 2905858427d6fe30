use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use frostsim::simulate::{SimError, Simulation, SimulationConfig};
use frostsim::verify::{self, VerifyError};

/// Heat conduction with water–ice phase change around a vertical well.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a simulation described by a TOML configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the output directory from the configuration.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Print one progress line per step to standard error.
        #[arg(long)]
        verbose: bool,
    },
    /// Parse and check a configuration, build its mesh, then exit.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Closed-form verification cases.
    Oracle {
        #[command(subcommand)]
        case: Oracle,
    },
}

#[derive(Debug, Subcommand)]
enum Oracle {
    /// Melting bar against the similarity solution; prints CSV to standard output.
    Neumann {
        /// Cells along the bar.
        #[arg(long, default_value_t = 40)]
        cells: usize,
        /// Time step in seconds; defaults to 1/400 of the run at 40 cells, scaled with the cell size.
        #[arg(long)]
        tau: Option<f64>,
        /// Stefan number.
        #[arg(long, visible_alias = "stefan", default_value_t = 1.0)]
        beta: f64,
        /// Smoothing half-width in °C; defaults to 0.5 at 40 cells, scaled with the cell size.
        #[arg(long)]
        delta: Option<f64>,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;

fn sim_exit(e: &SimError) -> u8 {
    match e {
        SimError::Solver(_) => EXIT_SOLVER,
        e if e.is_config() => EXIT_CONFIG,
        _ => 1,
    }
}

fn run(config: PathBuf, output: Option<PathBuf>, verbose: bool) -> Result<(), (u8, String)> {
    let mut cfg = SimulationConfig::from_file(&config).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    if let Some(dir) = output {
        cfg.output.dir = dir;
    }
    let fail = |e: SimError| (sim_exit(&e), e.to_string());
    let mut sim = Simulation::new(&cfg).map_err(fail)?;
    eprintln!(
        "mesh: {} nodes, {} cells; {} steps of {} s",
        sim.mesh().num_nodes(),
        sim.mesh().num_cells(),
        sim.total_steps(),
        cfg.time.tau
    );
    let records = if verbose {
        sim.run_to_end_with(Some(&cfg.output.dir), |r| {
            eprintln!(
                "step {} t={} T_air={:.3} columns={} cg={} residual={:.2e} range=[{:.3}, {:.3}]",
                r.step,
                r.t_cur,
                r.t_air,
                u8::from(r.columns_active),
                r.report.iterations,
                r.report.relative_residual,
                r.min,
                r.max
            )
        })
    } else {
        sim.run_to_end(Some(&cfg.output.dir))
    }
    .map_err(fail)?;
    let (min, max, mean) = sim.field().stats();
    eprintln!(
        "done: {} steps, final range [{min:.3}, {max:.3}] mean {mean:.3}, output in {}",
        records.len(),
        cfg.output.dir.display()
    );
    Ok(())
}

fn validate(config: PathBuf) -> Result<(), (u8, String)> {
    let cfg = SimulationConfig::from_file(&config).map_err(|e| (EXIT_CONFIG, e.to_string()))?;
    let sim = Simulation::new(&cfg).map_err(|e| (sim_exit(&e), e.to_string()))?;
    println!(
        "ok: {} nodes, {} cells, regions {:?}, boundary tags {:?}, {} steps",
        sim.mesh().num_nodes(),
        sim.mesh().num_cells(),
        sim.mesh().region_tags(),
        sim.mesh().facet_tags(),
        sim.total_steps()
    );
    Ok(())
}

fn neumann(
    cells: usize,
    tau: Option<f64>,
    beta: f64,
    delta: Option<f64>,
) -> Result<(), (u8, String)> {
    let fail = |e: VerifyError| {
        let code = match e {
            VerifyError::NotConverged { .. } => EXIT_SOLVER,
            VerifyError::Stefan(_) | VerifyError::Setup(_) => EXIT_CONFIG,
            _ => 1,
        };
        (code, e.to_string())
    };
    let tau = match tau {
        Some(t) => t,
        None => verify::default_tau(cells.max(1), beta).map_err(fail)?,
    };
    let delta = delta.unwrap_or_else(|| verify::default_delta(cells.max(1)));
    let report = verify::run_neumann_benchmark(cells, tau, delta, beta).map_err(fail)?;
    print!("{}", report.to_csv());
    eprintln!(
        "cells {cells}, tau {tau} s, delta {delta}, lambda {:.15}, max relative front error {:.6}",
        report.case.lambda, report.max_relative_error
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            verbose,
        } => run(config, output, verbose),
        Command::Validate { config } => validate(config),
        Command::Oracle {
            case:
                Oracle::Neumann {
                    cells,
                    tau,
                    beta,
                    delta,
                },
        } => neumann(cells, tau, beta, delta),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
