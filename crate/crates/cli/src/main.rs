use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsv_core::harness::{
    cmd_chain, cmd_gevrey, cmd_scales, cmd_simulate, cmd_steady, load_config, ExperimentConfig,
};
use nsv_core::{NsvError, Result};

#[derive(Parser)]
#[command(name = "nsv", version, about = "Navier-Stokes-Voight experiments on a periodic box")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Run directory; defaults to `output_dir` from the config.
    #[arg(long, global = true, value_name = "PATH")]
    run_dir: Option<PathBuf>,

    /// Overrides `[run] seed`.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Relaxes the three split conditions by FACTOR (labels the plan as
    /// outside the theorem's hypotheses).
    #[arg(long, global = true, value_name = "FACTOR")]
    relaxed_lambda: Option<f64>,

    /// Overrides `[chain] m_max`.
    #[arg(long, global = true, value_name = "INT")]
    m_max: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate the configured run and write checkpoints and the energy budget.
    Simulate,
    /// Rebuild the approximation chain from a run's checkpoints.
    Chain,
    /// Split plan, high-mode evolution, spectrum fits and length scales.
    Gevrey,
    /// Stationary solution and its analyticity bound.
    Steady,
    /// Length-scale report from a run's energy budget.
    Scales,
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| NsvError::Config("--config PATH is required".into()))?;
    let mut config = load_config(path)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(r) = cli.relaxed_lambda {
        config.gevrey.relaxed = Some(r);
    }
    if let Some(m) = cli.m_max {
        config.m_max = m;
    }
    config.validate()?;
    Ok(config)
}

fn run(cli: &Cli) -> Result<()> {
    let config = effective_config(cli)?;
    let run_dir = cli.run_dir.clone().unwrap_or_else(|| config.output_dir.clone());
    match cli.command {
        Command::Simulate => {
            let s = cmd_simulate(&config, &run_dir)?;
            println!(
                "simulate: {} steps of dt = {:.6e}, {} checkpoints, t0 = {}, max relative budget residual {:.3e}",
                s.steps,
                s.dt,
                s.checkpoints,
                s.t0.map_or_else(|| "not detected".to_string(), |t| format!("{t:.6e}")),
                s.max_relative_residual
            );
        }
        Command::Chain => {
            let s = cmd_chain(&config, &run_dir)?;
            for l in &s.report.levels {
                println!(
                    "chain: level {} terminal error {:.6e} (relative {:.3e}), trending down: {}",
                    l.index, l.terminal_error, l.terminal_relative_error, l.trending_down
                );
            }
        }
        Command::Gevrey => {
            let s = cmd_gevrey(&config, &run_dir)?;
            println!(
                "gevrey: lambda = {:.6e}, tau = {:.6e}{}",
                s.plan.lambda,
                s.plan.tau,
                if s.plan.outside_hypotheses() {
                    " (outside theorem hypotheses)"
                } else {
                    ""
                }
            );
            for p in &s.profiles {
                match p.tau_star {
                    Some(tau) => println!("gevrey: t = {:.6e} tau* = {tau:.6e} r2 = {:.6}", p.t, p.r2),
                    None => println!("gevrey: t = {:.6e} no exponential range", p.t),
                }
            }
        }
        Command::Steady => {
            let r = cmd_steady(&config, &run_dir)?;
            println!(
                "steady: converged in {} iterates, residual {:.3e}, tau_B = {:.6e}",
                r.solution.iterations, r.solution.residual, r.blow_up.tau_b
            );
        }
        Command::Scales => {
            let s = cmd_scales(&config, &run_dir)?;
            println!("scales: ell_K = {:.6e}, ell_NSV = {:.6e}", s.ell_k, s.ell_nsv);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nsv: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
