use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use taxis_cli::commands::{cmd_audit, cmd_run, cmd_sweep, cmd_validate, cmd_weak, AuditOptions};

#[derive(Parser)]
#[command(name = "taxis", version, about = "Forager-scrounger-nutrient taxis simulator and estimate auditor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check initial data and resupply admissibility.
    Validate { config: PathBuf },
    /// Simulate and write diagnostics, snapshots and a run report.
    Run {
        config: PathBuf,
        /// Output directory (overrides [output] directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the differential inequalities and bounds of a finished run.
    Audit {
        run_dir: PathBuf,
        /// Search for the smallest feasible constant C.
        #[arg(long = "bisect-C")]
        bisect_c: bool,
        #[arg(long = "C")]
        c: Option<f64>,
        #[arg(long = "M")]
        m: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Evaluate the weak-solution criteria against random test functions.
    Weak {
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regularization refinement study.
    Sweep {
        config: PathBuf,
        /// Comma-separated, non-increasing epsilon values.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    Ok(match cli.command {
        Command::Validate { config } => {
            let rep = cmd_validate(&config)?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            for v in &rep.initial.violations {
                eprintln!("initial data: {v}");
            }
            if !rep.resupply.admissible {
                eprintln!("resupply: not admissible");
            }
            status(rep.admissible)
        }
        Command::Run { config, out } => {
            let (rep, dir) = cmd_run(&config, out.as_deref())?;
            println!(
                "t = {} after {} steps; mass drift {:.3e}; w bound {}; artifacts in {}",
                rep.t_reached,
                rep.steps,
                rep.mass.max_rel_deviation,
                if rep.w_bound.pass { "ok" } else { "violated" },
                dir.display()
            );
            if let Some(flag) = rep.all_no_growth {
                println!("boundedness monitor: {}", if flag { "no growth" } else { "growth detected" });
            }
            if let Some(a) = &rep.abort {
                eprintln!("aborted at t = {} ({}): {}", a.t, a.invariant, a.message);
            }
            status(rep.completed)
        }
        Command::Audit { run_dir, bisect_c, c, m, delta, lambda } => {
            let rep = cmd_audit(&run_dir, &AuditOptions { bisect_c, c, m, delta, lambda })?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            status(rep.all_pass)
        }
        Command::Weak { config, n, seed, out } => {
            let rep = cmd_weak(&config, n, seed, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&rep)?);
            status(rep.all_pass)
        }
        Command::Sweep { config, eps, out } => {
            let table = cmd_sweep(&config, &eps, out.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&table)?);
            status(table.failures.is_empty())
        }
    })
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
