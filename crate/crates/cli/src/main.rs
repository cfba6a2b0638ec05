use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use choreo_cli::commands;
use choreo_cli::schema::Overrides;
use choreo_cli::CliResult;

#[derive(Parser)]
#[command(name = "choreo", version, about = "Plan, compensate and simulate drone swarm shows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Plan every transition of a show file and write the trajectory artifacts.
    Plan {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Polynomial degree for all transitions.
        #[arg(long)]
        degree: Option<usize>,
        /// Initial number of constraint steps.
        #[arg(long)]
        k0: Option<usize>,
        /// Sweeps over the collision graph.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Add amplitude and phase compensation to the primitive pieces of a plan.
    Compensate {
        /// Plan directory.
        #[arg(long)]
        input: PathBuf,
        /// Response table CSV; defaults to the table named in the show.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fly a plan through the vehicle model.
    Simulate {
        /// Plan directory.
        #[arg(long)]
        input: PathBuf,
        /// Vehicle model JSON (one model or one per drone).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Plan seeded random primitive pairs and report the feasible fraction.
    Sweep {
        /// Sweep configuration JSON.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        k0: Option<usize>,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Measure the vehicle model's frequency response and write it as a table.
    Bode {
        /// Vehicle model JSON.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Excitation JSON with `frequencies` and optional `amplitude`.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Plan { input, out, degree, k0, max_iters } => {
            let o = commands::plan(&input, &out, &Overrides { degree, k0, max_iters })?;
            let edges: usize = o.report.transitions.iter().map(|t| t.initial_edges).sum();
            Ok(format!(
                "planned {} drones over {} transitions ({} initial conflicts resolved) into {}",
                o.show.drones,
                o.show.transitions.len(),
                edges,
                out.display()
            ))
        }
        Command::Compensate { input, table, out } => {
            let r = commands::compensate_plan(&input, table.as_deref(), &out)?;
            for axis in &r.missing_axes {
                eprintln!("warning: table has no rows for axis {axis}; using the identity response");
            }
            for c in &r.clamped {
                eprintln!(
                    "warning: drone {} segment {}: frequencies {:?} outside the table, clamped",
                    c.drone, c.segment, c.frequencies
                );
            }
            Ok(format!("compensated plan written to {}", out.display()))
        }
        Command::Simulate { input, model, out } => {
            let r = commands::simulate(&input, model.as_deref(), &out)?;
            let worst = r.metrics.rms_error.iter().copied().fold(0.0, f64::max);
            Ok(format!(
                "simulated {} drones, worst RMS error {:.4} m, min separation {:.3}",
                r.drones, worst, r.metrics.min_separation
            ))
        }
        Command::Sweep { input, out, seed, trials, degree, k0, max_iters } => {
            let mut config = commands::load_sweep_config(input.as_deref())?;
            config.seed = seed.unwrap_or(config.seed);
            config.trials = trials.unwrap_or(config.trials);
            config.degree = degree.or(config.degree);
            config.k0 = k0.or(config.k0);
            config.max_iters = max_iters.or(config.max_iters);
            let (r, t) = commands::sweep(&config, &out)?;
            Ok(format!(
                "feasible {}/{} ({:.2}), median {:.2} s, p90 {:.2} s, total {:.1} s",
                r.feasible,
                r.trials.len(),
                r.fraction,
                t.p50_s,
                t.p90_s,
                t.total_s
            ))
        }
        Command::Bode { model, input, out } => {
            let table = commands::bode(model.as_deref(), input.as_deref(), &out)?;
            Ok(format!("{} frequencies written to {}", table.axis(0).len(), out.display()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
