use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fch_cli::config::{parse_assignment, parse_assignments};
use fch_cli::{cmd_convergence, cmd_inspect, cmd_run, CliError, RunConfig};

#[derive(Parser)]
#[command(name = "fch", version, about = "Functionalized Cahn-Hilliard simulations on periodic grids")]
struct Cli {
    /// Configuration file of `section.key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one key, e.g. `--set phys.eps=0.02`. Repeatable; applied after the file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Random seed for the initial state.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario with adaptive time stepping.
    Run,
    /// Manufactured-solution convergence study.
    Convergence,
    /// Print a snapshot header and field statistics.
    Inspect { path: PathBuf },
}

fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut pairs = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            parse_assignments(&text)?
        }
        None => Vec::new(),
    };
    for s in &cli.set {
        pairs.push(parse_assignment(s)?);
    }
    if let Some(out) = &cli.out {
        pairs.push(("output.dir".into(), out.display().to_string()));
    }
    if let Some(seed) = cli.seed {
        pairs.push(("run.seed".into(), seed.to_string()));
    }
    RunConfig::from_assignments(&pairs)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run => {
            let cfg = resolve(cli)?;
            let s = cmd_run(&cfg)?;
            println!("{} steps to t = {}, {} snapshots in {}", s.steps, s.t, s.snapshots.len(), cfg.output.dir.display());
        }
        Command::Convergence => {
            let cfg = resolve(cli)?;
            print!("{}", cmd_convergence(&cfg)?.table());
        }
        Command::Inspect { path } => print!("{}", cmd_inspect(path)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fch: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
