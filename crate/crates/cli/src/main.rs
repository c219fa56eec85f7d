use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{CommandFactory, Parser, ValueEnum};

use smallcost_cli::config::{self, CommandName, EmptyConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Ntregion,
    Simulate,
    Welfare,
    Solve,
    Convergence,
}

impl Cmd {
    fn name(self) -> CommandName {
        match self {
            Self::Ntregion => CommandName::Ntregion,
            Self::Simulate => CommandName::Simulate,
            Self::Welfare => CommandName::Welfare,
            Self::Solve => CommandName::Solve,
            Self::Convergence => CommandName::Convergence,
        }
    }
}

/// Transaction-cost asymptotics: no-trade regions, simulation, welfare and
/// the ergodic corrector solver.
///
/// Configs are single JSON documents with the keys `command`, `model`
/// (`kim_omberg`, `black_scholes`, `multi_asset` or `corrector`),
/// `preferences`, `costs`, `numerics`, `output` and `note`; unknown keys are
/// rejected. The correlation `rho` defaults to 0 when omitted. The
/// environment variable SMALLCOST_THREADS caps the worker threads.
#[derive(Debug, Parser)]
#[command(name = "smallcost", version)]
struct Cli {
    command: Cmd,
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `numerics.paths.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn threads() -> Result<()> {
    let Ok(v) = std::env::var("SMALLCOST_THREADS") else { return Ok(()) };
    let n: usize = v.trim().parse().with_context(|| format!("SMALLCOST_THREADS={v:?} is not a count"))?;
    if n == 0 {
        anyhow::bail!("SMALLCOST_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let loaded = match config::load(&cli.config) {
        Ok(l) => l,
        Err(e) if e.is::<EmptyConfig>() => {
            eprintln!("error: {} is empty\n", cli.config.display());
            eprintln!("{}", Cli::command().render_help());
            return ExitCode::from(2);
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::FAILURE;
        }
    };
    if loaded.config.command != cli.command.name() {
        eprintln!(
            "error: {} is a `{}` config, not `{}`",
            cli.config.display(),
            loaded.config.command.as_str(),
            cli.command.name().as_str()
        );
        return ExitCode::FAILURE;
    }
    if let Err(e) = threads() {
        eprintln!("error: {e:#}");
        return ExitCode::FAILURE;
    }
    match smallcost_cli::run(&loaded, &cli.out, cli.seed) {
        Ok(out) => {
            for line in &out.summary {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
