use std::path::PathBuf;
use std::process::ExitCode;

use chemo_core::Scheme;
use chemo_sim::commands::{self, EXIT_ERROR};
use chemo_sim::config::Overrides;
use clap::{Args, Parser, Subcommand};

/// Attraction-repulsion chemotaxis simulator.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write diagnostics, snapshots and a summary.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Print the analytic bounds report as JSON.
    Bounds {
        config: PathBuf,
        /// Energy exponent (default 3n/4).
        #[arg(long)]
        p: Option<f64>,
    },
    /// Run the config's parameter sweep and write a regime map.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Print the predicted regime for the config's parameters and mass.
    Classify { config: PathBuf },
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    snapshot_every: Option<u64>,
    #[arg(long)]
    blowup_threshold: Option<f64>,
    /// explicit-upwind or imex-diffusion
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            t_end: a.t_end,
            snapshot_every: a.snapshot_every,
            blowup_threshold: a.blowup_threshold,
            scheme: a.scheme,
            out_dir: a.out,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate { config, overrides } => commands::cmd_simulate(&config, &overrides.into()),
        Command::Bounds { config, p } => commands::cmd_bounds(&config, p),
        Command::Sweep { config, overrides } => commands::cmd_sweep(&config, &overrides.into()),
        Command::Classify { config } => commands::cmd_classify(&config),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
