use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use atlas_core::report::{self, RunConfig};
use atlas_core::scenarios::Representation;
use atlas_core::Error;

#[derive(Parser)]
#[command(
    name = "atlas",
    version,
    about = "Collaboration distance and knowledge flow between countries from OpenAlex counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Serve every request from recorded fixtures; a missing fixture is an error.
    #[arg(long, global = true)]
    offline: bool,
    /// Snapshot id to read; defaults to the latest fetched snapshot.
    #[arg(long, global = true)]
    snapshot: Option<String>,
    /// Use -ln D instead of D for time series and projections.
    #[arg(long, global = true)]
    rescaled: bool,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Fetch (or replay) all configured queries and store a snapshot.
    Fetch,
    /// Distance matrices and pairwise series.
    Distance,
    /// Knowledge flow rates per discipline and aggregated.
    Kfr,
    /// Tetrahedron and triangle geometry.
    Geometry,
    /// Scenario projections of the configured pair.
    Simulate,
}

fn run(cli: &Cli) -> Result<(), Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Argument("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if cli.rescaled {
        cfg.representation = Representation::Rescaled;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Command::Fetch = cli.command {
        let id = report::cmd_fetch(&cfg, cli.offline)?;
        println!("{id}");
        return Ok(());
    }
    let snapshot = report::open_snapshot(&cfg, cli.snapshot.as_deref())?;
    let files = match cli.command {
        Command::Distance => report::cmd_distance(&snapshot, &cfg, &cfg.out)?,
        Command::Kfr => report::cmd_kfr(&snapshot, &cfg, &cfg.out)?,
        Command::Geometry => report::cmd_geometry(&snapshot, &cfg, &cfg.out)?,
        Command::Simulate => report::cmd_simulate(&snapshot, &cfg, &cfg.out)?,
        Command::Fetch => unreachable!(),
    };
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("atlas: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
