use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke::commands;
use dicke::config::{parse_list, parse_window, Overrides, RunConfig};
use dicke::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "dicke", version, about = "Phase-space localization and scarring in the Dicke model")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    j: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Energy window `lo,hi`.
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f64, f64)>,
    /// Comma-separated α values.
    #[arg(long, global = true, allow_hyphen_values = true)]
    alpha: Option<String>,
    /// Shell Monte Carlo proposals per shell.
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cells per axis of the projected grids.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Cache root (default: $DICKE_CACHE_DIR, then <out-dir>/cache).
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Diagonalize, filter converged states and summarize the window.
    Spectrum,
    /// Rényi occupations and localization measures of the window states.
    Occupations,
    /// Projected Husimi moment grids.
    HusimiGrid {
        /// `most-localized:N` or comma-separated state indices.
        #[arg(long)]
        states: Option<String>,
        /// Also render PNG images.
        #[arg(long)]
        png: bool,
    },
    /// Hunt unstable periodic orbits from Husimi peaks.
    OrbitHunt {
        #[arg(long)]
        states: Option<String>,
    },
    /// Scarring measure of states against cataloged orbits.
    ScarMeasure {
        #[arg(long)]
        states: Option<String>,
        /// Comma-separated orbit ids (default: all).
        #[arg(long)]
        orbits: Option<String>,
    },
    /// Semiclassical density of states.
    Dos {
        /// Also write the quantum level staircase up to this energy.
        #[arg(long, allow_hyphen_values = true)]
        staircase: Option<f64>,
    },
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let c = cli.common;
    let mut config = RunConfig::load(c.config.as_deref())?;
    let mut o = Overrides {
        j: c.j,
        gamma: c.gamma,
        window: c.window,
        alphas: c.alpha.as_deref().map(parse_list).transpose().map_err(|e| CliError::Config(format!("bad --alpha: {e}")))?,
        samples: c.samples,
        seed: c.seed,
        grid: c.grid,
        cache_dir: c.cache_dir,
        out_dir: c.out_dir,
        threads: c.threads,
        ..Default::default()
    };
    match &cli.command {
        Command::HusimiGrid { states, png } => {
            o.states = states.clone();
            o.png = *png;
        }
        Command::OrbitHunt { states } | Command::ScarMeasure { states, .. } => o.states = states.clone(),
        _ => {}
    }
    config.apply(&o);
    match cli.command {
        Command::Spectrum => commands::spectrum(config),
        Command::Occupations => commands::occupations(config),
        Command::HusimiGrid { .. } => commands::husimi_grid(config),
        Command::OrbitHunt { .. } => commands::orbit_hunt(config),
        Command::ScarMeasure { orbits, .. } => {
            let ids = orbits
                .map(|s| {
                    s.split(',')
                        .map(|t| t.trim().parse::<usize>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| CliError::Config(format!("orbit ids must be integers, got '{s}'")))
                })
                .transpose()?;
            commands::scar_measure(config, ids)
        }
        Command::Dos { staircase } => commands::dos(config, staircase),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(manifest) => {
            log::info!("manifest written to {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
