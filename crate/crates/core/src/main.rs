use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ptypes::experiment::{output_path, run, Command, ExperimentConfig, Kind};
use ptypes::Error;

#[derive(Parser)]
#[command(name = "ptypes", version, about = "Method-of-types checks and random-coding sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config's output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report rates in bits.
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Counting identities, Stirling convergence and integral oracles.
    Claims,
    /// Simulated success rate against the prediction over an (n, rate) grid.
    Sweep,
    /// Channel capacity by Blahut–Arimoto.
    Capacity,
    /// Rate-distortion curve over a grid of D.
    RdCurve,
    /// Closed-form simplex integrals against quadrature or Monte Carlo.
    Integrals,
}

fn load(cli: &Cli, command: Command) -> Result<ExperimentConfig, Error> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            ExperimentConfig::from_json(&text)?
        }
        None => match command {
            Command::Claims => ExperimentConfig::defaults(Kind::Claims),
            Command::Integrals => ExperimentConfig::defaults(Kind::Integrals),
            _ => return Err(Error::ConfigInvalid("this subcommand needs --config".into())),
        },
    };
    if cli.seed.is_some() {
        config.seed = cli.seed;
    }
    config.bits |= cli.bits;
    Ok(config)
}

fn execute(cli: &Cli) -> Result<bool, Error> {
    let command = match cli.command {
        Sub::Claims => Command::Claims,
        Sub::Sweep => Command::Sweep,
        Sub::Capacity => Command::Capacity,
        Sub::RdCurve => Command::RdCurve,
        Sub::Integrals => Command::Integrals,
    };
    let config = load(cli, command)?;
    let path = output_path(&config, cli.out.clone())?;
    let output = run(command, &config)?;
    std::fs::write(&path, output.csv).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(output.all_passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
