mod bench;
mod config;
mod error;
mod pipe;
mod sample;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dikin_core::walk::HessianMode;

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "dikin", version, about = "Soft-threshold Dikin walk sampler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a chain and write samples and a run report.
    Sample(Common),
    /// Run numerical checks of the barrier and walk properties.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Checks to run, e.g. `nu_symmetry` or `det_ratio d=6 eps=0.01`.
        #[arg(long, value_delimiter = ',')]
        check: Vec<String>,
    },
    /// Time exact and approximate metric evaluation.
    Bench(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Approx,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(mode) = self.mode {
            cfg.set_mode(match mode {
                Mode::Exact => HessianMode::Exact,
                Mode::Approx => HessianMode::Approx,
            });
        }
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Sample(c) => sample::run(c.load()?, &c.out),
        Command::Verify { common, check } => verify::run(common.load()?, &check, &common.out),
        Command::Bench(c) => bench::run(c.load()?, &c.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
