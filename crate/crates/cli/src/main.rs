use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deformed_ginibre::runner::{self, Command, Overrides, RunManifest, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "dgin", version, about = "Deformed Ginibre ensemble verification lab")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Matrix dimension
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Monte Carlo trials
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads (results do not depend on it)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Deterministic equivalents and assumption checks at z0
    Detequiv,
    /// Boundary of the limiting support on a grid
    Support,
    /// Sample eigenvalues and write them per trial
    Simulate,
    /// Pair correlation estimate (against the exact curve when A0 = 0)
    Localstats,
    /// Pair correlation against 1 - exp(-rho r^2)
    Universality,
    /// Girko log-potential identity for one sample
    Girko,
    /// Grassmann / supermatrix identity battery
    VerifySusy,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Detequiv => Command::DetEquiv,
            Cmd::Support => Command::Support,
            Cmd::Simulate => Command::Simulate,
            Cmd::Localstats => Command::LocalStats,
            Cmd::Universality => Command::Universality,
            Cmd::Girko => Command::Girko,
            Cmd::VerifySusy => Command::VerifySusy,
        }
    }
}

/// `--out` from raw arguments, for the manifest of a run whose arguments did
/// not parse.
fn raw_out_dir() -> PathBuf {
    let args: Vec<String> = std::env::args().collect();
    args.iter()
        .enumerate()
        .find_map(|(i, a)| {
            a.strip_prefix("--out=").map(PathBuf::from).or_else(|| (a == "--out").then(|| args.get(i + 1).map(PathBuf::from)).flatten())
        })
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let mut manifest = RunManifest::start("usage");
            manifest.finish(EXIT_USAGE, Some(e.to_string()));
            let _ = manifest.write(&raw_out_dir());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let overrides = Overrides { seed: cli.seed, n: cli.n, trials: cli.trials, threads: cli.threads, out: cli.out };
    let command = Command::from(cli.command);
    let outcome = runner::execute(command, cli.config.as_deref(), &overrides);
    let status = match outcome.exit_code {
        0 => "ok",
        2 => "outside bulk",
        64 => "usage error",
        _ => "FAILED",
    };
    println!("{command}: {status}: {}", outcome.summary);
    println!("manifest: {}", outcome.out_dir.join(runner::manifest::MANIFEST_FILE).display());
    ExitCode::from(outcome.exit_code as u8)
}
