use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rydcoul::Error;
use rydcoul_cli::config::Kind;
use rydcoul_cli::{run, RunOptions, ScenarioConfig, SnapshotFormat};

#[derive(Parser)]
#[command(name = "rydcoul", version, about = "Two-polariton Coulomb bound states: spectra, WKB and time evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact and WKB dispersion branches.
    Dispersion(Common),
    /// WKB roots, phase integrals and branch slopes.
    Wkb(Common),
    /// Spectral decomposition of Coulomb states.
    Decompose(Common),
    /// Time evolution of a variational wavepacket.
    Evolve(Common),
    /// Effective potential profile.
    Potential(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum SnapFmt {
    Csv,
    JsonGz,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[arg(long, value_enum, default_value_t = SnapFmt::Csv)]
    snapshot_format: SnapFmt,
}

fn execute(kind: Kind, c: &Common) -> Result<PathBuf, Error> {
    let text = std::fs::read_to_string(&c.config).map_err(|e| Error::Config(format!("{}: {e}", c.config.display())))?;
    let cfg = ScenarioConfig::from_json(&text)?;
    if cfg.kind != kind {
        return Err(Error::Config(format!("scenario kind '{}' does not match subcommand '{}'", cfg.kind.as_str(), kind.as_str())));
    }
    cfg.validate()?;
    if c.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(c.threads)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let snapshot_format = match c.snapshot_format {
        SnapFmt::Csv => SnapshotFormat::Csv,
        SnapFmt::JsonGz => SnapshotFormat::JsonGz,
    };
    let out = run(&cfg, RunOptions { snapshot_format })?;
    out.commit(&c.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Dispersion(c) => (Kind::Dispersion, c),
        Command::Wkb(c) => (Kind::Wkb, c),
        Command::Decompose(c) => (Kind::Decompose, c),
        Command::Evolve(c) => (Kind::Evolve, c),
        Command::Potential(c) => (Kind::Potential, c),
    };
    match execute(kind, common) {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
