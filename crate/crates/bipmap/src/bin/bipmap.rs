use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use bipmap::cli::dispatch;
use bipmap::config::{Command, Format, RunConfig};
use bipmap::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bipmap", version, about = "Random bipartite planar maps from weighted trees")]
struct Cli {
    #[command(subcommand)]
    command: Verb,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags below override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// output directory
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    format: Option<Format>,
}

#[derive(Subcommand, Clone, Copy)]
enum Verb {
    /// Tilted offspring law, derived laws and phase of a weight sequence
    AnalyzeWeights,
    /// Simply generated trees with n edges
    SampleTree,
    /// Labelled mobiles with n edges
    SampleMobile,
    /// Pointed bipartite maps with n edges
    SampleMap,
    /// Certified balls of the local limit
    LimitBall,
    /// Random walk return counts on limit balls
    Walk,
    /// Spectral dimension fit over an ensemble of limit balls
    SpectralRun,
    /// Volume, effective resistance and shorting checks on limit balls
    ResistanceRun,
    /// Exhaustive bijection, measure and counting checks
    Verify,
    /// DOT drawing of maps read from `input` or sampled
    ExportDot,
}

impl From<Verb> for Command {
    fn from(v: Verb) -> Command {
        match v {
            Verb::AnalyzeWeights => Command::AnalyzeWeights,
            Verb::SampleTree => Command::SampleTree,
            Verb::SampleMobile => Command::SampleMobile,
            Verb::SampleMap => Command::SampleMap,
            Verb::LimitBall => Command::LimitBall,
            Verb::Walk => Command::Walk,
            Verb::SpectralRun => Command::SpectralRun,
            Verb::ResistanceRun => Command::ResistanceRun,
            Verb::Verify => Command::Verify,
            Verb::ExportDot => Command::ExportDot,
        }
    }
}

fn run(cli: Cli) -> Result<i32, Error> {
    let mut cfg = match &cli.common.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let command = Command::from(cli.command);
    if let Some(c) = cfg.command {
        if c != command {
            return Err(Error::Config(format!("/command: config says {}, command line says {}", c.name(), command.name())));
        }
    }
    cfg.command = Some(command);
    if let Some(s) = cli.common.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.common.format {
        cfg.format = f;
    }
    if let Some(j) = cli.common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Error::Config(format!("--jobs: {e}")))?;
    }
    let outcome = dispatch(&cfg, &cli.common.out)?;
    let _ = writeln!(std::io::stdout(), "{}", serde_json::to_string_pretty(&outcome.summary)?);
    for f in &outcome.files {
        eprintln!("wrote {}", cli.common.out.join(f).display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bipmap: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
