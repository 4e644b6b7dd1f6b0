use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use haar_bloom::experiments::{
    cmd_commutator, cmd_identities, cmd_jn, cmd_khintchine, cmd_paraproduct, summary_path,
    write_ratio_outputs, ExperimentConfig, ModeKind, RatioReport, SymbolSource,
};
use haar_bloom::norms::StrategyKind;
use haar_bloom::Result;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "haar-bloom",
    version,
    about = "Dyadic biparameter commutator and Bloom BMO experiments"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact operator identities on random inputs
    Identities(Opts),
    /// Bloom-weight BMO against two-weight BMO
    Jn(Opts),
    /// Iterated Haar multiplier commutators against BMO
    Commutator(Opts),
    /// Rademacher chaos moments
    Khintchine(Opts),
    /// Paraproduct norms against BMO
    Paraproduct(Opts),
}

#[derive(clap::Args)]
struct Opts {
    #[arg(long, default_value_t = 2)]
    depth: u32,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Weight strengths, comma separated; each gets `--trials` trials
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    delta: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Strategy::Exact)]
    strategy: Strategy,
    #[arg(long, value_enum, default_value_t = Mode::Exhaustive)]
    mode: Mode,
    /// Sign pairs per trial in sampled mode
    #[arg(long, default_value_t = 64)]
    samples: usize,
    /// Random restarts for heuristic BMO and p != 2 norm searches
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    /// Use b = c instead of a random symbol
    #[arg(long)]
    constant_symbol: Option<f64>,
    /// CSV output; the JSON summary goes next to it with a .json extension
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy)]
enum Strategy {
    Exact,
    Heuristic,
}

#[derive(ValueEnum, Clone, Copy)]
enum Mode {
    Exhaustive,
    Sampled,
}

impl Opts {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            depth: self.depth,
            p: self.p,
            deltas: self.delta.clone(),
            trials: self.trials,
            seed: self.seed,
            strategy: match self.strategy {
                Strategy::Exact => StrategyKind::Exact,
                Strategy::Heuristic => StrategyKind::Heuristic,
            },
            mode: match self.mode {
                Mode::Exhaustive => ModeKind::Exhaustive,
                Mode::Sampled => ModeKind::Sampled,
            },
            samples: self.samples,
            restarts: self.restarts,
            symbol: self
                .constant_symbol
                .map_or(SymbolSource::Gaussian, SymbolSource::Constant),
            out: self.out.clone(),
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(path) => {
            let json = summary_path(path);
            std::fs::write(&json, text)?;
            eprintln!("wrote {}", json.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_ratios(report: &RatioReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let json = write_ratio_outputs(report, path)?;
            eprintln!("wrote {} and {}", path.display(), json.display());
        }
        None => {
            report.write_csv(std::io::stdout().lock())?;
            println!();
            emit_json(report, None)?;
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<bool> {
    let (Command::Identities(opts)
    | Command::Jn(opts)
    | Command::Commutator(opts)
    | Command::Khintchine(opts)
    | Command::Paraproduct(opts)) = &command;
    let config = opts.config();
    let out = config.out.as_deref();
    let passed = match command {
        Command::Identities(_) => {
            let r = cmd_identities(&config)?;
            emit_json(&r, out)?;
            r.passed
        }
        Command::Khintchine(_) => {
            let r = cmd_khintchine(&config)?;
            if let Some(path) = out {
                r.write_csv(std::fs::File::create(path)?)?;
            }
            emit_json(&r, out)?;
            r.passed
        }
        Command::Jn(_) | Command::Commutator(_) | Command::Paraproduct(_) => {
            let r = match command {
                Command::Jn(_) => cmd_jn(&config)?,
                Command::Commutator(_) => cmd_commutator(&config)?,
                _ => cmd_paraproduct(&config)?,
            };
            emit_ratios(&r, out)?;
            for c in r.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            r.passed
        }
    };
    Ok(passed)
}

fn main() -> ExitCode {
    match run(Args::parse().command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
