use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use multion_core::harness::{self, HarnessError};
use multion_core::RunConfig;

#[derive(Parser)]
#[command(
    name = "multion",
    version,
    about = "Multi-object navigation simulator and evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML or JSON run configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate worlds and an episode file.
    Gen(Common),
    /// Evaluate the configured agents.
    Eval(Common),
    /// Evaluate across wrong-FOUND budgets.
    SweepFound(Common),
    /// Goal-count cross-evaluation matrix.
    CrossEval(Common),
    /// Re-simulate a trace and render text-art frames.
    Replay {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Markdown report from an evaluation's records.
    Report(Common),
}

fn load(common: &Common) -> Result<RunConfig, HarnessError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Gen(c) => {
            let cfg = load(&c)?;
            let inputs = harness::cmd_gen(&cfg)?;
            println!(
                "wrote {} worlds and {} episodes to {}",
                inputs.worlds.len(),
                inputs.set.episodes.len(),
                cfg.out.display()
            );
        }
        Command::Eval(c) => {
            let cfg = load(&c)?;
            let out = harness::cmd_eval(&cfg)?;
            print!("{}", out.summary_csv);
        }
        Command::SweepFound(c) => {
            let cfg = load(&c)?;
            let out = harness::cmd_sweep_found(&cfg)?;
            print!("{}", out.csv);
            if !out.monotone {
                eprintln!("warning: success is not monotone in the budget");
            }
        }
        Command::CrossEval(c) => {
            let cfg = load(&c)?;
            for m in harness::cmd_cross_eval(&cfg)? {
                print!("{}", m.to_csv());
            }
        }
        Command::Replay { common, trace } => {
            let cfg = load(&common)?;
            let out = harness::cmd_replay(&cfg, &trace)?;
            info!("replayed {} frames", out.frames.len());
            println!("{} frames, {} cells revealed", out.frames.len(), out.revealed.len());
        }
        Command::Report(c) => {
            let cfg = load(&c)?;
            print!("{}", harness::cmd_report(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
