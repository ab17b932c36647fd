use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tgapod::adaptive::Method;
use tgapod::config::{parse_config, RunConfig};
use tgapod::experiment::{run_convergence, run_experiment, run_sweep};
use tgapod::Error;

#[derive(Parser)]
#[command(name = "tgapod", version, about = "Full-order and POD-reduced advection-diffusion runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full-order finite element run.
    RunFem(Common),
    /// Fixed POD basis after the warm-up.
    RunPod(Common),
    /// Adaptive POD with the residual indicator.
    RunApod(Common),
    /// Two-grid adaptive POD.
    RunTgapod(Common),
    /// Manufactured-solution convergence study.
    Converge(Common),
    /// Parameter sweep over `sweep.axis`.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Recorded for reproducibility; every run is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

fn load(common: &Common, method: Option<Method>) -> Result<RunConfig, Error> {
    let mut cfg = parse_config(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(m) = method {
        cfg.method = m;
        cfg.check_method()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Error> {
    let (common, method) = match &cli.command {
        Command::RunFem(c) => (c, Some(Method::Fem)),
        Command::RunPod(c) => (c, Some(Method::Pod)),
        Command::RunApod(c) => (c, Some(Method::ApodResidual)),
        Command::RunTgapod(c) => (c, Some(Method::TgApod)),
        Command::Converge(c) | Command::Sweep(c) => (c, None),
    };
    let cfg = load(common, method)?;
    match cli.command {
        Command::Converge(_) => {
            let table = run_convergence(&cfg)?;
            std::fs::create_dir_all(&cfg.out_dir)?;
            table.write_csv(std::fs::File::create(cfg.out_dir.join("convergence.csv"))?)?;
            table.write_csv(std::io::stdout().lock())?;
        }
        Command::Sweep(_) => {
            println!("{}", tgapod::experiment::SUMMARY_HEADER);
            for row in run_sweep(&cfg)? {
                println!("{}", row.csv_row());
            }
        }
        _ => {
            let row = run_experiment(&cfg)?;
            println!("{}", tgapod::experiment::SUMMARY_HEADER);
            println!("{}", row.csv_row());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config { .. } | Error::Alignment(_) | Error::InvalidParameter(_) => 2,
                ref e if e.is_solver_failure() => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
