use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fbqos::experiment::{self, Command, ExperimentConfig, OutputFormat, Sweep};

#[derive(Parser)]
#[command(name = "fbqos", version, about = "Finite-blocklength statistical QoS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Error-rate exponent against coding rate.
    ExponentCurve(Common),
    /// ε-effective capacity over the delay/reliability exponent grid.
    EcSurface(Common),
    /// Pareto boundary of the feasible QoS region per level.
    Pareto(Common),
    /// Optimal reliability exponent against θ or against an error target.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        sweep: Option<Sweep>,
    },
    /// Queue simulation checking the delay exponent as an overflow decay rate.
    QueueValidate(Common),
    /// Normal-approximation rate against blocklength and error probability.
    RateCurve(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output file; standard output when neither this nor `output_path` is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

fn resolve(common: &Common, sweep: Option<Sweep>) -> fbqos::Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.mc.seed = seed;
    }
    if let Some(samples) = common.samples {
        cfg.mc.samples = samples;
    }
    if let Some(format) = common.format {
        cfg.format = format;
    }
    if let Some(sweep) = sweep {
        cfg.tradeoff.sweep = sweep;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, sweep) = match &cli.command {
        Cmd::ExponentCurve(c) => (Command::ExponentCurve, c, None),
        Cmd::EcSurface(c) => (Command::EcSurface, c, None),
        Cmd::Pareto(c) => (Command::Pareto, c, None),
        Cmd::Tradeoff { common, sweep } => (Command::Tradeoff, common, *sweep),
        Cmd::QueueValidate(c) => (Command::QueueValidate, c, None),
        Cmd::RateCurve(c) => (Command::RateCurve, c, None),
    };
    let result = resolve(common, sweep).and_then(|cfg| {
        let out = common.out.clone().or_else(|| cfg.output_path.as_ref().map(PathBuf::from));
        let text = experiment::execute(command, &cfg, out.as_deref())?;
        if out.is_none() {
            print!("{text}");
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(experiment::exit_code(&e) as u8)
        }
    }
}
