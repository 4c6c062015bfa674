use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use centroflow::lab_cli::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "centroflow", version, about = "Centro-affine curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy)]
enum Kind {
    Run,
    Verify,
    Sweep,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (beats CENTROFLOW_OUT and the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for a random initial body.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one body and write trajectory, snapshots, plots and a report.
    Run(Common),
    /// Run verifier checks over freshly generated trajectories.
    Verify(Common),
    /// Run a grid of experiments in parallel.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Run(a) => (Kind::Run, a),
        Command::Verify(a) => (Kind::Verify, a),
        Command::Sweep(a) => (Kind::Sweep, a),
    };
    let result = ExperimentConfig::load(&args.config).and_then(|cfg| {
        let out = cfg.output_dir(args.out.as_deref());
        match kind {
            Kind::Run => lab_cli::cmd_run(&cfg, &out, args.seed),
            Kind::Verify => lab_cli::cmd_verify(&cfg, &out, args.seed),
            Kind::Sweep => lab_cli::cmd_sweep(&cfg, &out, args.seed),
        }
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("centroflow: {e}");
            ExitCode::from(lab_cli::exit_code_for(&e) as u8)
        }
    }
}
