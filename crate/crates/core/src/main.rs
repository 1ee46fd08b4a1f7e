use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shiftguard::harness::{run_stage, ExperimentConfig, HarnessError, Stage};

#[derive(Parser)]
#[command(name = "shiftguard", version, about = "Distribution-shift detection for offline model-based design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the training data (and positives for the toy problem).
    GenData(Common),
    /// Fit the target surrogate, optional constraint model and ensemble.
    TrainSurrogate(Common),
    /// Fit the training-versus-design classifier.
    TrainOod(Common),
    /// Run the configured sequence search.
    Search(Common),
    /// Compute grids, trajectory statistics or diagnostics.
    Evaluate(Common),
    /// Bootstrap the regret of score-filtered selection.
    Select(Common),
    /// Run every stage of the experiment.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the master seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn execute(stage: Stage, args: &Common) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    let out = cfg.output_dir.clone();
    let manifest = run_stage(&cfg, stage, &out)?;
    eprintln!("{}: {} files listed in {}", stage.name(), manifest.files.len(), out.join("manifest.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version requests are not errors; bad arguments are validation errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let (stage, args) = match &cli.command {
        Command::GenData(a) => (Stage::GenData, a),
        Command::TrainSurrogate(a) => (Stage::TrainSurrogate, a),
        Command::TrainOod(a) => (Stage::TrainOod, a),
        Command::Search(a) => (Stage::Search, a),
        Command::Evaluate(a) => (Stage::Evaluate, a),
        Command::Select(a) => (Stage::Select, a),
        Command::Run(a) => (Stage::Run, a),
    };
    match execute(stage, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
