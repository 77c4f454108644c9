use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cvqec::{CliError, Experiment, ExperimentConfig, OUTPUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "cvqec", version, about = "Analog quantum error-correction experiments on cyclic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory; beats the config and the environment.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print diagnostics for a config; exits 2 when it has errors.
    Validate { config: PathBuf },
    /// Describe the CSV columns of each experiment.
    Schema {
        #[arg(long, value_parser = parse_experiment)]
        experiment: Option<Experiment>,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    Experiment::ALL
        .into_iter()
        .find(|e| e.name() == s)
        .ok_or_else(|| format!("unknown experiment `{s}`"))
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    ExperimentConfig::from_json(&text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            output,
        } => load(&config).and_then(|mut cfg| {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.schedule.trials = t;
            }
            let env = std::env::var(OUTPUT_DIR_ENV).ok();
            let dir = cvqec::output_dir(&cfg, output.as_deref(), env.as_deref());
            for d in cfg.validate() {
                eprintln!("{d}");
            }
            let written = cvqec::run(&cfg, &dir)?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }),
        Command::Validate { config } => load(&config).and_then(|cfg| {
            let diags = cfg.validate();
            for d in &diags {
                println!("{d}");
            }
            if diags.iter().any(|d| d.is_error()) {
                Err(CliError::Validation(diags))
            } else {
                Ok(())
            }
        }),
        Command::Schema { experiment } => {
            let list = experiment.map_or(Experiment::ALL.to_vec(), |e| vec![e]);
            print!("{}", cvqec::output::describe(&list));
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cvqec: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
