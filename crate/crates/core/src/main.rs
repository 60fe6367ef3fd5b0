use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use risma_core::harness::{
    power_scaling_study, preset, run_experiment, write_csv, write_power_scaling_csv, ExperimentId, ExperimentSpec,
    EXPERIMENTS,
};
use risma_core::{Error, Result};

#[derive(Parser)]
#[command(name = "risma", version, about = "RIS-aided downlink precoding experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its CSV.
    Run {
        #[arg(long)]
        experiment: Option<ExperimentId>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// JSON object merged over the experiment preset.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in experiments.
    ListExperiments,
    /// Check a config file and print the resolved spec.
    ValidateConfig {
        config: PathBuf,
        #[arg(long)]
        experiment: Option<ExperimentId>,
    },
}

fn resolve(experiment: Option<ExperimentId>, config: Option<&Path>) -> Result<ExperimentSpec> {
    let patch = match config {
        Some(path) => serde_json::from_reader(io::BufReader::new(File::open(path)?))?,
        None => serde_json::json!({}),
    };
    let from_file = patch.get("experiment").map(|v| serde_json::from_value::<ExperimentId>(v.clone())).transpose()?;
    let id = match (experiment, from_file) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::InvalidConfig(format!("--experiment {a} conflicts with config experiment {b}")))
        }
        (Some(id), _) | (None, Some(id)) => id,
        (None, None) => return Err(Error::InvalidConfig("no experiment given (flag or config)".into())),
    };
    preset(id).merged(&patch)
}

fn run(
    experiment: Option<ExperimentId>,
    trials: Option<usize>,
    seed: Option<u64>,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    let mut spec = resolve(experiment, config)?;
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(s) = seed {
        spec.seed = s;
    }
    spec.validate()?;
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    if spec.experiment == ExperimentId::PowerScaling {
        let n: Vec<usize> = spec.sweep.values.iter().map(|&x| x as usize).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let rows = power_scaling_study(&spec.power_scaling, &n, spec.trials, &mut rng)?;
        write_power_scaling_csv(&rows, sink)
    } else {
        write_csv(&run_experiment(&spec)?, sink)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { experiment, trials, seed, config, out } => {
            run(experiment, trials, seed, config.as_deref(), out.as_deref())
        }
        Command::ListExperiments => {
            for (id, what) in EXPERIMENTS {
                println!("{id:<14} {what}");
            }
            Ok(())
        }
        Command::ValidateConfig { config, experiment } => resolve(experiment, Some(&config)).and_then(|spec| {
            println!("{}", serde_json::to_string_pretty(&spec)?);
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
