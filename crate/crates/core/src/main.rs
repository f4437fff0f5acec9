use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swarm_diffusion::scenario::{run_scenario, run_sweep};
use swarm_diffusion::{parse_config, Error, RunConfig};

#[derive(Parser)]
#[command(name = "swarm-diffusion", version, about = "Swarm information-diffusion simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace, snapshots and summary.
    Run {
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Parent directory; artifacts go to <OUT>/<config name>/.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seconds between heatmap snapshots; 0 disables them.
        #[arg(long = "snapshot-period")]
        snapshot_period: Option<f64>,
    },
    /// Evaluate the analytic grid or run seeded replications.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn run_dir(config_path: &Path, out: Option<PathBuf>, config: &RunConfig) -> PathBuf {
    let name = config_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.scenario.as_str().to_string());
    out.or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
        .join(name)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config: path,
            seed,
            out,
            snapshot_period,
        } => {
            let mut config = load(&path)?;
            if let Some(seed) = seed {
                config.sim.rng_seed = seed;
            }
            if let Some(p) = snapshot_period {
                config.snapshot_period = p;
            }
            let dir = run_dir(&path, out, &config);
            let output = run_scenario(&config, &dir)?;
            print!("{}", output.summary.render());
            Ok(())
        }
        Command::Sweep {
            config: path,
            out,
            jobs,
        } => {
            let config = load(&path)?;
            let dir = run_dir(&path, Some(out), &config);
            run_sweep(&config, &dir, jobs)?;
            println!("wrote {}", dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
