use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use trajloc::metrics::min_grid_rmse;
use trajloc::synthesize_block;
use trajloc_harness::config::{Algorithm, ScenarioConfig};
use trajloc_harness::experiments::{self, builtin};
use trajloc_harness::report::{emit_results, print_aggregate};
use trajloc_harness::runner::run_scenario;
use trajloc_harness::{io, HarnessError};

#[derive(Parser)]
#[command(name = "trajloc", version, about = "DOA trajectory localization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
}

#[derive(clap::Args)]
struct Overrides {
    /// Base seed; trial t uses seed + t.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset, e.g. tl-cbf,tl-nomp.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ScenarioConfig) -> Result<(), HarnessError> {
        if let Some(s) = self.seed {
            cfg.base_seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(list) = &self.algorithms {
            cfg.algorithms = list.iter().map(|s| Algorithm::parse(s)).collect::<Result<_, _>>()?;
        }
        cfg.validate()
    }
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize one observation set and its ground truth.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep value to synthesize at (defaults to the first one).
        #[arg(long)]
        sweep_value: Option<f64>,
    },
    /// Run a scenario file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run a built-in experiment.
    Sweep {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Print the best on-grid RMSE of every source.
    Oracle {
        /// Scenario file; defaults to the built-in snr experiment.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// List built-in experiments.
    List {
        /// Print the named experiment as a scenario file.
        #[arg(long)]
        show: Option<String>,
    },
}

fn run_and_emit(cfg: &ScenarioConfig, out: &PathBuf) -> Result<(), HarnessError> {
    let report = run_scenario(cfg)?;
    let (rows, agg) = emit_results(&report, out)?;
    print_aggregate(&report.rows, std::io::stdout()).map_err(|e| HarnessError::io(out, e))?;
    eprintln!("wrote {} and {}", rows.display(), agg.display());
    Ok(())
}

fn unknown(name: &str) -> HarnessError {
    HarnessError::Config(format!("no built-in experiment {name:?}; try `trajloc list`"))
}

fn main_inner(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Synth {
            config,
            out,
            seed,
            sweep_value,
        } => {
            let cfg = ScenarioConfig::load(&config)?;
            let value = sweep_value.unwrap_or(cfg.sweep_values()[0]);
            let setting = cfg.setting(value)?;
            let seed = seed.unwrap_or(cfg.base_seed);
            let (blocks, truth) = synthesize_block(
                &setting.sources,
                &setting.array,
                setting.snapshots,
                setting.snr_db,
                &setting.frequencies,
                seed,
            )?;
            for p in io::write_observations(&out, &blocks, &truth, seed)? {
                println!("{}", p.display());
            }
        }
        Command::Run {
            config,
            out,
            overrides,
            format: Format::Csv,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            overrides.apply(&mut cfg)?;
            run_and_emit(&cfg, &out)?;
        }
        Command::Sweep {
            name,
            out,
            overrides,
            format: Format::Csv,
        } => {
            let mut cfg = builtin(&name).ok_or_else(|| unknown(&name))?;
            overrides.apply(&mut cfg)?;
            run_and_emit(&cfg, &out)?;
        }
        Command::Oracle { config } => {
            let cfg = match config {
                Some(path) => ScenarioConfig::load(&path)?,
                None => builtin("snr").expect("snr is built in"),
            };
            let setting = cfg.setting(cfg.sweep_values()[0])?;
            println!("{:<6} {:<28} {:>10}  best grid point", "source", "params", "floor_deg");
            let mut total = 0.0;
            for (i, s) in setting.sources.iter().enumerate() {
                let (floor, best) = min_grid_rmse(s, &setting.grid, setting.snapshots);
                total += floor;
                println!("{:<6} {:<28} {:>10.5}  {:?}", i, format!("{:?}", s.to_vec()), floor, best.to_vec());
            }
            let k = setting.sources.len().max(1) as f64;
            println!("mean {:>45.5}", total / k);
        }
        Command::List { show } => match show {
            Some(name) => print!("{}", builtin(&name).ok_or_else(|| unknown(&name))?.to_toml()),
            None => {
                for name in experiments::NAMES {
                    println!("{name:<12} {}", experiments::describe(name));
                }
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
