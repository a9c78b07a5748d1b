use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wncs::config::{
    emit_csv, emit_trace_csv, parse_config_with, preset_config_text, write_runs_csv,
    write_trace_csv, write_weights_csv, ConfigOverrides,
};
use wncs::experiment::{run_replications, run_simulation_with_trace, sweep, SweepGrid};
use wncs::{Error, ExperimentConfig, Policy, Preset};

#[derive(Parser)]
#[command(
    name = "wncs",
    about = "Scheduling simulator for wireless networked control loops"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration for every replication seed.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        /// Also write the per-slot trace of the first seed.
        #[arg(long)]
        trace: bool,
    },
    /// Run the cross product of --p, --m and --policy values.
    Sweep {
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Dump offset weights w_i(j) for j = 0..=J.
    DumpWeights {
        #[command(flatten)]
        opts: RunOpts,
        #[arg(long, default_value_t = 30)]
        j_max: usize,
    },
    /// Print a preset as config text.
    Presets {
        #[arg(long, default_value = "table1")]
        preset: String,
    },
}

#[derive(Args)]
struct RunOpts {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// table1 or table2.
    #[arg(long)]
    preset: Option<String>,
    /// Scheduling policy; repeatable for sweeps (default: all five).
    #[arg(long)]
    policy: Vec<String>,
    /// Channel success probability; repeatable for sweeps.
    #[arg(long)]
    p: Vec<f64>,
    /// Resources per slot; repeatable for sweeps.
    #[arg(long)]
    m: Vec<usize>,
    /// Horizon in slots.
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Output directory (default: CSV to stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunOpts {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?,
            None => String::new(),
        };
        let overrides = ConfigOverrides {
            preset: self.preset.clone(),
            policy: self.policy.first().cloned(),
            p: self.p.first().copied(),
            m: self.m.first().copied(),
            horizon: self.t,
            seed: self.seed,
            replications: self.reps,
        };
        parse_config_with(&text, &overrides)
    }

    fn output(&self, name: &str) -> Result<Option<PathBuf>, Error> {
        match &self.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|source| Error::Io {
                    path: dir.clone(),
                    source,
                })?;
                Ok(Some(dir.join(name)))
            }
            None => Ok(None),
        }
    }
}

fn single<T: Copy>(values: &[T], flag: &str) -> Result<(), Error> {
    if values.len() > 1 {
        return Err(Error::InvalidConfig {
            key: flag.into(),
            reason: "only one value is allowed here; use `sweep` for grids".into(),
        });
    }
    Ok(())
}

fn report(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { opts, trace } => {
            single(&opts.p, "p")?;
            single(&opts.m, "M")?;
            if opts.policy.len() > 1 {
                return Err(Error::InvalidConfig {
                    key: "policy".into(),
                    reason: "only one value is allowed here; use `sweep` for grids".into(),
                });
            }
            let config = opts.load()?;
            let runs = run_replications(&config)?;
            match opts.output("run.csv")? {
                Some(path) => {
                    emit_csv(&runs, &path)?;
                    report(&path);
                }
                None => write_runs_csv(&runs, io::stdout().lock())?,
            }
            if trace {
                let traced = run_simulation_with_trace(&config)?;
                let steps = traced.trace.unwrap_or_default();
                match opts.output("trace.csv")? {
                    Some(path) => {
                        emit_trace_csv(&steps, &path)?;
                        report(&path);
                    }
                    None => write_trace_csv(&steps, io::stdout().lock())?,
                }
            }
        }
        Command::Sweep { opts } => {
            let base = opts.load()?;
            let policies = if opts.policy.is_empty() {
                Policy::ALL.to_vec()
            } else {
                opts.policy
                    .iter()
                    .map(|p| p.parse())
                    .collect::<Result<Vec<Policy>, _>>()?
            };
            let grid = SweepGrid {
                p_values: if opts.p.is_empty() {
                    vec![base.p]
                } else {
                    opts.p.clone()
                },
                m_values: if opts.m.is_empty() {
                    vec![base.m]
                } else {
                    opts.m.clone()
                },
                policies,
                seeds: base.seeds(),
            };
            eprintln!("running {} simulations", grid.len());
            let result = sweep(&base, &grid)?;
            for &policy in &grid.policies {
                for &p in &grid.p_values {
                    for &m in &grid.m_values {
                        let s = result.offset_summary(policy, p, m);
                        eprintln!(
                            "{:>14} p={p:<5} M={m:<3} offset {:.6} ± {:.6}",
                            policy.name(),
                            s.mean,
                            s.std_err
                        );
                    }
                }
            }
            match opts.output("sweep.csv")? {
                Some(path) => {
                    emit_csv(&result.runs, &path)?;
                    report(&path);
                }
                None => write_runs_csv(&result.runs, io::stdout().lock())?,
            }
        }
        Command::DumpWeights { opts, j_max } => {
            let text = match &opts.config {
                Some(path) => std::fs::read_to_string(path).map_err(|source| Error::Io {
                    path: path.clone(),
                    source,
                })?,
                None => String::new(),
            };
            // Run parameters are irrelevant here; fill them so validation passes.
            let overrides = ConfigOverrides {
                preset: opts.preset.clone(),
                p: Some(opts.p.first().copied().unwrap_or(1.0)),
                m: Some(opts.m.first().copied().unwrap_or(1)),
                ..Default::default()
            };
            let config = parse_config_with(&text, &overrides)?;
            match opts.output("weights.csv")? {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|source| Error::Io {
                        path: path.clone(),
                        source,
                    })?;
                    write_weights_csv(&config.subsystems, j_max, file)?;
                    report(&path);
                }
                None => write_weights_csv(&config.subsystems, j_max, io::stdout().lock())?,
            }
        }
        Command::Presets { preset } => {
            let preset: Preset = preset.parse().map_err(|reason| Error::InvalidConfig {
                key: "preset".into(),
                reason,
            })?;
            print!("{}", preset_config_text(preset));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
