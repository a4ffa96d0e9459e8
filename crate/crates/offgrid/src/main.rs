use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use offgrid::config::ExperimentConfig;
use offgrid::{experiments, io};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "offgrid", version, about = "Off-the-grid multi-signal estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Certificate diagnostics and assumption verification.
    Certify {
        #[command(flatten)]
        common: Common,
        /// Also write diagnostics.csv and verification.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One replicate: solve, prediction error, suprema and event check.
    Trial {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        rep: u64,
        /// Also write trial.csv, trace.csv, signals.csv, truth.csv and estimate.csv here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo study over the configured sweeps.
    Study {
        #[command(flatten)]
        common: Common,
        /// Directory for trials.csv, summary.csv, slopes.csv and plot.csv.
        #[arg(long)]
        out: PathBuf,
    },
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("configuring the thread pool")?;
        }
        Ok(cfg)
    }
}

fn create(dir: &Path, name: &str) -> Result<File> {
    std::fs::create_dir_all(dir)?;
    File::create(dir.join(name)).with_context(|| format!("creating {}", dir.join(name).display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Certify { common, out } => {
            let cfg = common.load()?;
            let setup = match experiments::run_certificate_report(&cfg) {
                Ok(s) => s,
                Err(e) => {
                    if refusal(&e) {
                        io::write_refusal(std::io::stdout(), &format!("{e:#}"))?;
                        if let Some(dir) = &out {
                            io::write_refusal(create(dir, "diagnostics.csv")?, &format!("{e:#}"))?;
                        }
                    }
                    return Err(e);
                }
            };
            let diag = setup.diagnostics();
            io::write_diagnostics(std::io::stdout(), &diag)?;
            if let Some(dir) = &out {
                io::write_diagnostics(create(dir, "diagnostics.csv")?, &diag)?;
                io::write_verification(create(dir, "verification.csv")?, &setup)?;
            }
        }
        Command::Trial { common, rep, out } => {
            let cfg = common.load()?;
            let tr = experiments::run_trial(&cfg, rep)?;
            io::write_trial(std::io::stdout(), &tr.setup, &tr.result)?;
            if let Some(dir) = &out {
                io::write_trial(create(dir, "trial.csv")?, &tr.setup, &tr.result)?;
                io::write_trace(create(dir, "trace.csv")?, &tr.trace)?;
                io::write_signals(create(dir, "signals.csv")?, &tr.signals)?;
                io::write_params(create(dir, "truth.csv")?, &tr.setup.truth)?;
                io::write_params(create(dir, "estimate.csv")?, &tr.estimate)?;
            }
        }
        Command::Study { common, out } => {
            let cfg = common.load()?;
            let study = experiments::run_study(&cfg)?;
            io::write_study(&out, &study)?;
            io::write_summary(std::io::stdout(), &study)?;
        }
    }
    Ok(())
}

fn refusal(e: &anyhow::Error) -> bool {
    e.chain()
        .any(|c| c.downcast_ref::<offgrid_core::Error>().is_some_and(|e| e.is_refusal()))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if refusal(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
