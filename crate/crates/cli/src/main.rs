use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use schauder_core::harness::{self, emit, ExperimentConfig, ExperimentId, Format};

#[derive(Parser)]
#[command(name = "lab", version, about = "Run partial Schauder estimate experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report files.
    Run {
        /// Experiment id, e.g. E1 or C2.
        experiment: String,
        /// JSON config; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated grid resolutions.
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
        #[arg(long)]
        ensemble: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated output formats (json, csv, svg).
        #[arg(long, value_delimiter = ',', default_value = "json,csv,svg")]
        format: Vec<String>,
    },
    /// Check a config file without running it.
    ValidateConfig { path: PathBuf },
    /// List experiment ids.
    List,
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::List => {
            for id in ExperimentId::ALL {
                println!("{id}  {}", id.description());
            }
            Ok(true)
        }
        Command::ValidateConfig { path } => {
            let cfg = ExperimentConfig::load(&path).with_context(|| format!("{}", path.display()))?;
            println!("ok: {} with resolutions {:?}", cfg.experiment, cfg.resolutions);
            Ok(true)
        }
        Command::Run { experiment, config, resolutions, ensemble, seed, delta, nu, out, format } => {
            let id = ExperimentId::parse(&experiment)?;
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p).with_context(|| format!("{}", p.display()))?,
                None => ExperimentConfig::default_for(id),
            };
            if cfg.experiment != id {
                bail!("config is for {} but {} was requested", cfg.experiment, id);
            }
            if let Some(r) = resolutions {
                cfg.resolutions = r;
            }
            if let Some(e) = ensemble {
                cfg.ensemble = e;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(d) = delta {
                cfg.delta = d;
            }
            if let Some(n) = nu {
                cfg.nu = n;
            }
            if out.is_some() {
                cfg.out_dir = out;
            }
            let formats = format
                .iter()
                .map(|f| Format::parse(f).with_context(|| format!("unknown format {f:?}")))
                .collect::<Result<Vec<_>>>()?;
            let dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("out").join(id.as_str()));
            let report = harness::run(&cfg)?;
            emit(&report, &dir, &formats)?;
            for v in &report.verdicts {
                println!("{} {}: value {:.6e}, threshold {:.6e} ({})", if v.passed { "PASS" } else { "FAIL" }, v.name, v.value, v.threshold, v.detail);
            }
            println!("report written to {}", dir.display());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
