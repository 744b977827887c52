//! `eegsync`: synthetic cohorts, overall synchrony, dynamic ISC curves and
//! their consistency, driven by a JSON run config.
//!
//! Exit codes: 0 ok, 2 configuration, 3 I/O, 4 data.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};

use eegsync_core::io::{
    write_cohort, write_report, DatasetManifest, DatasetSource, RecordingSource, ReportFormat, SynthConfig,
    SyntheticSource,
};
use eegsync_core::parallel::with_workers;
use eegsync_core::pipeline::{run_analysis, AnalysisReport, Stages};
use eegsync_core::{Error, ErrorClass};

use config::{read_json, DatasetRef, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "eegsync",
    version,
    about = "Feature-based inter-subject correlation analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Run config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; overrides the config's `parallel`.
    #[arg(long, env = "EEGSYNC_PARALLEL", value_parser = clap::value_parser!(u64).range(1..))]
    parallel: Option<u64>,
    /// Seed for a synthetic dataset; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort: recordings, manifest and ground truth.
    Synth {
        /// Synthetic cohort config (JSON).
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, env = "EEGSYNC_PARALLEL", value_parser = clap::value_parser!(u64).range(1..))]
        parallel: Option<u64>,
    },
    /// Overall ISC and synchronized percentages per channel, pair and film.
    Overall(RunArgs),
    /// Sliding-window ISC curves with per-window significance.
    Dynamic(RunArgs),
    /// Consistency of dynamic curves and valence-category tests.
    Consistency(RunArgs),
    /// Print a default config.
    PrintConfig {
        #[arg(long, value_enum, default_value_t = ConfigKind::Run)]
        kind: ConfigKind,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConfigKind {
    Run,
    Synth,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 2,
            error: error.into(),
        }
    }

    fn data(error: impl Into<anyhow::Error>) -> Self {
        Failure {
            code: 4,
            error: error.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Config => 2,
            ErrorClass::Io => 3,
            ErrorClass::Data => 4,
        };
        Failure { code, error: e.into() }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Synth {
            config,
            out,
            seed,
            parallel,
        } => cmd_synth(&config, &out, seed, parallel),
        Command::Overall(args) => cmd_run(args, Stages::OVERALL),
        Command::Dynamic(args) => cmd_run(args, Stages::DYNAMIC),
        Command::Consistency(args) => cmd_run(args, Stages::CONSISTENCY),
        Command::PrintConfig { kind } => print_config(kind),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn print_config(kind: ConfigKind) -> CmdResult {
    let text = match kind {
        ConfigKind::Run => serde_json::to_string_pretty(&RunConfig::default()),
        ConfigKind::Synth => serde_json::to_string_pretty(&SynthConfig::default()),
    }
    .map_err(Failure::config)?;
    println!("{text}");
    Ok(())
}

fn workers(flag: Option<u64>, config: Option<usize>) -> Result<usize, Failure> {
    let n = match (flag, config) {
        (Some(n), _) => n as usize,
        (None, Some(n)) => n,
        (None, None) => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    if n == 0 {
        return Err(Failure::config(anyhow!("parallel must be at least 1")));
    }
    Ok(n)
}

fn cmd_synth(config: &Path, out: &Path, seed: Option<u64>, parallel: Option<u64>) -> CmdResult {
    let mut cfg: SynthConfig = read_json(config).map_err(Failure::config)?;
    if let Some(seed) = seed {
        cfg.rng_seed = seed;
    }
    cfg.validate()?;
    let n = workers(parallel, None)?;
    let manifest = with_workers(n, || write_cohort(&cfg, out))??;
    eprintln!(
        "wrote {} recordings and manifest.json to {}",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

fn open_source(dataset: &DatasetRef, seed: Option<u64>) -> Result<Box<dyn RecordingSource>, Failure> {
    let synthetic = |mut cfg: SynthConfig| -> Result<Box<dyn RecordingSource>, Failure> {
        if let Some(seed) = seed {
            cfg.rng_seed = seed;
        }
        Ok(Box::new(SyntheticSource::new(cfg)?))
    };
    match dataset {
        DatasetRef::Manifest(path) => {
            if !path.is_file() {
                return Err(Failure::data(anyhow!("dataset manifest {} not found", path.display())));
            }
            let manifest = DatasetManifest::read(path).map_err(|e| match e.class() {
                ErrorClass::Io => Failure::from(e),
                _ => Failure::data(e),
            })?;
            Ok(Box::new(DatasetSource::new(manifest)?))
        }
        DatasetRef::SynthConfig(path) => synthetic(read_json(path).map_err(Failure::config)?),
        DatasetRef::Synthetic(cfg) => synthetic(cfg.clone()),
    }
}

fn cmd_run(args: RunArgs, stages: Stages) -> CmdResult {
    let mut cfg = RunConfig::read(&args.config).map_err(Failure::config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .ok_or_else(|| Failure::config(anyhow!("no output directory: pass --out or set `out`")))?;
    let format: ReportFormat = args.format.map(Into::into).or(cfg.format).unwrap_or(ReportFormat::Csv);
    let n = workers(args.parallel, cfg.parallel)?;

    let source = open_source(&cfg.dataset, cfg.seed)?;
    cfg.analysis
        .validate(source.sample_rate_hz(), source.montage())
        .map_err(Failure::config)?;
    let report = with_workers(n, || run_analysis(source.as_ref(), &cfg.analysis, stages))??;

    let mut written = write_report(&report, format, &out)?;
    written.extend(write_sections(&report, &out)?);
    // Snapshot of what ran. Worker count is left out so outputs do not
    // depend on it.
    let snapshot = RunConfig {
        out: None,
        parallel: None,
        format: Some(format),
        ..cfg
    };
    let path = out.join("run_config.json");
    write_pretty(&path, &snapshot)?;
    written.push(path);
    eprintln!("wrote {} file(s) to {}", written.len(), out.display());
    Ok(())
}

/// Section summaries written regardless of format.
fn write_sections(report: &AnalysisReport, out: &Path) -> Result<Vec<PathBuf>, Failure> {
    let mut written = Vec::new();
    if let Some(overall) = &report.overall {
        let path = out.join("overall_summary.json");
        write_pretty(&path, overall)?;
        written.push(path);
    }
    if let Some(cons) = &report.consistency {
        let path = out.join("consistency.json");
        write_pretty(&path, cons)?;
        written.push(path);
    }
    Ok(written)
}

fn write_pretty<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 3,
        error: e.into(),
    })?;
    text.push('\n');
    std::fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(|error| Failure { code: 3, error })
}
