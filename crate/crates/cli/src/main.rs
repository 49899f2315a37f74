use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use geoconvex_cli::commands::{self, CurveArgs, RunOptions};
use geoconvex_cli::config::{Overrides, PlanOverrides, RunConfig};
use geoconvex_cli::report::RunReport;

#[derive(Parser)]
#[command(name = "geoconvex", version, about = "Sampled certification and falsification of geodesic phi-convexity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Closed-form (and strict) inequality tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long = "fd-step", global = true)]
    fd_step: Option<f64>,
    /// Sampling overrides, e.g. `line=65,circle=32,t=33,rounds=4,zoom=8,jitter=on`.
    #[arg(long, global = true)]
    samples: Option<String>,
    /// Output path; defaults to the config's output entry, then stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Include wall-clock time per check (breaks byte-determinism).
    #[arg(long, global = true)]
    timings: bool,
    /// Write a single-witness config for every violation into this directory.
    #[arg(long = "emit-witnesses", global = true)]
    emit_witnesses: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every check in the config.
    Check,
    /// Run one check with grid refinement around its worst sample.
    Falsify {
        /// Name of the check descriptor.
        check: String,
    },
    /// Run the six property probes on a bifunction.
    Probe {
        /// Bifunction name from the config or the catalog.
        phi: String,
    },
    /// Write f along a geodesic next to the phi and chord bounds as CSV.
    Curve {
        #[arg(long)]
        function: String,
        /// Start point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        /// End point, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        y: String,
        #[arg(long = "t-count", default_value_t = 17)]
        t_count: usize,
        #[arg(long, default_value = "diff")]
        phi: String,
        /// Region that must contain both endpoints.
        #[arg(long)]
        region: Option<String>,
    },
    /// Run the bundled scenario suite.
    AuditPaper,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("GEOCONVEX_THREADS") {
        let n: usize = v.parse().with_context(|| format!("GEOCONVEX_THREADS must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global().context("thread pool")?;
    }
    Ok(())
}

fn load(cli: &Cli) -> Result<(RunConfig, Vec<u8>)> {
    let path = cli.config.as_deref().context("--config is required for this command")?;
    commands::load(path)
}

fn write(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    init_threads()?;
    let o = Overrides {
        seed: cli.seed,
        tol: cli.tol,
        fd_step: cli.fd_step,
        samples: cli.samples.as_deref().map(PlanOverrides::parse_samples).transpose()?.unwrap_or_default(),
    };
    let opts = RunOptions { falsify: false, timings: cli.timings };
    let emit = |report: &RunReport, cfg: &RunConfig, format: Format| -> Result<u8> {
        if let Some(dir) = &cli.emit_witnesses {
            for p in commands::emit_witnesses(cfg, report, &o, dir)? {
                eprintln!("wrote {}", p.display());
            }
        }
        let text = match format {
            Format::Json => report.to_json(),
            Format::Text => report.to_text(),
        };
        write(cli.out.as_deref().or(cfg.output.report.as_deref()), &text)?;
        Ok(report.exit_code())
    };
    let format = cli.format.unwrap_or(Format::Json);
    match &cli.command {
        Command::Check => {
            let (cfg, bytes) = load(&cli)?;
            let report = commands::run_checks("check", &cfg, &bytes, None, &o, opts)?;
            emit(&report, &cfg, format)
        }
        Command::Falsify { check } => {
            let (cfg, bytes) = load(&cli)?;
            let opts = RunOptions { falsify: true, ..opts };
            let report = commands::run_checks("falsify", &cfg, &bytes, Some(check), &o, opts)?;
            emit(&report, &cfg, format)
        }
        Command::Probe { phi } => {
            let loaded = cli.config.as_deref().map(commands::load).transpose()?;
            let report = commands::run_probe(loaded.as_ref().map(|(c, b)| (c, b.as_slice())), phi, &o)?;
            let cfg = loaded.map(|(c, _)| c).unwrap_or(RunConfig::from_json("{}")?);
            emit(&report, &cfg, format)
        }
        Command::Curve { function, x, y, t_count, phi, region } => {
            let (cfg, _) = load(&cli)?;
            let x = commands::parse_point(x)?;
            let y = commands::parse_point(y)?;
            let args = CurveArgs { function, phi, x: &x, y: &y, t_count: *t_count, region: region.as_deref() };
            let csv = commands::curve(&cfg, &args)?;
            write(cli.out.as_deref().or(cfg.output.curve.as_deref()), &csv)?;
            Ok(0)
        }
        Command::AuditPaper => {
            let report = commands::audit_paper(&o, opts)?;
            let cfg = RunConfig::from_json(commands::AUDIT_SUITE)?;
            emit(&report, &cfg, cli.format.unwrap_or(Format::Text))
        }
    }
}
