//! Command-line interface.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{self, OutputFormats};
use crate::catalog::{InstanceCatalog, ResourceKind};
use crate::config::{default_seed, ScenarioConfig};
use crate::faults::{apply_fault, FaultKind, FaultParams, FaultScenario};
use crate::metrics::{Channel, MetricTrace, Window};
use crate::workload::{generate_baseline, WorkloadProfile};

#[derive(Debug, Parser)]
#[command(
    name = "faultscale",
    version,
    about = "Fault-induced autoscaling distortion simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment matrix and write reports.
    Run(RunArgs),
    /// Generate, import or distort metric traces.
    #[command(subcommand)]
    Trace(TraceCommand),
    /// Inspect instance catalogs.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Post-process reports.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML config file, or `default` for the built-in matrix.
    #[arg(long, default_value = "default")]
    pub config: String,
    #[arg(long, value_delimiter = ',')]
    pub faults: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub slos: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Instance ids such as `m5.large`.
    #[arg(long, value_delimiter = ',')]
    pub instances: Option<Vec<String>>,
    /// `builtin` or a CSV file.
    #[arg(long)]
    pub catalog: Option<String>,
    #[arg(long)]
    pub hours: Option<f64>,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; 1 runs serially.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Exit nonzero if any scenario failed.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Subcommand)]
pub enum TraceCommand {
    /// Write a baseline trace as CSV.
    Gen {
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        interval: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a trace CSV and print per-channel statistics.
    Import { file: PathBuf },
    /// Inject a fault into a trace CSV.
    ApplyFault {
        #[arg(long)]
        kind: String,
        /// Input trace; a fresh baseline is generated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = default_seed())]
        seed: u64,
        #[arg(long)]
        start: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        /// Treat the target as a burstable instance.
        #[arg(long)]
        burstable: bool,
        /// Parameter override, `name=value`; repeatable.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Print the catalog as CSV.
    List {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, default_value = "builtin")]
        catalog: String,
    },
    /// Check a catalog CSV.
    Validate { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Merge report CSVs into one, sorted by scenario.
    Merge {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write mean/min/max over seeds to this file.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value = value
        .trim()
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Run(args) => run_matrix(args),
        Command::Trace(cmd) => trace(cmd),
        Command::Catalog(cmd) => catalog(cmd),
        Command::Report(cmd) => report(cmd),
    }
}

fn run_matrix(args: RunArgs) -> anyhow::Result<ExitCode> {
    let mut cfg = ScenarioConfig::load(&args.config)?;
    let base = (args.config != "default")
        .then(|| Path::new(&args.config).parent().map(Path::to_path_buf))
        .flatten();
    if let Some(v) = args.faults {
        cfg.faults = v;
    }
    if let Some(v) = args.policies {
        cfg.policies = v;
    }
    if let Some(v) = args.slos {
        cfg.slos = v;
    }
    if let Some(v) = args.seeds {
        cfg.seeds = v;
    }
    if let Some(v) = args.instances {
        cfg.instances = v;
    }
    if let Some(v) = args.catalog {
        cfg.catalog = v;
    }
    if let Some(v) = args.hours {
        cfg.hours_per_month = v;
    }
    let out_dir = args.out.unwrap_or_else(|| cfg.output.dir.clone());
    let exp = cfg
        .resolve_with_base(base.as_deref())
        .with_context(|| format!("invalid config {}", args.config))?;

    let reports = analysis::run_matrix(&exp, args.jobs.max(1));
    let formats = OutputFormats {
        csv: cfg.output.csv,
        json: cfg.output.json,
        plots: cfg.output.plots,
    };
    let written = analysis::write_outputs(&out_dir, &exp, &reports, formats)?;

    let failed: Vec<_> = reports.iter().filter(|r| r.outcome.is_err()).collect();
    eprintln!(
        "{} scenarios, {} failed; wrote {} to {}",
        reports.len(),
        failed.len(),
        written.join(", "),
        out_dir.display()
    );
    for rep in &failed {
        if let Err(msg) = &rep.outcome {
            eprintln!("  {}: {msg}", rep.id);
        }
    }
    Ok(if args.strict && !failed.is_empty() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn trace(cmd: TraceCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        TraceCommand::Gen {
            seed,
            duration,
            interval,
            out,
        } => {
            let mut profile = WorkloadProfile::default().with_seed(seed);
            if let Some(d) = duration {
                profile.duration_s = d;
            }
            if let Some(i) = interval {
                profile.sample_interval_s = i;
            }
            let trace = generate_baseline(&profile)?;
            emit(out.as_deref(), &trace.to_csv_string()?)?;
        }
        TraceCommand::Import { file } => {
            let trace = read_trace(&file)?;
            let whole = Window::new(
                trace.start_offset_s(),
                trace.end_s() - trace.start_offset_s(),
            )?;
            println!(
                "{}: {} samples every {} s from t={} s",
                file.display(),
                trace.len(),
                trace.sample_interval_s(),
                trace.start_offset_s()
            );
            let mut channels: Vec<Channel> = ResourceKind::ALL
                .into_iter()
                .map(Channel::Resource)
                .collect();
            channels.push(Channel::LatencyMs);
            for ch in channels {
                if let Some(samples) = trace.samples(ch) {
                    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                    println!(
                        "{:<11} mean {:>10.4}  max {:>10.4}",
                        ch.name(),
                        mean,
                        trace.channel_max(ch, &whole)?
                    );
                }
            }
        }
        TraceCommand::ApplyFault {
            kind,
            input,
            seed,
            start,
            duration,
            burstable,
            params,
            out,
        } => {
            let kind: FaultKind = kind.parse()?;
            let trace = match input {
                Some(path) => read_trace(&path)?,
                None => generate_baseline(&WorkloadProfile::default().with_seed(seed))?,
            };
            let mut scenario = FaultScenario::new(kind)
                .with_seed(seed)
                .burstable(burstable);
            if start.is_some() || duration.is_some() {
                let window = Window::new(
                    start.unwrap_or(scenario.window.start_s),
                    duration.unwrap_or(scenario.window.duration_s),
                )?;
                scenario = scenario.with_window(window);
            }
            if !params.is_empty() {
                let mut overrides = FaultParams::default();
                for (name, value) in params {
                    overrides.set(name, value);
                }
                scenario = scenario.with_params(FaultParams::with_overrides(kind, &overrides)?);
            }
            let faulty = apply_fault(&trace, &scenario)?;
            emit(out.as_deref(), &faulty.to_csv_string()?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn read_trace(path: &Path) -> anyhow::Result<MetricTrace> {
    let file = fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    MetricTrace::read_csv(file).with_context(|| format!("invalid trace {}", path.display()))
}

fn catalog(cmd: CatalogCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        CatalogCommand::List { family, catalog } => {
            let cat = InstanceCatalog::load(&catalog)?;
            let text = match family {
                None => cat.to_csv()?,
                Some(fam) => {
                    let entries: Vec<_> = cat
                        .entries()
                        .iter()
                        .filter(|e| e.family == fam)
                        .cloned()
                        .collect();
                    if entries.is_empty() {
                        bail!("no instances in family `{fam}`");
                    }
                    InstanceCatalog::new(entries)?.to_csv()?
                }
            };
            print!("{text}");
        }
        CatalogCommand::Validate { file } => {
            let cat = InstanceCatalog::from_path(&file)
                .with_context(|| format!("invalid catalog {}", file.display()))?;
            println!("{}: {} instance types ok", file.display(), cat.len());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn report(cmd: ReportCommand) -> anyhow::Result<ExitCode> {
    match cmd {
        ReportCommand::Merge {
            files,
            out,
            summary,
        } => {
            let tables = files
                .iter()
                .map(|path| {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("cannot read {}", path.display()))?;
                    analysis::rows_from_csv(&text)
                        .with_context(|| format!("invalid report {}", path.display()))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let merged = analysis::merge_rows(tables);
            emit(out.as_deref(), &analysis::rows_to_csv(&merged)?)?;
            if let Some(path) = summary {
                let text = analysis::summary_to_csv(&analysis::summarize(&merged))?;
                emit(Some(&path), &text)?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
