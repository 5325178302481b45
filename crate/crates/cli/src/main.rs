use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ego_layers_core::{
    run_analyze, run_synth, Error, InputFormat, Mode, ReportFormat, RunConfig, SynthConfig,
};

/// Layer structure of ego networks from interaction logs.
#[derive(Debug, Parser)]
#[command(name = "ego-layers", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect layers in an interaction log and write a population report.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic population with planted layers.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Events,
    Windowed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Input CSV file.
    #[arg(long)]
    input: PathBuf,

    /// Input layout: `src,dst,timestamp` events or `a,b,c1,c2,c3,c4` windows.
    #[arg(long, value_enum)]
    format: FormatArg,

    /// Crawl time of an event log, seconds since the epoch.
    #[arg(long)]
    download_time: Option<u64>,

    /// Dataset span of a windowed log, in days.
    #[arg(long)]
    span_days: Option<f64>,

    /// Fraction of nodes whose link counts are doubled.
    #[arg(long, default_value_t = 0.0)]
    reconstruct_fraction: f64,

    /// Seed for the reconstruction sample.
    #[arg(long)]
    seed: Option<u64>,

    /// Ego activity threshold, interactions per month (strict).
    #[arg(long, default_value_t = 10.0)]
    min_ego_rate: f64,

    /// Active relationship threshold, interactions per year (strict).
    #[arg(long, default_value_t = 1.0)]
    min_edge_freq: f64,

    /// Cluster every ego with this k instead of selecting k by AIC.
    #[arg(long, conflicts_with = "k_max")]
    k: Option<usize>,

    /// Largest k scanned during selection.
    #[arg(long)]
    k_max: Option<usize>,

    /// Cross-check layer sizes with calibrated DBSCAN.
    #[arg(long)]
    dbscan_check: bool,

    /// CSV with an `ego` column restricting which users count as egos.
    #[arg(long)]
    ego_list: Option<PathBuf>,

    /// Report path; the report goes to stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "json")]
    report_format: ReportFormatArg,

    /// Directory receiving one `x,ccdf` table per distribution.
    #[arg(long)]
    emit_ccdf: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "EGO_LAYERS_WORKERS")]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Layer spec JSON.
    #[arg(long)]
    spec: PathBuf,

    /// Number of egos.
    #[arg(long)]
    egos: usize,

    #[arg(long)]
    span_years: f64,

    #[arg(long)]
    seed: u64,

    /// Output directory for events.csv, oracle.csv and synth.json.
    #[arg(long)]
    out: PathBuf,

    #[arg(long, env = "EGO_LAYERS_WORKERS")]
    workers: Option<usize>,
}

impl AnalyzeArgs {
    fn into_config(self) -> RunConfig {
        let mode = match self.k {
            Some(k) => Mode::Fixed { k },
            None => Mode::Select {
                k_max: self
                    .k_max
                    .unwrap_or(ego_layers_core::cluster::DEFAULT_K_MAX),
            },
        };
        RunConfig {
            input: self.input,
            format: match self.format {
                FormatArg::Events => InputFormat::Events,
                FormatArg::Windowed => InputFormat::Windowed,
            },
            download_time: self.download_time,
            span_days: self.span_days,
            reconstruct_fraction: self.reconstruct_fraction,
            seed: self.seed,
            min_ego_rate: self.min_ego_rate,
            min_edge_freq: self.min_edge_freq,
            mode,
            dbscan_check: self.dbscan_check,
            ego_list: self.ego_list,
            report: self.report,
            report_format: match self.report_format {
                ReportFormatArg::Json => ReportFormat::Json,
                ReportFormatArg::Csv => ReportFormat::Csv,
            },
            emit_ccdf: self.emit_ccdf,
            workers: self.workers,
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<(), Error> {
    let config = args.into_config();
    let outcome = run_analyze(&config)?;
    if config.report.is_none() {
        let mut stdout = std::io::stdout().lock();
        let written = match config.report_format {
            ReportFormat::Json => outcome.report.to_json().and_then(|s| {
                stdout
                    .write_all(s.as_bytes())
                    .map_err(|e| Error::io("<stdout>", e))
            }),
            ReportFormat::Csv => outcome
                .report
                .write_csv(&mut stdout)
                .map_err(|e| Error::io("<stdout>", e)),
        };
        written?;
    }
    eprintln!("{}", outcome.summary);
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Error> {
    let summary = run_synth(&SynthConfig {
        spec: args.spec,
        egos: args.egos,
        span_years: args.span_years,
        seed: args.seed,
        out: args.out,
        workers: args.workers,
    })?;
    eprintln!("{summary}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Synth(args) => synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = if err.is_config() { 2 } else { 1 };
            let err = anyhow::Error::new(err).context("ego-layers failed");
            eprintln!("error: {err:#}");
            ExitCode::from(code)
        }
    }
}
