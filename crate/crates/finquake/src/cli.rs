//! Command-line orchestration: argument parsing, config files, seed
//! management, experiment recipes, and all file output.
//!
//! Every invocation that writes files also writes a `manifest.json` holding
//! the fully resolved configuration and master seed, which is sufficient to
//! regenerate the outputs byte-for-byte. Manifests carry no timestamps for
//! exactly that reason.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::backtest::{run_backtest, BacktestConfig};
use crate::dma::{hurst_global, hurst_sliding, GridSpec};
use crate::error::{Error, Result};
use crate::fitstats::{compare_models, fit_exponential, fit_power_law, log_binned_histogram, DistributionFit};
use crate::netgen::{build_scale_free, build_small_world, Network};
use crate::quake::{run_simulation, EndPolicy, Placement, QuakeConfig, SimulationOutput};
use crate::rng::{self, derive_seed};
use crate::series::{load_series, returns, synth_series, ColumnSpec, IndexSeries, SynthModel};
use crate::strategy::{RsiSpec, StrategySpec};
use crate::wealth::GroupSummary;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "FINQUAKE_OUT";

#[derive(Debug, Parser)]
#[command(
    name = "finquake",
    version,
    about = "Market time-series analysis and herding-avalanche simulation",
    args_override_self = true
)]
pub struct Cli {
    /// key=value file of defaults; explicit flags win
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory (default: $FINQUAKE_OUT or the working directory)
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DMA curve, global Hurst exponent, optional sliding Hurst profile
    Analyze(AnalyzeArgs),
    /// Score the rnd/mom/rsi strategies over equal trading windows
    Backtest(BacktestArgs),
    /// Run the avalanche model on a trader network
    Simulate(SimulateArgs),
    /// Fit power-law / exponential tails to a column of values
    Fit(FitArgs),
    /// Generate a synthetic daily index series
    Synth(SynthArgs),
    /// Canned experiment recipes
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Input CSV of daily closes
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// Close column, by zero-based index or header name
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Date column, by index or name
    #[arg(long)]
    pub date_column: Option<String>,
    /// Window-size grid density for the DMA curve
    #[arg(long, default_value_t = 24)]
    pub points_per_decade: usize,
    /// Also compute the sliding Hurst profile
    #[arg(long)]
    pub sliding: bool,
    /// Sliding window size T_s in days
    #[arg(long, default_value_t = 1000)]
    pub window: usize,
    /// Sliding step s in days
    #[arg(long, default_value_t = 20)]
    pub step: usize,
    /// Also export the returns series as index,value
    #[arg(long)]
    pub export_returns: bool,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// Input CSV of daily closes (falls back to a synthetic series)
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Comma-separated window counts
    #[arg(long, default_value = "3,9,18,30", value_delimiter = ',')]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Strategies to score
    #[arg(long, default_value = "rnd,mom,rsi", value_delimiter = ',')]
    pub strategies: Vec<String>,
    /// Momentum lookback in days
    #[arg(long, default_value_t = 7)]
    pub mom_lag: usize,
    /// RSI period in days
    #[arg(long, default_value_t = 14)]
    pub rsi_period: usize,
    /// RSI trend-comparison window in days
    #[arg(long, default_value_t = 14)]
    pub rsi_trend: usize,
    #[command(flatten)]
    pub synth: SynthFallback,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Network topology
    #[arg(long, value_enum, default_value_t = NetworkKind::Sw)]
    pub network: NetworkKind,
    /// Lattice side L (small-world; N = L^2)
    #[arg(long, default_value_t = 40)]
    pub side: usize,
    /// Rewiring probability p (small-world)
    #[arg(long, default_value_t = 0.02)]
    pub rewire_p: f64,
    /// Node count N (scale-free)
    #[arg(long, default_value_t = 1600)]
    pub nodes: usize,
    /// Links per arriving node m (scale-free)
    #[arg(long, default_value_t = 2)]
    pub sf_m: usize,
    /// Information transfer fraction (default 0.84 on sw, 0.95 on sf)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Activation threshold I_th
    #[arg(long, default_value_t = 1.0)]
    pub i_th: f64,
    /// Fraction of uniformly placed random traders
    #[arg(long, conflicts_with = "hub_k_min")]
    pub p_rnd: Option<f64>,
    /// Convert nodes with degree above this threshold to random traders
    #[arg(long)]
    pub hub_k_min: Option<i64>,
    /// Quakes per run
    #[arg(long, default_value_t = 3000)]
    pub quakes: usize,
    /// Drive-step safety cap per run
    #[arg(long, default_value_t = 500_000_000)]
    pub max_steps: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Input CSV of daily closes (falls back to a synthetic series)
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub column: String,
    #[arg(long, default_value_t = 14)]
    pub rsi_period: usize,
    #[arg(long, default_value_t = 14)]
    pub rsi_trend: usize,
    /// Wrap around the series end instead of stopping
    #[arg(long)]
    pub wrap: bool,
    /// Worker threads for concurrent runs (default: all cores)
    #[arg(long)]
    pub workers: Option<usize>,
    /// Export each run's network as an edge list plus metadata
    #[arg(long)]
    pub export_network: bool,
    /// Quake ordinals whose information field to export
    #[arg(long, value_delimiter = ',')]
    pub snapshot_quakes: Vec<usize>,
    #[command(flatten)]
    pub synth: SynthFallback,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Input CSV of positive values
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value = "0")]
    pub column: String,
    /// Tail cutoff (default: smallest observed value)
    #[arg(long)]
    pub x_min: Option<f64>,
    #[arg(long, value_enum, default_value_t = FitKind::Compare)]
    pub model: FitKind,
    #[arg(long, default_value_t = 10)]
    pub bins_per_decade: usize,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Gbm)]
    pub model: SynthKind,
    #[arg(long, default_value_t = 5000)]
    pub days: usize,
    #[arg(long, default_value_t = 0.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.02)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub start: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "synthetic")]
    pub label: String,
}

/// Synthetic-series fallback used when a subcommand gets no --input.
#[derive(Debug, Args)]
pub struct SynthFallback {
    /// Fallback series length in days
    #[arg(long, default_value_t = 5000)]
    pub synth_days: usize,
    /// Fallback daily volatility
    #[arg(long, default_value_t = 0.02)]
    pub synth_sigma: f64,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Which canned experiment to run
    #[arg(value_enum)]
    pub figure: Figure,
    /// Real index CSV; recipes fall back to a synthetic series with a warning
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long, default_value = "0")]
    pub column: String,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    #[arg(long, default_value_t = 3000)]
    pub quakes: usize,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub synth: SynthFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NetworkKind {
    Sw,
    Sf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitKind {
    Powerlaw,
    Exponential,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Gbm,
    Walk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[allow(clippy::enum_variant_names)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig7,
    Fig8,
    Fig10,
    Fig11,
    Fig12,
    Fig13,
}

/// Entry point wrapper: parses, runs, prints the JSON summary, maps errors
/// to a single-line diagnostic and a nonzero exit status.
pub fn main_with_args<I>(args: I) -> i32
where
    I: IntoIterator<Item = OsString>,
{
    let raw: Vec<OsString> = args.into_iter().collect();
    match run(raw) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            0
        }
        Err(Error::Clap(e)) => {
            // clap prints its own help/usage text
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

impl From<clap::Error> for Error {
    fn from(e: clap::Error) -> Self {
        Error::Clap(Box::new(e))
    }
}

/// Parse argv (expanding any config file) and execute. Returns the JSON
/// summary the binary prints to stdout.
pub fn run(raw: Vec<OsString>) -> Result<Value> {
    let cli = Cli::try_parse_from(raw.clone())?;
    let cli = match &cli.config {
        Some(path) => {
            let expanded = expand_config(&raw, subcommand_token(&cli.command), path)?;
            Cli::try_parse_from(expanded)?
        }
        None => cli,
    };
    let out_dir = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)?;

    match cli.command {
        Command::Analyze(args) => cmd_analyze(&out_dir, args),
        Command::Backtest(args) => cmd_backtest(&out_dir, args),
        Command::Simulate(args) => cmd_simulate(&out_dir, args),
        Command::Fit(args) => cmd_fit(&out_dir, args),
        Command::Synth(args) => cmd_synth(&out_dir, args),
        Command::Reproduce(args) => cmd_reproduce(&out_dir, args),
    }
}

fn subcommand_token(command: &Command) -> &'static str {
    match command {
        Command::Analyze(_) => "analyze",
        Command::Backtest(_) => "backtest",
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Synth(_) => "synth",
        Command::Reproduce(_) => "reproduce",
    }
}

/// Turn `key=value` config lines into flags injected right after the
/// subcommand token, so explicit command-line flags override them.
fn expand_config(raw: &[OsString], subcommand: &str, path: &Path) -> Result<Vec<OsString>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::invalid(format!(
                "config {} line {}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        match value {
            "true" => injected.push(format!("--{key}").into()),
            "false" => {} // flags default to off; omit
            _ => {
                injected.push(format!("--{key}").into());
                injected.push(value.into());
            }
        }
    }
    let pos = raw
        .iter()
        .position(|a| a.to_string_lossy() == subcommand)
        .ok_or_else(|| Error::invalid(format!("subcommand {subcommand} not found in argv")))?;
    let mut expanded: Vec<OsString> = raw[..=pos].to_vec();
    expanded.extend(injected);
    expanded.extend(raw[pos + 1..].to_vec());
    Ok(expanded)
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

struct OutputSet {
    dir: PathBuf,
    files: Vec<String>,
    warnings: Vec<String>,
}

impl OutputSet {
    fn new(dir: &Path) -> Self {
        OutputSet {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        let mut file = fs::File::create(&path)?;
        file.write_all(contents.as_bytes())?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Manifest with the resolved config and master seed; written last so it
    /// lists every produced file.
    fn finish(mut self, command: &str, config: Value, master_seed: u64) -> Result<Value> {
        let manifest = json!({
            "command": command,
            "config": config,
            "master_seed": master_seed,
            "warnings": self.warnings,
            "outputs": self.files,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

fn csv_line(fields: &[String]) -> String {
    fields.join(",")
}

fn fit_json(fit: &DistributionFit) -> Value {
    json!({
        "model": fit.model.to_string(),
        "parameter": fit.parameter,
        "x_min": fit.x_min,
        "n_tail": fit.n_tail,
        "log_likelihood": fit.log_likelihood,
        "ls_log_slope": fit.ls_log_slope,
        "method": fit.method,
    })
}

fn group_json(group: &GroupSummary) -> Value {
    serde_json::to_value(group).unwrap_or_default()
}

/// Load an index series or fall back to a deterministic synthetic one.
fn series_or_synth(
    input: Option<&Path>,
    column: &str,
    fallback: &SynthFallback,
    master_seed: u64,
    outputs: &mut OutputSet,
) -> Result<IndexSeries> {
    match input {
        Some(path) => load_series(path, &ColumnSpec::parse(column), None),
        None => {
            let seed = derive_seed(master_seed, rng::stream::SERIES);
            outputs.warn(format!(
                "no --input given; using a synthetic geometric walk (days={}, sigma={}, seed={seed})",
                fallback.synth_days, fallback.synth_sigma
            ));
            synth_series(
                SynthModel::Gbm {
                    mu: 0.0,
                    sigma: fallback.synth_sigma,
                },
                fallback.synth_days,
                1000.0,
                seed,
                "synthetic-gbm",
            )
        }
    }
}

/// Positive-value column loader for `fit`.
fn load_values(path: &Path, column: &str) -> Result<Vec<f64>> {
    let spec = ColumnSpec::parse(column);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let records: Vec<csv::StringRecord> = reader.records().collect::<std::result::Result<_, _>>()?;
    if records.is_empty() {
        return Err(Error::insufficient(format!("{} is empty", path.display())));
    }
    let col = match &spec {
        ColumnSpec::Index(i) => *i,
        ColumnSpec::Name(name) => records[0]
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::invalid(format!("column {name:?} not found")))?,
    };
    let has_header = matches!(spec, ColumnSpec::Name(_))
        || records[0].get(col).map_or(true, |c| c.parse::<f64>().is_err());
    let mut values = Vec::new();
    for (idx, record) in records.iter().enumerate().skip(usize::from(has_header)) {
        let row = idx + 1;
        let cell = record.get(col).ok_or_else(|| Error::Parse {
            row,
            msg: format!("row has {} column(s), wanted column {col}", record.len()),
        })?;
        if cell.is_empty() {
            continue;
        }
        let value: f64 = cell.parse().map_err(|_| Error::Parse {
            row,
            msg: format!("{cell:?} is not a number"),
        })?;
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::insufficient(format!("{} holds no data rows", path.display())));
    }
    Ok(values)
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

fn cmd_analyze(out_dir: &Path, args: AnalyzeArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let date_spec = args.date_column.as_deref().map(ColumnSpec::parse);
    let series = load_series(&args.input, &ColumnSpec::parse(&args.column), date_spec.as_ref())?;
    let grid = GridSpec {
        points_per_decade: args.points_per_decade,
    };
    let profile = hurst_global(&series, &grid)?;

    let mut curve = String::from("n,sigma\n");
    for (n, sigma) in profile.n_values.iter().zip(&profile.sigma_values) {
        curve.push_str(&format!("{n},{sigma}\n"));
    }
    outputs.write("dma_curve.csv", &curve)?;

    let mut summary = json!({
        "label": series.label(),
        "days": series.len(),
        "hurst": profile.hurst,
        "intercept": profile.intercept,
        "residual": profile.residual,
        "grid_points": profile.n_values.len(),
    });

    if args.sliding {
        let sliding = hurst_sliding(&series, args.window, args.step, &grid)?;
        let mut text = String::from("j,H\n");
        for (j, h) in sliding.start_days.iter().zip(&sliding.h_values) {
            text.push_str(&format!("{j},{h}\n"));
        }
        outputs.write("sliding_hurst.csv", &text)?;
        summary["sliding"] = json!({
            "window": sliding.window,
            "step": sliding.step,
            "count": sliding.h_values.len(),
            "min": sliding.h_values.iter().cloned().fold(f64::INFINITY, f64::min),
            "max": sliding.h_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        });
    }

    if args.export_returns {
        let rets = returns(&series);
        let mut text = String::from("index,value\n");
        for (i, r) in rets.values().iter().enumerate() {
            text.push_str(&format!("{i},{r}\n"));
        }
        outputs.write("returns.csv", &text)?;
    }

    outputs.write_json("summary.json", &summary)?;
    let config = json!({
        "input": args.input.display().to_string(),
        "column": args.column,
        "date_column": args.date_column,
        "points_per_decade": args.points_per_decade,
        "sliding": args.sliding,
        "window": args.window,
        "step": args.step,
        "export_returns": args.export_returns,
    });
    let manifest = outputs.finish("analyze", config, 0)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

fn parse_strategies(names: &[String], mom_lag: usize, rsi: RsiSpec) -> Result<Vec<StrategySpec>> {
    let mut specs = Vec::new();
    for name in names {
        match name.trim().to_ascii_lowercase().as_str() {
            "rnd" => specs.push(StrategySpec::Rnd),
            "mom" => specs.push(StrategySpec::Mom { lag: mom_lag }),
            "rsi" => specs.push(StrategySpec::Rsi(rsi)),
            other => return Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
    if specs.is_empty() {
        return Err(Error::invalid("no strategies selected"));
    }
    Ok(specs)
}

fn cmd_backtest(out_dir: &Path, args: BacktestArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let series = series_or_synth(
        args.input.as_deref(),
        &args.column,
        &args.synth,
        args.seed,
        &mut outputs,
    )?;
    let rsi = RsiSpec::new(args.rsi_period, args.rsi_trend)?;
    let strategies = parse_strategies(&args.strategies, args.mom_lag, rsi)?;

    let mut per_window_summaries = Vec::new();
    for &windows in &args.windows {
        let cfg = BacktestConfig {
            windows,
            runs: args.runs,
            strategies: strategies.clone(),
            seed: args.seed,
        };
        let stats = run_backtest(&series, &cfg)?;

        let mut header = vec!["window".to_string(), "vol".to_string()];
        for strat in &stats.strategies {
            header.push(format!("{}_win", strat.spec.name()));
        }
        let mut text = csv_line(&header);
        text.push('\n');
        for w in 0..stats.windows {
            let mut fields = vec![w.to_string(), format!("{}", stats.volatility[w])];
            for strat in &stats.strategies {
                fields.push(format!("{}", strat.per_window_win_pct[w]));
            }
            text.push_str(&csv_line(&fields));
            text.push('\n');
        }
        outputs.write(&format!("backtest_w{windows}.csv"), &text)?;

        per_window_summaries.push(json!({
            "windows": windows,
            "window_len": stats.window_len,
            "scored_days": stats.scored_days,
            "strategies": stats.strategies.iter().map(|s| json!({
                "name": s.spec.name(),
                "mean_win_pct": s.mean_win_pct,
                "std_win_pct": s.std_win_pct,
            })).collect::<Vec<_>>(),
        }));
    }

    let summary = json!({
        "label": series.label(),
        "days": series.len(),
        "runs": args.runs,
        "results": per_window_summaries,
    });
    outputs.write_json("summary.json", &summary)?;
    let config = json!({
        "input": args.input.as_ref().map(|p| p.display().to_string()),
        "column": args.column,
        "windows": args.windows,
        "runs": args.runs,
        "seed": args.seed,
        "strategies": args.strategies,
        "mom_lag": args.mom_lag,
        "rsi_period": args.rsi_period,
        "rsi_trend": args.rsi_trend,
        "synth_days": args.synth.synth_days,
        "synth_sigma": args.synth.synth_sigma,
    });
    let manifest = outputs.finish("backtest", config, args.seed)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

/// One simulation run plus the network it ran on.
struct RunArtifacts {
    run: usize,
    net: Network,
    output: SimulationOutput,
}

fn simulate_runs(
    network: NetworkKind,
    side: usize,
    rewire_p: f64,
    nodes: usize,
    sf_m: usize,
    placement: Placement,
    alpha: f64,
    i_th: f64,
    rsi: RsiSpec,
    quakes: usize,
    max_steps: u64,
    runs: usize,
    master_seed: u64,
    series: &IndexSeries,
    wrap: bool,
    workers: Option<usize>,
    snapshot_quakes: &[usize],
) -> Result<Vec<RunArtifacts>> {
    let one_run = |run: usize| -> Result<RunArtifacts> {
        let run_seed = derive_seed(master_seed, run as u64);
        let net_seed = derive_seed(run_seed, rng::stream::NETWORK);
        let net = match network {
            NetworkKind::Sw => build_small_world(side, rewire_p, net_seed)?,
            NetworkKind::Sf => build_scale_free(nodes, sf_m, net_seed)?,
        };
        let cfg = QuakeConfig {
            alpha,
            info_threshold: i_th,
            placement,
            rsi,
            max_quakes: Some(quakes),
            max_steps: Some(max_steps),
            end_policy: if wrap { EndPolicy::Wrap } else { EndPolicy::Stop },
            seed: run_seed,
            record_stakes: false,
            snapshot_quakes: snapshot_quakes.to_vec(),
        };
        let output = run_simulation(&net, series, &cfg)?;
        Ok(RunArtifacts { run, net, output })
    };

    use rayon::prelude::*;
    let indices: Vec<usize> = (0..runs).collect();
    let results: Vec<Result<RunArtifacts>> = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
            .install(|| indices.par_iter().map(|&r| one_run(r)).collect()),
        None => indices.par_iter().map(|&r| one_run(r)).collect(),
    };
    results.into_iter().collect()
}

fn write_simulation_outputs(
    outputs: &mut OutputSet,
    artifacts: &[RunArtifacts],
    export_network: bool,
) -> Result<Value> {
    let mut merged_quakes = String::from("run,ordinal,day,prediction,size_signed,topples\n");
    let mut merged_wealth = String::from("run,agent,kind,degree,capital,bets\n");
    let mut merged_sizes: Vec<f64> = Vec::new();
    let mut merged_capitals: Vec<f64> = Vec::new();
    let mut merged_rnd_capitals: Vec<f64> = Vec::new();
    let mut per_run_stats = Vec::new();

    for art in artifacts {
        let r = art.run;
        let mut text = String::from("ordinal,day,prediction,size_signed,topples\n");
        for q in &art.output.quakes {
            let line = format!("{},{},{},{},{}\n", q.ordinal, q.day, q.prediction, q.signed_size, q.topples);
            text.push_str(&line);
            merged_quakes.push_str(&format!("{r},{line}"));
        }
        outputs.write(&format!("quakes_run{r}.csv"), &text)?;

        let mask = art.output.random_mask();
        let mut text = String::from("agent,kind,degree,capital,bets\n");
        for (agent, account) in art.output.ledger.accounts().iter().enumerate() {
            let kind = art.output.traders[agent].kind.tag();
            let degree = art.net.degree(agent as u32);
            let line = format!("{agent},{kind},{degree},{},{}\n", account.capital, account.bets);
            text.push_str(&line);
            merged_wealth.push_str(&format!("{r},{line}"));
            merged_capitals.push(account.capital);
            if mask[agent] {
                merged_rnd_capitals.push(account.capital);
            }
        }
        outputs.write(&format!("wealth_run{r}.csv"), &text)?;

        for (ordinal, info) in &art.output.snapshots {
            let record = art.output.quakes.iter().find(|q| q.ordinal == *ordinal);
            let mut text = String::from("node,info,member\n");
            for (node, value) in info.iter().enumerate() {
                let member = record
                    .map(|q| q.members.contains(&(node as u32)))
                    .unwrap_or(false);
                text.push_str(&format!("{node},{value},{}\n", u8::from(member)));
            }
            outputs.write(&format!("snapshot_run{r}_q{ordinal}.csv"), &text)?;
        }

        if export_network {
            let mut text = String::from("u,v\n");
            for &(u, v) in art.net.edges() {
                text.push_str(&format!("{u},{v}\n"));
            }
            outputs.write(&format!("network_run{r}.csv"), &text)?;
            let meta = json!({
                "topology": art.net.topology().tag(),
                "nodes": art.net.node_count(),
                "edges": art.net.edges().len(),
                "mean_degree": art.net.mean_degree(),
                "seed": art.net.seed(),
                "degree_histogram": art.net.degree_histogram(),
            });
            outputs.write_json(&format!("network_run{r}.json"), &meta)?;
        }

        let sizes = art.output.abs_sizes();
        let max_size = sizes.iter().cloned().fold(0.0f64, f64::max);
        merged_sizes.extend(sizes);
        per_run_stats.push(json!({
            "run": r,
            "quakes": art.output.quakes.len(),
            "max_abs_size": max_size,
            "steps": art.output.steps,
            "rnd_bets": art.output.rnd_bets,
        }));
    }

    outputs.write("quakes.csv", &merged_quakes)?;
    outputs.write("wealth.csv", &merged_wealth)?;

    let all = GroupSummary::from_capitals(&merged_capitals, crate::wealth::INITIAL_CAPITAL)?;
    let random = if merged_rnd_capitals.is_empty() {
        None
    } else {
        Some(GroupSummary::from_capitals(
            &merged_rnd_capitals,
            crate::wealth::INITIAL_CAPITAL,
        )?)
    };

    let size_fit = fit_power_law(&merged_sizes, 5.0).ok();
    let size_cmp = compare_models(&merged_sizes, 5.0).ok();
    Ok(json!({
        "runs": per_run_stats,
        "cumulated": {
            "quakes": merged_sizes.len(),
            "max_abs_size": merged_sizes.iter().cloned().fold(0.0f64, f64::max),
            "size_fit": size_fit.as_ref().map(fit_json),
            "size_model_preference": size_cmp.as_ref().map(|c| c.preferred.to_string()),
            "wealth": {
                "all": group_json(&all),
                "random": random.as_ref().map(group_json),
            },
        },
    }))
}

fn cmd_simulate(out_dir: &Path, args: SimulateArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let series = series_or_synth(
        args.input.as_deref(),
        &args.column,
        &args.synth,
        args.seed,
        &mut outputs,
    )?;
    let alpha = args.alpha.unwrap_or(match args.network {
        NetworkKind::Sw => 0.84,
        NetworkKind::Sf => 0.95,
    });
    let placement = match (args.p_rnd, args.hub_k_min) {
        (Some(p), None) => Placement::UniformFraction(p),
        (None, Some(k)) => Placement::HubsAboveDegree(k),
        (None, None) => Placement::None,
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let rsi = RsiSpec::new(args.rsi_period, args.rsi_trend)?;

    let artifacts = simulate_runs(
        args.network,
        args.side,
        args.rewire_p,
        args.nodes,
        args.sf_m,
        placement,
        alpha,
        args.i_th,
        rsi,
        args.quakes,
        args.max_steps,
        args.runs,
        args.seed,
        &series,
        args.wrap,
        args.workers,
        &args.snapshot_quakes,
    )?;
    let summary = write_simulation_outputs(&mut outputs, &artifacts, args.export_network)?;
    outputs.write_json("summary.json", &summary)?;

    let config = json!({
        "network": match args.network { NetworkKind::Sw => "sw", NetworkKind::Sf => "sf" },
        "side": args.side,
        "rewire_p": args.rewire_p,
        "nodes": args.nodes,
        "sf_m": args.sf_m,
        "alpha": alpha,
        "i_th": args.i_th,
        "p_rnd": args.p_rnd,
        "hub_k_min": args.hub_k_min,
        "quakes": args.quakes,
        "max_steps": args.max_steps,
        "runs": args.runs,
        "seed": args.seed,
        "input": args.input.as_ref().map(|p| p.display().to_string()),
        "column": args.column,
        "rsi_period": args.rsi_period,
        "rsi_trend": args.rsi_trend,
        "wrap": args.wrap,
        "export_network": args.export_network,
        "snapshot_quakes": args.snapshot_quakes,
        "synth_days": args.synth.synth_days,
        "synth_sigma": args.synth.synth_sigma,
    });
    let manifest = outputs.finish("simulate", config, args.seed)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

fn cmd_fit(out_dir: &Path, args: FitArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let values = load_values(&args.input, &args.column)?;
    for &v in &values {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("fit needs positive values, got {v}")));
        }
    }
    let x_min = args
        .x_min
        .unwrap_or_else(|| values.iter().cloned().fold(f64::INFINITY, f64::min));

    let hist = log_binned_histogram(&values, args.bins_per_decade)?;
    let mut text = String::from("bin_center,density\n");
    for (center, density) in hist.centers().iter().zip(&hist.densities) {
        text.push_str(&format!("{center},{density}\n"));
    }
    outputs.write("histogram.csv", &text)?;

    let report = match args.model {
        FitKind::Powerlaw => json!({ "power_law": fit_json(&fit_power_law(&values, x_min)?) }),
        FitKind::Exponential => json!({ "exponential": fit_json(&fit_exponential(&values, x_min)?) }),
        FitKind::Compare => {
            let cmp = compare_models(&values, x_min)?;
            json!({
                "preferred": cmp.preferred.to_string(),
                "log_likelihood_ratio": cmp.log_likelihood_ratio,
                "low_confidence": cmp.low_confidence,
                "power_law": fit_json(&cmp.power_law),
                "exponential": fit_json(&cmp.exponential),
            })
        }
    };
    let summary = json!({
        "input": args.input.display().to_string(),
        "samples": values.len(),
        "x_min": x_min,
        "report": report,
    });
    outputs.write_json("fit_report.json", &summary)?;
    let config = json!({
        "input": args.input.display().to_string(),
        "column": args.column,
        "x_min": args.x_min,
        "model": format!("{:?}", args.model).to_lowercase(),
        "bins_per_decade": args.bins_per_decade,
    });
    let manifest = outputs.finish("fit", config, 0)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

fn cmd_synth(out_dir: &Path, args: SynthArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let model = match args.model {
        SynthKind::Gbm => SynthModel::Gbm {
            mu: args.mu,
            sigma: args.sigma,
        },
        SynthKind::Walk => SynthModel::GaussianWalk {
            mu: args.mu,
            sigma: args.sigma,
        },
    };
    let series = synth_series(model, args.days, args.start, args.seed, args.label.clone())?;
    let mut text = String::from("day,close\n");
    for (day, close) in series.values().iter().enumerate() {
        text.push_str(&format!("{day},{close}\n"));
    }
    outputs.write("series.csv", &text)?;
    let summary = json!({
        "label": series.label(),
        "days": series.len(),
        "first": series.values()[0],
        "last": series.values()[series.len() - 1],
    });
    outputs.write_json("summary.json", &summary)?;
    let config = json!({
        "model": format!("{:?}", args.model).to_lowercase(),
        "days": args.days,
        "mu": args.mu,
        "sigma": args.sigma,
        "start": args.start,
        "seed": args.seed,
        "label": args.label,
    });
    let manifest = outputs.finish("synth", config, args.seed)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

fn cmd_reproduce(out_dir: &Path, args: ReproduceArgs) -> Result<Value> {
    let mut outputs = OutputSet::new(out_dir);
    let series = series_or_synth(
        args.input.as_deref(),
        &args.column,
        &args.synth,
        args.seed,
        &mut outputs,
    )?;
    let rsi = RsiSpec::default();

    let sw_runs = |outputs: &mut OutputSet,
                   placement: Placement,
                   alpha: f64,
                   quakes: usize,
                   runs: usize,
                   tag: &str|
     -> Result<Value> {
        let artifacts = simulate_runs(
            NetworkKind::Sw,
            40,
            0.02,
            1600,
            2,
            placement,
            alpha,
            1.0,
            rsi,
            quakes,
            500_000_000,
            runs,
            derive_seed(args.seed, hash_tag(tag)),
            &series,
            true,
            args.workers,
            &[],
        )?;
        let sizes: Vec<f64> = artifacts.iter().flat_map(|a| a.output.abs_sizes()).collect();
        let capitals: Vec<f64> = artifacts
            .iter()
            .flat_map(|a| a.output.ledger.accounts().iter().map(|acc| acc.capital))
            .collect();
        if !sizes.is_empty() {
            let hist = log_binned_histogram(&sizes, 10)?;
            let mut text = String::from("bin_center,density\n");
            for (c, d) in hist.centers().iter().zip(&hist.densities) {
                text.push_str(&format!("{c},{d}\n"));
            }
            outputs.write(&format!("sizes_hist_{tag}.csv"), &text)?;
        }
        let fit = fit_power_law(&sizes, 5.0).ok();
        let cmp = compare_models(&sizes, 5.0).ok();
        let wealth_fit = fit_power_law(&capitals, 1000.0).ok();
        Ok(json!({
            "tag": tag,
            "quakes": sizes.len(),
            "max_abs_size": sizes.iter().cloned().fold(0.0f64, f64::max),
            "size_fit": fit.as_ref().map(fit_json),
            "size_model_preference": cmp.as_ref().map(|c| c.preferred.to_string()),
            "wealth_tail_fit": wealth_fit.as_ref().map(fit_json),
        }))
    };

    let summary = match args.figure {
        Figure::Fig2 => {
            let grid = GridSpec::default();
            let profile = hurst_global(&series, &grid)?;
            let mut curve = String::from("n,sigma\n");
            for (n, sigma) in profile.n_values.iter().zip(&profile.sigma_values) {
                curve.push_str(&format!("{n},{sigma}\n"));
            }
            outputs.write("dma_curve.csv", &curve)?;
            let window = 1000.min(series.len());
            let sliding = hurst_sliding(&series, window, 20, &grid)?;
            let mut text = String::from("j,H\n");
            for (j, h) in sliding.start_days.iter().zip(&sliding.h_values) {
                text.push_str(&format!("{j},{h}\n"));
            }
            outputs.write("sliding_hurst.csv", &text)?;
            json!({
                "figure": "fig2",
                "hurst": profile.hurst,
                "sliding_count": sliding.h_values.len(),
            })
        }
        Figure::Fig3 | Figure::Fig4 | Figure::Fig5 => {
            let windows: Vec<usize> = match args.figure {
                Figure::Fig5 => vec![30],
                _ => vec![3, 9, 18, 30],
            };
            let strategies = vec![
                StrategySpec::Rnd,
                StrategySpec::Mom { lag: 7 },
                StrategySpec::Rsi(rsi),
            ];
            let mut results = Vec::new();
            for &windows_n in &windows {
                let cfg = BacktestConfig {
                    windows: windows_n,
                    runs: args.runs,
                    strategies: strategies.clone(),
                    seed: args.seed,
                };
                let stats = run_backtest(&series, &cfg)?;
                let mut text = String::from("window,vol,rnd_win,mom_win,rsi_win\n");
                for w in 0..stats.windows {
                    text.push_str(&format!(
                        "{w},{},{},{},{}\n",
                        stats.volatility[w],
                        stats.strategies[0].per_window_win_pct[w],
                        stats.strategies[1].per_window_win_pct[w],
                        stats.strategies[2].per_window_win_pct[w],
                    ));
                }
                outputs.write(&format!("backtest_w{windows_n}.csv"), &text)?;
                results.push(json!({
                    "windows": windows_n,
                    "strategies": stats.strategies.iter().map(|s| json!({
                        "name": s.spec.name(),
                        "mean_win_pct": s.mean_win_pct,
                        "std_win_pct": s.std_win_pct,
                    })).collect::<Vec<_>>(),
                }));
            }
            json!({ "figure": format!("{:?}", args.figure).to_lowercase(), "results": results })
        }
        Figure::Fig7 => {
            // single-run quake time series with early-avalanche snapshots
            let artifacts = simulate_runs(
                NetworkKind::Sw,
                40,
                0.02,
                1600,
                2,
                Placement::None,
                0.84,
                1.0,
                rsi,
                args.quakes,
                500_000_000,
                1,
                args.seed,
                &series,
                true,
                args.workers,
                &[0, 1, 2, 3],
            )?;
            let summary = write_simulation_outputs(&mut outputs, &artifacts, false)?;
            json!({ "figure": "fig7", "simulation": summary })
        }
        Figure::Fig8 => {
            let mut panels = Vec::new();
            for (tag, placement) in [
                ("rsi_only", Placement::None),
                ("p_rnd_05", Placement::UniformFraction(0.05)),
                ("p_rnd_10", Placement::UniformFraction(0.10)),
            ] {
                panels.push(sw_runs(&mut outputs, placement, 0.84, args.quakes, args.runs, tag)?);
            }
            json!({ "figure": "fig8", "panels": panels })
        }
        Figure::Fig10 => {
            let mut panels = Vec::new();
            for (tag, placement) in [
                ("rsi_only", Placement::None),
                ("hubs_rnd", Placement::HubsAboveDegree(50)),
            ] {
                let artifacts = simulate_runs(
                    NetworkKind::Sf,
                    40,
                    0.02,
                    1600,
                    2,
                    placement,
                    0.95,
                    1.0,
                    rsi,
                    args.quakes,
                    500_000_000,
                    args.runs,
                    derive_seed(args.seed, hash_tag(tag)),
                    &series,
                    true,
                    args.workers,
                    &[],
                )?;
                let sizes: Vec<f64> = artifacts.iter().flat_map(|a| a.output.abs_sizes()).collect();
                let hist = log_binned_histogram(&sizes, 10)?;
                let mut text = String::from("bin_center,density\n");
                for (c, d) in hist.centers().iter().zip(&hist.densities) {
                    text.push_str(&format!("{c},{d}\n"));
                }
                outputs.write(&format!("sizes_hist_{tag}.csv"), &text)?;
                panels.push(json!({
                    "tag": tag,
                    "max_abs_size": sizes.iter().cloned().fold(0.0f64, f64::max),
                    "size_fit": fit_power_law(&sizes, 5.0).ok().as_ref().map(fit_json),
                }));
            }
            json!({ "figure": "fig10", "panels": panels })
        }
        Figure::Fig11 => {
            let panel = sw_runs(&mut outputs, Placement::None, 0.84, args.quakes, 1, "rsi_only")?;
            json!({ "figure": "fig11", "panel": panel })
        }
        Figure::Fig12 => {
            let mut panels = Vec::new();
            for (tag, alpha) in [("alpha_040", 0.40), ("alpha_000", 0.0)] {
                panels.push(sw_runs(&mut outputs, Placement::None, alpha, args.quakes, 1, tag)?);
            }
            json!({ "figure": "fig12", "panels": panels })
        }
        Figure::Fig13 => {
            let panel = sw_runs(
                &mut outputs,
                Placement::UniformFraction(0.10),
                0.84,
                args.quakes,
                args.runs,
                "p_rnd_10",
            )?;
            json!({ "figure": "fig13", "panel": panel })
        }
    };

    outputs.write_json("summary.json", &summary)?;
    let config = json!({
        "figure": format!("{:?}", args.figure).to_lowercase(),
        "input": args.input.as_ref().map(|p| p.display().to_string()),
        "column": args.column,
        "seed": args.seed,
        "runs": args.runs,
        "quakes": args.quakes,
        "synth_days": args.synth.synth_days,
        "synth_sigma": args.synth.synth_sigma,
    });
    let manifest = outputs.finish("reproduce", config, args.seed)?;
    Ok(json!({ "summary": summary, "manifest": manifest }))
}

/// Stable tag hash so recipe sub-experiments get disjoint seed streams.
fn hash_tag(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325u64, |acc, b| {
        (acc ^ b as u64).wrapping_mul(0x1000_0000_01b3)
    })
}
