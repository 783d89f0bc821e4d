//! Command-line front end: argument parsing, dispatch and error records.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::backtest::{
    prices_to_losses, rolling_index, run_strategy, summary_stats, BacktestConfig, Rebalance, Strategy,
    SummaryStats, TRADING_DAYS,
};
use crate::error::{unit_level, Error, Result};
use crate::indices::IndexSpec;
use crate::io::{json_number, load_csv, load_samples, write_json, write_samples, EmittedSeries};
use crate::matrix::{SampleMatrix, Weights};
use crate::models::{ratio_curve, reproduce_table, sample_model, ModelKind, ModelSpec};
use crate::optimize::{markowitz, min_dq_es, min_dq_var, min_dr_sd, OptProblem, OptResult, VarMethod};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "DIVQUOT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "divquot", version, about = "Diversification quotients and indices from loss data")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rolling diversification index over a price (or loss) file.
    Index(IndexArgs),
    /// Draw a loss sample from a model and write it as CSV.
    Simulate(SimulateArgs),
    /// Monte Carlo comparison of normal, iid t and common-shock t losses.
    Table(TableArgs),
    /// Optimize portfolio weights on a loss window.
    Optimize(OptimizeArgs),
    /// Rebalanced strategy backtest over a price file.
    Backtest(BacktestArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Index(_) => "index",
            Command::Simulate(_) => "simulate",
            Command::Table(_) => "table",
            Command::Optimize(_) => "optimize",
            Command::Backtest(_) => "backtest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct Input {
    /// CSV file with a `date` column and one price column per ticker.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Treat the input as a loss matrix (header of names, no date column).
    #[arg(long)]
    pub losses: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Measure {
    DqVar,
    DqEs,
    DrVar,
    DrEs,
    DrSd,
    DrVariance,
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long, value_enum)]
    pub measure: Measure,
    /// Level for the VaR and ES based measures.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    #[command(flatten)]
    pub input: Input,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Gaussian,
    IidT,
    CommonShockT,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Standard normal, iid t, or common-shock t with identity dispersion.
    #[arg(long, value_enum, default_value = "gaussian")]
    pub model: ModelName,
    /// JSON model description; overrides --model, --n and --nu.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long)]
    pub nu: f64,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Emit iid/common-shock ratio curves at these levels instead of the table.
    #[arg(long, value_delimiter = ',')]
    pub curve: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    DqVar,
    DqEs,
    DrSd,
    Markowitz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    /// Branch-and-bound on LP relaxations.
    Bnb,
    /// Enumeration of a simplex grid.
    Enum,
    /// Pairwise-transfer local search.
    Local,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, value_enum)]
    pub objective: Objective,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub input: Input,
    /// Use only the last WINDOW loss rows.
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long, value_enum, default_value = "bnb")]
    pub method: MethodName,
    /// Grid resolution for --method enum.
    #[arg(long, default_value_t = 200)]
    pub resolution: usize,
    #[arg(long, default_value_t = 200_000)]
    pub node_limit: usize,
    /// Annual target return for the mean-variance objective.
    #[arg(long, default_value_t = 0.10)]
    pub target: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Reference weights for tie-breaking, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub w0: Option<Vec<f64>>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BacktestArgs {
    /// One or more strategies, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', required = true)]
    pub strategy: Vec<StrategyName>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 500)]
    pub window: usize,
    #[arg(long, default_value_t = 21)]
    pub rebalance: usize,
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "local")]
    pub method: MethodName,
    /// Annual target return of the mean-variance strategy.
    #[arg(long, default_value_t = 0.10)]
    pub target: f64,
    /// Annual risk-free rate for the Sharpe ratio.
    #[arg(long, default_value_t = 0.0)]
    pub rf: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Wealth curves as CSV, one column per strategy.
    #[arg(long)]
    pub wealth: Option<PathBuf>,
    /// Statistics and rebalance weights as JSON; standard output when omitted.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyName {
    DqVar,
    DqEs,
    DrSd,
    Markowitz,
    Ew,
    Bh,
}

impl From<StrategyName> for Strategy {
    fn from(s: StrategyName) -> Self {
        match s {
            StrategyName::DqVar => Strategy::DqVar,
            StrategyName::DqEs => Strategy::DqEs,
            StrategyName::DrSd => Strategy::DrSd,
            StrategyName::Markowitz => Strategy::Markowitz,
            StrategyName::Ew => Strategy::Ew,
            StrategyName::Bh => Strategy::Bh,
        }
    }
}

/// Machine-readable failure record written to standard error.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: String,
    pub message: String,
    pub command: Option<String>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit_series(series: &EmittedSeries, out: &Output) -> Result<()> {
    let mut w = sink(out.output.as_deref())?;
    match out.format {
        Format::Csv => series.write_csv(&mut w)?,
        Format::Json => write_json(&mut w, &series.to_json())?,
    }
    w.flush()?;
    Ok(())
}

fn var_method(m: MethodName, resolution: usize, node_limit: usize) -> VarMethod {
    match m {
        MethodName::Bnb => VarMethod::BranchAndBound { node_limit },
        MethodName::Enum => VarMethod::ExactEnum { resolution },
        MethodName::Local => VarMethod::LocalSearch,
    }
}

/// Loss rows plus a label for each row: the date a price loss is realized,
/// or the row number for a loss file.
fn losses_with_labels(input: &Input) -> Result<(SampleMatrix, Vec<String>, Vec<String>)> {
    if input.losses {
        let x = load_samples(&input.input)?;
        let labels = (0..x.rows()).map(|k| k.to_string()).collect();
        let names = (1..=x.cols()).map(|i| format!("x{i}")).collect();
        Ok((x, labels, names))
    } else {
        let prices = load_csv(&input.input)?;
        let x = prices_to_losses(&prices)?;
        let labels = prices.dates()[1..]
            .iter()
            .map(|d| d.format("%Y-%m-%d").to_string())
            .collect();
        Ok((x, labels, prices.tickers().to_vec()))
    }
}

fn index(a: &IndexArgs) -> Result<()> {
    let alpha = || -> Result<f64> {
        let v = a
            .alpha
            .ok_or_else(|| Error::InvalidInput("--alpha is required for this measure".into()))?;
        unit_level(v)?;
        Ok(v)
    };
    let spec = match a.measure {
        Measure::DqVar => IndexSpec::DqVar(alpha()?),
        Measure::DqEs => IndexSpec::DqEs(alpha()?),
        Measure::DrVar => IndexSpec::DrVar(alpha()?),
        Measure::DrEs => IndexSpec::DrEs(alpha()?),
        Measure::DrSd => IndexSpec::DrSd,
        Measure::DrVariance => IndexSpec::DrVariance,
    };
    let (x, labels, _) = losses_with_labels(&a.input)?;
    let values = rolling_index(&x, a.window, spec)?;
    let key = if a.input.losses { "row" } else { "date" };
    let mut series = EmittedSeries::new(vec![key.into(), spec.label().into()]);
    for (k, v) in values.into_iter().enumerate() {
        series.push(labels[k + a.window - 1].clone(), vec![v])?;
    }
    emit_series(&series, &a.output)
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let kind = match &a.model_file {
        Some(p) => serde_json::from_reader::<_, ModelKind>(File::open(p)?)?,
        None => {
            let nu = || {
                a.nu
                    .ok_or_else(|| Error::InvalidInput("--nu is required for t models".into()))
            };
            match a.model {
                ModelName::Gaussian => ModelSpec::standard_normal(a.n, a.seed).kind,
                ModelName::IidT => ModelKind::IidT { nu: nu()?, n: a.n },
                ModelName::CommonShockT => ModelKind::CommonShockT { nu: nu()?, n: a.n },
            }
        }
    };
    let x = sample_model(&ModelSpec { kind, seed: a.seed }, a.samples)?;
    let mut w = sink(a.output.output.as_deref())?;
    match a.output.format {
        Format::Csv => write_samples(&mut w, &x)?,
        Format::Json => {
            let rows: Vec<&[f64]> = x.row_iter().collect();
            write_json(&mut w, &rows)?
        }
    }
    w.flush()?;
    Ok(())
}

fn table(a: &TableArgs) -> Result<()> {
    let series = match &a.curve {
        None => {
            let rows = reproduce_table(a.alpha, a.n, a.nu, a.samples, a.seed)?;
            let header = ["model", "dq_var", "dq_es", "dr_var", "dr_es", "dr_sd", "dr_variance"];
            let mut s = EmittedSeries::new(header.iter().map(|h| h.to_string()).collect());
            for r in rows {
                s.push(r.model, vec![r.dq_var, r.dq_es, r.dr_var, r.dr_es, r.dr_sd, r.dr_variance])?;
            }
            s
        }
        Some(alphas) => {
            let points = ratio_curve(alphas, a.n, a.nu, a.samples, a.seed)?;
            let header = ["alpha", "dq_var_ratio", "dq_es_ratio", "dr_var_ratio"];
            let mut s = EmittedSeries::new(header.iter().map(|h| h.to_string()).collect());
            for p in points {
                s.push(
                    crate::io::format_value(p.alpha),
                    vec![p.dq_var_ratio(), p.dq_es_ratio(), p.dr_var_ratio()],
                )?;
            }
            s
        }
    };
    emit_series(&series, &a.output)
}

#[derive(Serialize)]
struct OptimizeRecord<'a> {
    problem: &'a str,
    alpha: Option<f64>,
    tickers: Vec<String>,
    rows: usize,
    #[serde(flatten)]
    result: OptResult,
}

fn optimize(a: &OptimizeArgs) -> Result<()> {
    let (mut x, _, tickers) = losses_with_labels(&a.input)?;
    if let Some(window) = a.window {
        if window == 0 || window > x.rows() {
            return Err(Error::Data(format!(
                "window {window} not in 1..={} available loss rows",
                x.rows()
            )));
        }
        x = x.select_rows(x.rows() - window..x.rows())?;
    }
    let problem = || -> Result<OptProblem> {
        let mut p = OptProblem::new(x.clone(), a.alpha)?
            .with_method(var_method(a.method, a.resolution, a.node_limit))
            .with_max_iter(a.max_iter);
        if let Some(w0) = &a.w0 {
            p = p.with_w0(Weights::new(w0.clone())?)?;
        }
        Ok(p)
    };
    let (name, alpha, result) = match a.objective {
        Objective::DqVar => ("dq-var", Some(a.alpha), min_dq_var(&problem()?)?),
        Objective::DqEs => ("dq-es", Some(a.alpha), min_dq_es(&problem()?)?),
        Objective::DrSd => ("dr-sd", None, min_dr_sd(&x)?),
        Objective::Markowitz => ("markowitz", None, markowitz(&x, a.target / TRADING_DAYS)?),
    };
    let record = OptimizeRecord {
        problem: name,
        alpha,
        tickers,
        rows: x.rows(),
        result,
    };
    let mut w = sink(a.output.as_deref())?;
    write_json(&mut w, &record)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct StrategyRecord {
    strategy: Strategy,
    #[serde(serialize_with = "stats_json")]
    stats: SummaryStats,
    final_wealth: f64,
    weights_by_period: Vec<Rebalance>,
}

fn stats_json<S: serde::Serializer>(s: &SummaryStats, ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut m = ser.serialize_map(Some(4))?;
    m.serialize_entry("annual_return", &json_number(s.annual_return))?;
    m.serialize_entry("annual_volatility", &json_number(s.annual_volatility))?;
    m.serialize_entry("sharpe", &json_number(s.sharpe))?;
    m.serialize_entry("zero_volatility", &s.zero_volatility)?;
    m.end()
}

fn backtest(a: &BacktestArgs) -> Result<()> {
    let prices = load_csv(&a.input)?;
    let cfg = BacktestConfig {
        window: a.window,
        rebalance: a.rebalance,
        alpha: a.alpha,
        markowitz_target: a.target,
        var_method: var_method(a.method, 200, 200_000),
        es_iterations: a.max_iter,
    };
    let mut reports = Vec::new();
    for s in &a.strategy {
        reports.push(run_strategy(&prices, (*s).into(), &cfg)?);
    }
    if let Some(path) = &a.wealth {
        let mut header = vec!["date".to_string()];
        header.extend(reports.iter().map(|r| r.strategy.label().to_string()));
        let mut series = EmittedSeries::new(header);
        for (k, d) in reports[0].dates.iter().enumerate() {
            series.push(
                d.format("%Y-%m-%d").to_string(),
                reports.iter().map(|r| r.wealth[k]).collect(),
            )?;
        }
        let mut w = sink(Some(path))?;
        series.write_csv(&mut w)?;
        w.flush()?;
    }
    let records = reports
        .into_iter()
        .map(|r| {
            Ok(StrategyRecord {
                strategy: r.strategy,
                stats: summary_stats(&r.wealth, a.rf)?,
                final_wealth: *r.wealth.last().expect("wealth starts at 1"),
                weights_by_period: r.weights_by_period,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut w = sink(a.stats.as_deref())?;
    write_json(&mut w, &records)?;
    w.flush()?;
    Ok(())
}

pub fn dispatch(cfg: &RunConfig) -> Result<()> {
    match &cfg.command {
        Command::Index(a) => index(a),
        Command::Simulate(a) => simulate(a),
        Command::Table(a) => table(a),
        Command::Optimize(a) => optimize(a),
        Command::Backtest(a) => backtest(a),
    }
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::InvalidInput(format!("{THREADS_ENV}={v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))
}

fn report(kind: &str, message: String, command: Option<&str>) {
    let rec = ErrorRecord {
        kind: kind.into(),
        message,
        command: command.map(String::from),
    };
    let line = serde_json::to_string(&rec).unwrap_or_else(|_| format!("{{\"kind\":\"{kind}\"}}"));
    eprintln!("{line}");
}

/// Parses `args`, runs the command and returns the process exit code:
/// 0 on success, 1 on a failed command, 2 on a usage error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let message = e.render().to_string();
            report("usage", message.trim().to_string(), None);
            return 2;
        }
    };
    let name = cfg.command.name();
    if let Err(e) = configure_threads() {
        report(e.kind(), e.to_string(), Some(name));
        return 1;
    }
    match dispatch(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            report(e.kind(), e.to_string(), Some(name));
            1
        }
    }
}
