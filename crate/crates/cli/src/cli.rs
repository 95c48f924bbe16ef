use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use impulse_core::advice::{Locale, PercentWindow};
use impulse_core::format::to_stable_json;
use impulse_core::{check_stability, load_model, save_model};

use crate::config::{RunConfig, DEFAULT_CONFIDENCE, DEFAULT_HORIZON, DEFAULT_ITERATIONS};
use crate::engine::{read_dataset_for, Engine, IrfResult};
use crate::error::EngineError;
use crate::server;

pub const EXIT_OK: u8 = 0;
pub const EXIT_COMPUTE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "impulse", version, about = "Impulse response advice for VAR models of EMA data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a VAR model on an EMA CSV file and save it.
    Fit(FitArgs),
    /// Produce the full advice report.
    Advise(AdviseArgs),
    /// Emit impulse response plot data.
    Irf(IrfArgs),
    /// Length of the effect of one variable on another.
    EffectLength(EffectLengthArgs),
    /// Percentage changes needed to move a target variable.
    Whatif(WhatifArgs),
    /// Run the HTTP analysis service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub lags: u64,
    #[arg(long)]
    pub interval_minutes: f64,
    #[arg(long)]
    pub output: PathBuf,
    /// Columns whose higher values mean lower well-being.
    #[arg(long, value_delimiter = ',')]
    pub negative: Vec<String>,
    /// Columns used as exogenous regressors.
    #[arg(long, value_delimiter = ',')]
    pub exogenous: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// EMA data the model was fitted on; used for bootstrapping.
    #[arg(long)]
    pub data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Force bootstrapping on (default when residuals or data are available).
    #[arg(long, conflicts_with = "no_bootstrap")]
    pub bootstrap: bool,
    #[arg(long)]
    pub no_bootstrap: bool,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
    pub confidence: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub interval_minutes: Option<f64>,
    #[arg(long)]
    pub orthogonalized: bool,
    /// Cholesky ordering as comma-separated variable names.
    #[arg(long, value_delimiter = ',', requires = "orthogonalized")]
    pub ordering: Option<Vec<String>>,
    /// Worker threads for bootstrapping and the what-if loop.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    #[arg(long, default_value_t = 0.0)]
    pub theta: f64,
    #[arg(long, default_value_t = -1000.0, allow_hyphen_values = true)]
    pub min_percent: f64,
    #[arg(long, default_value_t = 1000.0, allow_hyphen_values = true)]
    pub max_percent: f64,
}

impl RunArgs {
    pub fn config(&self, window: Option<&WindowArgs>) -> RunConfig {
        let bootstrap = if self.bootstrap {
            Some(true)
        } else if self.no_bootstrap {
            Some(false)
        } else {
            None
        };
        let mut cfg = RunConfig {
            horizon: self.horizon,
            bootstrap,
            iterations: self.iterations,
            confidence: self.confidence,
            seed: self.seed,
            interval_minutes: self.interval_minutes,
            orthogonalized: self.orthogonalized,
            ordering: self.ordering.clone(),
            ..Default::default()
        };
        if let Some(w) = window {
            cfg.theta = w.theta;
            cfg.window = PercentWindow {
                min_percent: w.min_percent,
                max_percent: w.max_percent,
            };
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct AdviseArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
    /// Emit only the influence ranking.
    #[arg(long)]
    pub ranking_only: bool,
    /// Sentence templates replacing the bundled English ones.
    #[arg(long)]
    pub locale: Option<PathBuf>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IrfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Shocked variable; all of them when omitted.
    #[arg(long)]
    pub impulse: Option<String>,
    /// Responding variable; all of them when omitted.
    #[arg(long, requires = "impulse")]
    pub response: Option<String>,
    #[arg(long, value_enum, default_value_t = PlotFormat::Csv)]
    pub format: PlotFormat,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EffectLengthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub impulse: String,
    #[arg(long)]
    pub response: String,
}

#[derive(Debug, Args)]
pub struct WhatifArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long)]
    pub target: String,
    /// Desired change of the target in percent of its mean.
    #[arg(long, allow_hyphen_values = true)]
    pub percent: f64,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
    /// Model to serve at startup.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub data: Option<PathBuf>,
    /// Static UI bundle served for non-API paths.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    /// Allowed CORS origins; any origin when omitted.
    #[arg(long, value_delimiter = ',')]
    pub cors_origin: Option<Vec<String>>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long, default_value_t = DEFAULT_ITERATIONS)]
    pub iterations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct CommandError {
    pub code: u8,
    pub error: anyhow::Error,
}

impl CommandError {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_USAGE,
            error: error.into(),
        }
    }
}

impl From<EngineError> for CommandError {
    fn from(e: EngineError) -> Self {
        let code = if e.is_usage() { EXIT_USAGE } else { EXIT_COMPUTE };
        Self { code, error: e.into() }
    }
}

impl From<impulse_core::Error> for CommandError {
    fn from(e: impulse_core::Error) -> Self {
        EngineError::from(e).into()
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(error: anyhow::Error) -> Self {
        Self {
            code: EXIT_COMPUTE,
            error,
        }
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type CmdResult = Result<(), CommandError>;

fn open(path: &Path) -> Result<BufReader<File>, CommandError> {
    File::open(path)
        .map(BufReader::new)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(CommandError::usage)
}

fn load_engine(args: &ModelArgs) -> Result<Engine, CommandError> {
    let model = load_model(&args.model)?;
    let data = match &args.data {
        Some(path) => Some(read_dataset_for(&model, open(path)?)?),
        None => None,
    };
    Ok(Engine::new(model, data)?)
}

fn write_output(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn with_workers<T>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CommandError>
where
    T: Send,
{
    match workers {
        Some(0) => Err(CommandError::usage(anyhow::anyhow!("--workers must be at least 1"))),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(anyhow::Error::from)?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CmdResult {
    match cli.command {
        Command::Fit(args) => fit(args, out),
        Command::Advise(args) => advise(args, out),
        Command::Irf(args) => irf(args, out),
        Command::EffectLength(args) => effect_length(args, out),
        Command::Whatif(args) => whatif(args, out),
        Command::Serve(args) => serve(args),
    }
}

fn fit(args: FitArgs, out: &mut dyn Write) -> CmdResult {
    let engine = Engine::fit_csv(
        open(&args.input)?,
        args.lags as usize,
        args.interval_minutes,
        &args.negative,
        &args.exogenous,
    )?;
    save_model(engine.model(), &args.output)?;
    let s = check_stability(engine.model());
    writeln!(
        out,
        "fitted VAR({}) on {} variables and {} rows; saved to {}",
        engine.model().lags(),
        engine.model().dim(),
        engine.data().map_or(0, |d| d.len()),
        args.output.display()
    )?;
    writeln!(out, "stable: {}, spectral radius {:.6}", s.stable, s.spectral_radius)?;
    if !s.stable {
        log::warn!("fitted model is not stable; responses will not converge");
    }
    Ok(())
}

fn advise(args: AdviseArgs, out: &mut dyn Write) -> CmdResult {
    let mut engine = load_engine(&args.model)?;
    let locale = match &args.locale {
        Some(p) => Locale::load(p).map_err(|e| CommandError::usage(anyhow::Error::from(e)))?,
        None => Locale::default(),
    };
    engine = engine.with_locale(locale.clone());
    let cfg = args.run.config(Some(&args.window));
    let text = with_workers(args.run.workers, || -> Result<String, CommandError> {
        if args.ranking_only {
            return Ok(to_stable_json(&engine.ranking(&cfg)?)?);
        }
        let report = engine.report(&cfg)?;
        Ok(match args.format {
            ReportFormat::Json => report.to_json()?,
            ReportFormat::Text => report.render_text(&locale),
        })
    })??;
    write_output(args.output.as_deref(), &text, out)
}

pub fn plot_csv(result: &IrfResult) -> String {
    let fmt = |v: Option<f64>| v.map(|x| impulse_core::format::round_sig(x).to_string()).unwrap_or_default();
    let mut s = String::from("impulse,response,t,value,lower,upper\n");
    for series in &result.series {
        for step in &series.steps {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&series.impulse),
                csv_field(&series.response),
                step.t,
                fmt(Some(step.value)),
                fmt(step.lower),
                fmt(step.upper)
            ));
        }
    }
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

fn irf(args: IrfArgs, out: &mut dyn Write) -> CmdResult {
    let engine = load_engine(&args.model)?;
    let cfg = args.run.config(None);
    let result = with_workers(args.run.workers, || {
        engine.irf(&cfg, args.impulse.as_deref(), args.response.as_deref())
    })??;
    let text = match args.format {
        PlotFormat::Csv => plot_csv(&result),
        PlotFormat::Json => to_stable_json(&result)?,
    };
    write_output(args.output.as_deref(), &text, out)
}

fn effect_length(args: EffectLengthArgs, out: &mut dyn Write) -> CmdResult {
    let engine = load_engine(&args.model)?;
    let cfg = args.run.config(None);
    let result = with_workers(args.run.workers, || engine.effect_length(&cfg, &args.impulse, &args.response))??;
    out.write_all(to_stable_json(&result)?.as_bytes())?;
    Ok(())
}

fn whatif(args: WhatifArgs, out: &mut dyn Write) -> CmdResult {
    let engine = load_engine(&args.model)?;
    let cfg = args.run.config(Some(&args.window));
    let advice = with_workers(args.run.workers, || engine.whatif(&cfg, &args.target, args.percent))??;
    match args.format {
        ReportFormat::Json => out.write_all(to_stable_json(&advice)?.as_bytes())?,
        ReportFormat::Text => {
            for line in engine.whatif_text(&advice) {
                writeln!(out, "{line}")?;
            }
            for s in &advice.skipped {
                writeln!(out, "skipped {}: {}", s.variable, s.reason.as_str())?;
            }
        }
    }
    Ok(())
}

fn serve(args: ServeArgs) -> CmdResult {
    if args.workers == Some(0) {
        return Err(CommandError::usage(anyhow::anyhow!("--workers must be at least 1")));
    }
    let engine = match &args.model {
        Some(_) => Some(load_engine(&ModelArgs {
            model: args.model.clone().unwrap_or_default(),
            data: args.data.clone(),
        })?),
        None => None,
    };
    let defaults = RunConfig {
        horizon: args.horizon,
        iterations: args.iterations,
        seed: args.seed,
        ..Default::default()
    };
    defaults
        .validate()
        .map_err(|e| CommandError::from(EngineError::Invalid(e)))?;
    let state = server::AppState::new(engine, defaults, args.workers)?;
    let cors = server::cors_layer(args.cors_origin.as_deref()).map_err(CommandError::usage)?;
    let app = server::router(state, cors, args.ui_dir.clone());
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.addr)
            .await
            .with_context(|| format!("cannot bind {}", args.addr))?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(())
}
