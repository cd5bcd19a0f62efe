//! Subcommand definitions and implementations.
//!
//! Exit-code contract: 0 success, 1 user or validation error, 2 I/O error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use stacknet_core::error::Error;
use stacknet_core::harness::{dataset_stats, mse, render_report, run_cv_experiment};
use stacknet_core::importance::{compute_importance, importance_csv, rank_report, render_rank_report};
use stacknet_core::preprocess::{fit_pipeline, transform, PipelineConfig, RankChoice};
use stacknet_core::stacknet::{
    default_config, fit_stacknet, predict_stacknet, StackNetConfig,
};
use stacknet_core::{load_csv, SeededRng};

use crate::bundle::{ModelBundle, Provenance, BUNDLE_FORMAT_VERSION};

/// Stacked tabular regression: train, predict, cross-validate, explain.
#[derive(Parser, Debug)]
#[command(name = "stacknet", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit preprocessing and the stacked ensemble; write a model bundle
    Train(TrainArgs),
    /// Predict with a saved bundle; write a subject_id,prediction CSV
    Predict(PredictArgs),
    /// Cross-validate the full pipeline on a labeled CSV
    Cv(CvArgs),
    /// Report per-feature importance from a saved bundle
    Importance(ImportanceArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training CSV: first column is the row id, remaining columns numeric
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the target column inside the CSV
    #[arg(long)]
    pub target: String,
    /// Ensemble config JSON; defaults to the built-in 3-layer, 11-model stack
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of components kept by the selection stage
    #[arg(long, default_value_t = 24)]
    pub select_k: usize,
    /// Components with variance at or below this are dropped before selection
    #[arg(long, default_value_t = 1e-8)]
    pub variance_threshold: f64,
    /// Base seed; overrides the config's seed when provided
    #[arg(long)]
    pub seed: Option<u64>,
    /// Where to write the model bundle (JSON)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Model bundle written by `train`
    #[arg(long)]
    pub bundle: PathBuf,
    /// Input CSV: first column is the row id; feature columns matched by name
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write predictions (CSV with header subject_id,prediction)
    #[arg(long)]
    pub out: PathBuf,
    /// Require the input header to match the training header position by position
    #[arg(long)]
    pub strict_columns: bool,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    /// Labeled CSV to cross-validate on
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the target column inside the CSV
    #[arg(long)]
    pub target: String,
    /// Number of cross-validation folds
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// Ensemble config JSON; defaults to the built-in 3-layer, 11-model stack
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of components kept by the selection stage
    #[arg(long, default_value_t = 24)]
    pub select_k: usize,
    /// Components with variance at or below this are dropped before selection
    #[arg(long, default_value_t = 1e-8)]
    pub variance_threshold: f64,
    /// Base seed; overrides the config's seed when provided
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit preprocessing once on the full table instead of per fold.
    /// Reproduces the historical protocol; leaks selection statistics.
    #[arg(long)]
    pub paper_protocol: bool,
    /// Optional path for the JSON report
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportanceArgs {
    /// Model bundle written by `train`
    #[arg(long)]
    pub bundle: PathBuf,
    /// How many of the highest-importance features to list
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// How many of the lowest-importance features to list
    #[arg(long, default_value_t = 10)]
    pub bottom: usize,
    /// Optional path for the full importance CSV
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    fn context(self, prefix: &str) -> Self {
        CliError {
            code: self.code,
            message: format!("{prefix}: {}", self.message),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Csv(_) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Honor STACKNET_THREADS: a positive value caps internal parallelism,
/// 0 or unset leaves the thread count automatic.
pub fn init_thread_pool() -> CliResult<()> {
    let Ok(raw) = std::env::var("STACKNET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::user(format!("STACKNET_THREADS must be a non-negative integer, got '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::user(format!("thread pool setup failed: {e}")))?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Importance(args) => cmd_importance(args),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<StackNetConfig> {
    let config = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::from(Error::from(e)).context("reading config"))?;
            StackNetConfig::from_json(&text)
                .map_err(|e| CliError::from(e).context("parsing config"))?
        }
        None => default_config(),
    };
    for warning in config.validate()? {
        eprintln!("warning: {warning}");
    }
    Ok(config)
}

fn pipeline_config(select_k: usize, variance_threshold: f64) -> PipelineConfig {
    PipelineConfig {
        select_k,
        variance_threshold,
        rank: RankChoice::MinkaMle,
    }
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<()> {
    let table = load_csv(&args.data, Some(&args.target))
        .map_err(|e| CliError::from(e).context("loading training data"))?;
    let config = load_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);

    let pipeline = fit_pipeline(&table, &pipeline_config(args.select_k, args.variance_threshold))?;
    if pipeline.pca.rank_fallback {
        eprintln!("warning: rank selection could not score any candidate; kept one component");
    }
    let x = transform(&pipeline, table.values())?;
    let y = table.target().expect("loader verified the target");
    let net = fit_stacknet(&config, &x, y, &SeededRng::new(seed))?;
    let fitted = predict_stacknet(&net, &x)?;
    let train_mse = mse(fitted.as_slice().expect("contiguous"), y.as_slice().expect("contiguous"))?;
    let (mean, std) = dataset_stats(y.as_slice().expect("contiguous"))?;

    let bundle = ModelBundle {
        format_version: BUNDLE_FORMAT_VERSION,
        pipeline,
        stacknet: net,
        provenance: Provenance {
            seed,
            config_digest: config.digest(),
            created_at: chrono::Utc::now().to_rfc3339(),
            feature_columns: table.columns().to_vec(),
        },
    };
    bundle
        .save(&args.out)
        .map_err(|e| CliError::from(e).context("writing bundle"))?;

    let (p, r, k) = bundle.pipeline.dimension_chain();
    println!("rows              {}", table.n_rows());
    println!("features          {p} -> {r} components -> {k} selected");
    println!("models            {}", config.total_models());
    println!("target mean       {mean:.4}");
    println!("target std        {std:.4}");
    println!("training mse      {train_mse:.4}");
    println!("bundle written to {}", args.out.display());
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult<()> {
    let bundle = ModelBundle::load(&args.bundle)
        .map_err(|e| CliError::from(e).context("loading bundle"))?;
    let table = load_csv(&args.data, None)
        .map_err(|e| CliError::from(e).context("loading input data"))?;
    let predictions = bundle.predict_table(&table, args.strict_columns)?;

    let mut writer = csv::Writer::from_path(&args.out)
        .map_err(|e| CliError::from(Error::from(e)).context("writing predictions"))?;
    writer
        .write_record(["subject_id", "prediction"])
        .map_err(Error::from)?;
    for (id, value) in table.subject_ids().iter().zip(predictions.iter()) {
        writer
            .write_record([id.as_str(), &format!("{value}")])
            .map_err(Error::from)?;
    }
    writer.flush().map_err(Error::from)?;
    println!(
        "{} predictions written to {}",
        table.n_rows(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_cv(args: &CvArgs) -> CliResult<()> {
    let table = load_csv(&args.data, Some(&args.target))
        .map_err(|e| CliError::from(e).context("loading data"))?;
    let config = load_config(args.config.as_deref())?;
    let seed = args.seed.unwrap_or(config.seed);

    let report = run_cv_experiment(
        &table,
        &config,
        args.folds,
        &pipeline_config(args.select_k, args.variance_threshold),
        seed,
        args.paper_protocol,
    )?;

    print!("{}", render_report(&report));
    println!();
    println!("model                                      mse");
    println!(
        "mean-predictor baseline                    {:.4}",
        report.baseline_mse
    );
    println!(
        "stacked ensemble ({:2} models, {} folds)     {:.4}",
        config.total_models(),
        args.folds,
        report.pooled_mse
    );

    if let Some(out) = &args.out {
        let doc = serde_json::json!({
            "format_version": 1,
            "report": report,
        });
        let text = serde_json::to_string_pretty(&doc).map_err(Error::from)?;
        fs::write(out, text).map_err(|e| CliError::from(Error::from(e)).context("writing report"))?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

pub fn cmd_importance(args: &ImportanceArgs) -> CliResult<()> {
    let bundle = ModelBundle::load(&args.bundle)
        .map_err(|e| CliError::from(e).context("loading bundle"))?;
    let iv = compute_importance(&bundle.pipeline, &bundle.provenance.feature_columns)?;
    if iv.uniform_fallback {
        eprintln!("warning: every selected component had F = 0; importance is uniform");
    }
    let report = rank_report(&iv, args.top, args.bottom)?;
    print!("{}", render_rank_report(&report));

    if let Some(out) = &args.out {
        fs::write(out, importance_csv(&iv))
            .map_err(|e| CliError::from(Error::from(e)).context("writing importance CSV"))?;
        println!("full importance table written to {}", out.display());
    }
    Ok(())
}
