//! `severity` — runs the crash injury severity pipeline from a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use severity_core::config::DataSource;
use severity_core::data::{synth_generate, published_effects};
use severity_core::metrics::fmt_score;
use severity_core::pipeline::{ingest, RunSummary};
use severity_core::report::{best_model, emit_report};
use severity_core::{run_until, Error, ErrorCategory, ModelKind, RunConfig, Scoring, Stage};

/// Rows in the default synthetic data set, the size of the published one.
const DEFAULT_ROWS: usize = 4520;

#[derive(Parser)]
#[command(name = "severity", version, about = "Crash injury severity classification pipeline")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (JSON). Without it a synthetic 4,520-row run is configured.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated models: logistic, tree, forest, svm, adaboost, gbt.
    #[arg(long, global = true, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Tuning metric: auc, accuracy, precision, recall or f1.
    #[arg(long, global = true)]
    scoring: Option<String>,
    /// Disable oversampling in tuning folds and the final refit.
    #[arg(long, global = true)]
    no_smote: bool,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic records and write them as CSV.
    Synth {
        #[arg(long)]
        rows: Option<usize>,
        /// Share of serious injuries.
        #[arg(long)]
        serious_share: Option<f64>,
    },
    /// Load (or generate) the data and report row counts.
    Ingest,
    /// Split, encode and run logit feature selection.
    Select,
    /// Grid-search each model with cross-validation.
    Tune,
    /// Tune, then refit each model on the full training split.
    Train,
    /// Train and score every model on the held-out split.
    Evaluate,
    /// Evaluate, then explain the configured model.
    Explain,
    /// Full pipeline with the final report.
    Run,
    /// Print the report of a finished run in `--out`.
    Report,
}

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Config => 2,
        ErrorCategory::Data => 3,
        ErrorCategory::Modeling => 4,
    }
}

fn load_config(c: &Common) -> Result<RunConfig, Error> {
    let mut config = match &c.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::synthetic(DEFAULT_ROWS),
    };
    if let Some(seed) = c.seed {
        config.reseed(seed);
    }
    if let Some(out) = &c.out {
        config.output_dir = out.clone();
    }
    if let Some(models) = &c.models {
        config.models = models.iter().map(|m| m.parse()).collect::<Result<Vec<ModelKind>, _>>()?;
        if config.explain.model.is_some_and(|m| !config.models.contains(&m)) {
            config.explain.model = config.models.iter().copied().find(|m| m.is_tree_based());
        }
    }
    if let Some(s) = &c.scoring {
        config.scoring = s.parse::<Scoring>()?;
    }
    if c.no_smote {
        config.smote = None;
    }
    config.validate()?;
    Ok(config)
}

fn print_tuning(summary: &RunSummary) {
    println!("Best parameters");
    for t in &summary.tuning {
        println!("  {}  (CV {} = {:.4})", t.best_line(), t.scoring, t.best_score);
    }
}

fn print_comparison(summary: &RunSummary) {
    let best = best_model(&summary.comparison);
    println!("{:<38} {:>9} {:>9} {:>9}", "Model", "Accuracy", "Recall", "AUC");
    for (i, r) in summary.comparison.iter().enumerate() {
        println!(
            "{:<38} {:>9} {:>9} {:>9}{}",
            r.model.display_name(),
            fmt_score(r.accuracy),
            fmt_score(r.recall),
            fmt_score(r.auc),
            if Some(i) == best { "  <- best" } else { "" }
        );
    }
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let config = load_config(&cli.common)?;
    match &cli.command {
        Command::Synth { rows, serious_share } => {
            let DataSource::Synth(mut spec) = config.data.clone() else {
                return Err(Error::Config("synth needs a synthetic data source in the config".into()));
            };
            spec.rows = rows.unwrap_or(spec.rows);
            spec.serious_share = serious_share.unwrap_or(spec.serious_share);
            let effects = spec.effects.clone().unwrap_or_else(published_effects);
            let ds = synth_generate(&config.schema()?, spec.rows, spec.serious_share, &effects, spec.seed)?;
            std::fs::create_dir_all(&config.output_dir)?;
            let path = config.output_dir.join("data.csv");
            ds.write_csv(&path)?;
            let pos = ds.labels().iter().filter(|&&l| l == 1).count();
            println!("wrote {} rows ({pos} serious) to {}", ds.len(), path.display());
        }
        Command::Ingest => {
            let (ds, dropped) = ingest(&config)?;
            run_until(&config, Stage::Ingest)?;
            let pos = ds.labels().iter().filter(|&&l| l == 1).count();
            println!("{} rows ({pos} serious), {dropped} dropped", ds.len());
        }
        Command::Select => {
            let s = run_until(&config, Stage::Select)?;
            println!("{} columns selected at alpha = {}:", s.selected_columns.len(), config.selection_alpha);
            for c in &s.selected_columns {
                println!("  {c}");
            }
        }
        Command::Tune => print_tuning(&run_until(&config, Stage::Tune)?),
        Command::Train => {
            let s = run_until(&config, Stage::Train)?;
            print_tuning(&s);
            println!("models written to {}", s.output_dir.join("models").display());
        }
        Command::Evaluate => print_comparison(&run_until(&config, Stage::Evaluate)?),
        Command::Explain | Command::Run => {
            let s = run_until(&config, Stage::Explain)?;
            print!("{}", emit_report(&s.output_dir)?);
        }
        Command::Report => print!("{}", emit_report(&config.output_dir)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
