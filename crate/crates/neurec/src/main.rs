use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use neurec::config::{load_config, ExperimentConfig};
use neurec::experiment::{
    csv_report, emit_report, json_report, load_dataset, metric_fields, read_result, recommend_from_files, run_experiment,
    run_sweep, ReportFormat, SweepParam, TrainedModel,
};
use neurec::io;
use neurec::neurec_core::data::split_holdout_with;
use neurec::neurec_core::eval::MetricSet;
use neurec::neurec_core::models::TrainConfig;

/// Top-n recommendation with NeuRec and baseline models.
#[derive(Parser)]
#[command(name = "neurec", version)]
struct Cli {
    /// Increase log verbosity (-v debug, -vv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

/// A `key = value` config file plus trailing `--key value` overrides.
#[derive(Args)]
struct ConfigArgs {
    /// Configuration file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Any configuration key as `--key value`, e.g. `--preset filmtrust --epochs 50`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => Some(fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?),
            None => None,
        };
        Ok(load_config(text.as_deref(), &self.overrides)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split a dataset and write the split file and id map.
    Split {
        /// Directory receiving `split.txt` and `ids.tsv`.
        #[arg(long)]
        out_dir: PathBuf,
        /// Split seed (defaults to the first configured seed).
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Train the configured model on the training part of a split file.
    Train {
        #[arg(long)]
        split: PathBuf,
        /// Model file to write.
        #[arg(long)]
        out: PathBuf,
        /// Training seed (defaults to the split's seed).
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Evaluate a saved model on a split file and print the metrics as CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Also write the full per-user report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run the full multi-split experiment.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run one experiment per value of a hyperparameter.
    Sweep {
        /// k, neuron_width, activation, depth or t.
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Print the top-n items for one user.
    Recommend {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Id map; defaults to `ids.tsv` next to the split's directory or its parent.
        #[arg(long)]
        ids: Option<PathBuf>,
        /// External user id.
        #[arg(long)]
        user: String,
        #[arg(short, long, default_value_t = 10)]
        n: usize,
    },
    /// Re-emit a stored experiment result as CSV or JSON.
    Report {
        /// `result.json` written by `run`.
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ReportFormat,
        /// Output file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_ids_path(split: &Path) -> PathBuf {
    let dir = split.parent().unwrap_or(Path::new("."));
    let here = dir.join("ids.tsv");
    if here.exists() {
        return here;
    }
    dir.parent().map(|p| p.join("ids.tsv")).filter(|p| p.exists()).unwrap_or(here)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match cli.command {
        Command::Split { out_dir, seed, cfg } => {
            let config = cfg.load()?;
            let seed = seed.unwrap_or(config.seeds[0]);
            let (matrix, ids) = load_dataset(&config)?;
            let split = split_holdout_with(&matrix, config.ratio, seed, config.split_mode)?;
            fs::create_dir_all(&out_dir)?;
            io::write_split_path(&split, &out_dir.join("split.txt"))?;
            io::write_ids(&ids, &out_dir.join("ids.tsv"))?;
            println!("{} train / {} test pairs -> {}", split.train.nnz(), split.test.len(), out_dir.display());
        }
        Command::Train { split, out, seed, cfg } => {
            let config = cfg.load()?;
            let split = io::read_split_path(&split)?;
            let train = TrainConfig { seed: seed.unwrap_or(split.seed), ..config.train.clone() };
            let (model, losses) = TrainedModel::train(config.model, &train, &config.slim, &split.train)?;
            model.save(&out)?;
            match losses.last() {
                Some(l) => println!("trained {} ({} parameters), final epoch loss {l}", config.model, model.num_parameters()),
                None => println!("trained {} ({} parameters)", config.model, model.num_parameters()),
            }
        }
        Command::Evaluate { model, split, json } => {
            let model = TrainedModel::load(&model)?;
            let split = io::read_split_path(&split)?;
            let report = model.evaluate(&split)?;
            if let Some(path) = json {
                fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            }
            let kind = match &model {
                TrainedModel::NeuRec(m) => format!("neurec_{}", m.variant()),
                TrainedModel::Mf(_) => "bpr_mf".into(),
                TrainedModel::MostPop(_) => "mostpop".into(),
                TrainedModel::Slim(_) => "slim".into(),
            };
            println!("model,{}", MetricSet::NAMES.join(","));
            println!("{kind},{}", metric_fields(&report.aggregate));
        }
        Command::Run { cfg } => {
            let config = cfg.load()?;
            let result = run_experiment(&config)?;
            print!("{}", csv_report(&result));
            eprintln!("artifacts in {}", config.experiment_dir().display());
        }
        Command::Sweep { param, values, cfg } => {
            let config = cfg.load()?;
            let table = run_sweep(&config, param, &values)?;
            print!("{}", table.to_csv());
        }
        Command::Recommend { model, split, ids, user, n } => {
            let ids = ids.unwrap_or_else(|| default_ids_path(&split));
            for item in recommend_from_files(&model, &split, &ids, &user, n)? {
                println!("{item}");
            }
        }
        Command::Report { result, format, out } => {
            let result = read_result(&result)?;
            match out {
                Some(path) => emit_report(&result, format, &path)?,
                None => match format {
                    ReportFormat::Csv => print!("{}", csv_report(&result)),
                    ReportFormat::Json => print!("{}", json_report(&result)?),
                },
            }
        }
    }
    Ok(())
}
