//! The split, train and evaluate protocol over several seeds, sweeps, and serving.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use log::{debug, info};
use neurec_core::data::{build_matrix, split_holdout_with, IdMap, InteractionMatrix, SplitPair};
use neurec_core::eval::{evaluate_model, rank_candidates, MetricSet, RankingReport};
use neurec_core::models::{
    count_parameters, train_bpr_mf_observed, train_mostpop, train_neurec_observed, train_slim, EpochStats, MfModel,
    MostPop, NeuRecModel, SlimConfig, SlimModel, TrainConfig, Variant,
};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ModelKind};
use crate::io::{self, SavedModel};

/// A trained recommender of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    NeuRec(NeuRecModel),
    Mf(MfModel),
    MostPop(MostPop),
    Slim(SlimModel),
}

impl TrainedModel {
    /// Trains `kind` on `train`. Returns the model and the per-epoch training losses
    /// (empty for the closed-form and SLIM models).
    pub fn train(
        kind: ModelKind,
        config: &TrainConfig,
        slim: &SlimConfig,
        train: &InteractionMatrix,
    ) -> neurec_core::Result<(Self, Vec<f64>)> {
        let mut losses = Vec::new();
        let mut observer = |s: EpochStats| {
            debug!("epoch {} loss {:.6}", s.epoch, s.loss);
            losses.push(s.loss);
        };
        let model = match kind {
            ModelKind::UNeurec => Self::NeuRec(train_neurec_observed(Variant::UserBased, config, train, &mut observer)?),
            ModelKind::INeurec => Self::NeuRec(train_neurec_observed(Variant::ItemBased, config, train, &mut observer)?),
            ModelKind::BprMf => Self::Mf(train_bpr_mf_observed(config, train, &mut observer)?),
            ModelKind::Mostpop => Self::MostPop(train_mostpop(train)),
            ModelKind::Slim => Self::Slim(train_slim(train, *slim)?),
        };
        Ok((model, losses))
    }

    pub fn num_parameters(&self) -> usize {
        match self {
            Self::NeuRec(m) => count_parameters(m),
            Self::Mf(m) => count_parameters(m),
            Self::MostPop(m) => count_parameters(m),
            Self::Slim(m) => count_parameters(m),
        }
    }

    /// Calls `f` with a per-user scoring function over `train`. NeuRec outputs are
    /// computed once and shared by every call.
    pub fn with_scorer<T>(
        &self,
        train: &InteractionMatrix,
        f: impl FnOnce(&mut dyn FnMut(usize) -> neurec_core::Result<Vec<f64>>) -> neurec_core::Result<T>,
    ) -> neurec_core::Result<T> {
        match self {
            Self::NeuRec(m) => {
                let scorer = m.scorer(train)?;
                f(&mut |u| scorer.score_user(u))
            }
            Self::Mf(m) => f(&mut |u| m.score_all(u)),
            Self::MostPop(m) => f(&mut |_| Ok(m.scores().to_vec())),
            Self::Slim(m) => f(&mut |u| m.score_all(train, u)),
        }
    }

    pub fn evaluate(&self, split: &SplitPair) -> neurec_core::Result<RankingReport> {
        self.with_scorer(&split.train, |score| evaluate_model(score, split))
    }

    pub fn file_name(&self) -> &'static str {
        match self {
            Self::NeuRec(_) | Self::Mf(_) => "model.json",
            Self::MostPop(_) => "model.mostpop",
            Self::Slim(_) => "model.slim",
        }
    }

    pub fn save(&self, path: &Path) -> io::FormatResult<()> {
        io::save_model(&self.clone().into(), path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::try_from(io::load_model(path)?)
    }
}

impl From<TrainedModel> for SavedModel {
    fn from(m: TrainedModel) -> Self {
        match m {
            TrainedModel::NeuRec(m) => SavedModel::NeuRec(m),
            TrainedModel::Mf(m) => SavedModel::Mf(m),
            TrainedModel::MostPop(m) => SavedModel::MostPop(m),
            TrainedModel::Slim(m) => SavedModel::Slim(m),
        }
    }
}

impl TryFrom<SavedModel> for TrainedModel {
    type Error = anyhow::Error;

    fn try_from(m: SavedModel) -> Result<Self> {
        Ok(match m {
            SavedModel::NeuRec(m) => TrainedModel::NeuRec(m),
            SavedModel::Mf(m) => TrainedModel::Mf(m),
            SavedModel::MostPop(m) => TrainedModel::MostPop(m),
            SavedModel::Slim(m) => TrainedModel::Slim(m),
            SavedModel::Network(_) => bail!("a bare network checkpoint is not a recommender"),
        })
    }
}

/// Wall-clock seconds per phase. Reported, never compared.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub split_secs: f64,
    pub train_secs: f64,
    pub eval_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub seed: u64,
    pub report: RankingReport,
    pub num_parameters: usize,
    pub epoch_losses: Vec<f64>,
    pub timings: PhaseTimings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub model: ModelKind,
    pub splits: Vec<SplitResult>,
    pub mean: MetricSet,
    /// Sample standard deviation; absent with fewer than two splits.
    pub std: Option<MetricSet>,
    /// The resolved configuration.
    pub config: Vec<(String, String)>,
}

/// Mean and sample standard deviation of each metric over the given sets.
pub fn summarize(sets: &[MetricSet]) -> (MetricSet, Option<MetricSet>) {
    let n = sets.len();
    let mut mean = [0.0; 7];
    let mut std = [0.0; 7];
    if n == 0 {
        return (MetricSet::from_array(mean), None);
    }
    for c in 0..7 {
        let col: Vec<f64> = sets.iter().map(|s| s.to_array()[c]).collect();
        mean[c] = col.iter().sum::<f64>() / n as f64;
        if n > 1 {
            let ss: f64 = col.iter().map(|v| (v - mean[c]) * (v - mean[c])).sum();
            std[c] = (ss / (n - 1) as f64).sqrt();
        }
    }
    (MetricSet::from_array(mean), (n > 1).then(|| MetricSet::from_array(std)))
}

/// Loads the configured dataset and binarizes it.
pub fn load_dataset(config: &ExperimentConfig) -> Result<(InteractionMatrix, IdMap)> {
    if config.dataset.as_os_str().is_empty() {
        bail!("no dataset configured (set `dataset = <path>`)");
    }
    let raw = io::load_interactions_path(&config.dataset, &config.format)
        .with_context(|| format!("loading {}", config.dataset.display()))?;
    let (matrix, ids) = build_matrix(&raw).with_context(|| format!("binarizing {}", config.dataset.display()))?;
    info!(
        "loaded {}: {} records, {} users, {} items, {} interactions",
        config.dataset.display(),
        raw.len(),
        matrix.num_users(),
        matrix.num_items(),
        matrix.nnz()
    );
    Ok((matrix, ids))
}

/// Splits with `seed`, trains on the training part with the same seed and evaluates.
pub fn run_split(config: &ExperimentConfig, matrix: &InteractionMatrix, seed: u64) -> Result<(SplitPair, TrainedModel, SplitResult)> {
    let t0 = Instant::now();
    let split = split_holdout_with(matrix, config.ratio, seed, config.split_mode)
        .with_context(|| format!("split stage failed for seed {seed}"))?;
    let t1 = Instant::now();
    let train_config = TrainConfig { seed, ..config.train.clone() };
    let (model, epoch_losses) = TrainedModel::train(config.model, &train_config, &config.slim, &split.train)
        .with_context(|| format!("train stage failed for seed {seed}"))?;
    let t2 = Instant::now();
    let report = model.evaluate(&split).with_context(|| format!("evaluate stage failed for seed {seed}"))?;
    let t3 = Instant::now();
    let timings = PhaseTimings {
        split_secs: (t1 - t0).as_secs_f64(),
        train_secs: (t2 - t1).as_secs_f64(),
        eval_secs: (t3 - t2).as_secs_f64(),
    };
    info!(
        "{} seed {seed}: P@5 {:.4} MAP {:.4} MRR {:.4} NDCG {:.4} (train {:.1}s)",
        config.model, report.aggregate.p5, report.aggregate.map, report.aggregate.mrr, report.aggregate.ndcg, timings.train_secs
    );
    let result = SplitResult { seed, report, num_parameters: model.num_parameters(), epoch_losses, timings };
    Ok((split, model, result))
}

/// Runs every seed on an already loaded matrix. Artifacts go under `out_dir` when given.
pub fn run_experiment_on(
    config: &ExperimentConfig,
    matrix: &InteractionMatrix,
    ids: &IdMap,
    out_dir: Option<&Path>,
) -> Result<ExperimentResult> {
    config.validate()?;
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        io::write_ids(ids, &dir.join("ids.tsv"))?;
        fs::write(dir.join("config.txt"), config.to_text())?;
    }
    let mut splits = Vec::with_capacity(config.seeds.len());
    for &seed in &config.seeds {
        let (split, model, result) = run_split(config, matrix, seed)?;
        if let Some(dir) = out_dir {
            let seed_dir = dir.join(format!("seed-{seed}"));
            fs::create_dir_all(&seed_dir)?;
            io::write_split_path(&split, &seed_dir.join("split.txt"))?;
            model.save(&seed_dir.join(model.file_name()))?;
            fs::write(seed_dir.join("report.json"), serde_json::to_string_pretty(&result.report)?)?;
        }
        splits.push(result);
    }
    let (mean, std) = summarize(&splits.iter().map(|s| s.report.aggregate).collect::<Vec<_>>());
    let result = ExperimentResult { name: config.name.clone(), model: config.model, splits, mean, std, config: config.to_pairs() };
    if let Some(dir) = out_dir {
        emit_report(&result, ReportFormat::Csv, &dir.join("summary.csv"))?;
        emit_report(&result, ReportFormat::Json, &dir.join("result.json"))?;
    }
    Ok(result)
}

/// Loads the dataset and runs the full protocol, writing artifacts to the experiment
/// directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    let (matrix, ids) = load_dataset(config)?;
    run_experiment_on(config, &matrix, &ids, Some(&config.experiment_dir()))
}

/// Hyperparameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    K,
    Width,
    Activation,
    Depth,
    NegativePool,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::Width => "neuron_width",
            SweepParam::Activation => "activation",
            SweepParam::Depth => "depth",
            SweepParam::NegativePool => "t",
        }
    }

    fn config_key(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::Width => "width",
            SweepParam::Activation => "activation",
            SweepParam::Depth => "depth",
            SweepParam::NegativePool => "negative_pool",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "k" => SweepParam::K,
            "neuron_width" | "width" => SweepParam::Width,
            "activation" => SweepParam::Activation,
            "depth" => SweepParam::Depth,
            "t" | "negative_pool" => SweepParam::NegativePool,
            other => bail!("unknown sweep parameter `{other}` (expected k, neuron_width, activation, depth or t)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: String,
    pub result: ExperimentResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub param: SweepParam,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Plot data: `param,value,P@5,P@10,R@5,R@10,MAP,MRR,NDCG`, one row per value.
    pub fn to_csv(&self) -> String {
        let mut out = format!("param,value,{}\n", MetricSet::NAMES.join(","));
        for row in &self.rows {
            out.push_str(&format!("{},{},{}\n", self.param.name(), row.value, metric_fields(&row.result.mean)));
        }
        out
    }
}

/// The config of one sweep point.
pub fn sweep_config(config: &ExperimentConfig, param: SweepParam, value: &str) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    c.set(param.config_key(), value)?;
    c.name = format!("{}-{}-{}", config.name, param.name(), value);
    c.validate()?;
    Ok(c)
}

/// One experiment per value on an already loaded matrix, all other settings fixed.
pub fn run_sweep_on(
    config: &ExperimentConfig,
    param: SweepParam,
    values: &[String],
    matrix: &InteractionMatrix,
    ids: &IdMap,
    out_dir: Option<&Path>,
) -> Result<SweepTable> {
    if values.is_empty() {
        bail!("a sweep needs at least one value");
    }
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let c = sweep_config(config, param, value)?;
        let dir = out_dir.map(|d| d.join(&c.name));
        let result = run_experiment_on(&c, matrix, ids, dir.as_deref())
            .with_context(|| format!("sweep {}={value}", param.name()))?;
        rows.push(SweepRow { value: value.clone(), result });
    }
    let table = SweepTable { param, rows };
    if let Some(dir) = out_dir {
        fs::write(dir.join(format!("sweep-{}.csv", param.name())), table.to_csv())?;
    }
    Ok(table)
}

pub fn run_sweep(config: &ExperimentConfig, param: SweepParam, values: &[String]) -> Result<SweepTable> {
    let (matrix, ids) = load_dataset(config)?;
    run_sweep_on(config, param, values, &matrix, &ids, Some(&config.experiment_dir()))
}

/// Top-`n` unobserved items for the user with external id `user`, as external item ids.
pub fn recommend_top_n(model: &TrainedModel, split: &SplitPair, ids: &IdMap, user: &str, n: usize) -> Result<Vec<String>> {
    if ids.num_users() != split.num_users() || ids.num_items() != split.num_items() {
        bail!(
            "id map ({} users, {} items) does not match the split ({} x {})",
            ids.num_users(),
            ids.num_items(),
            split.num_users(),
            split.num_items()
        );
    }
    let u = ids
        .user_index(user)
        .ok_or_else(|| anyhow!("unknown user id `{user}` ({} known user ids)", ids.num_users()))?;
    let scores = model.with_scorer(&split.train, |score| score(u))?;
    let ranked = rank_candidates(&scores, split.train.row(u), u)?;
    Ok(ranked.items.iter().take(n).map(|&i| ids.item_id(i).expect("index within id map").to_string()).collect())
}

/// [`recommend_top_n`] reading the model, split and id map from files.
pub fn recommend_from_files(model: &Path, split: &Path, ids: &Path, user: &str, n: usize) -> Result<Vec<String>> {
    let model = TrainedModel::load(model).with_context(|| format!("loading {}", model.display()))?;
    let split = io::read_split_path(split).with_context(|| format!("loading {}", split.display()))?;
    let ids = io::read_ids(ids).with_context(|| format!("loading {}", ids.display()))?;
    recommend_top_n(&model, &split, &ids, user, n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => bail!("unknown report format `{other}` (expected json or csv)"),
        }
    }
}

/// The seven metric values, comma-separated in report column order.
pub fn metric_fields(m: &MetricSet) -> String {
    m.to_array().iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// `model,P@5,...,NDCG` with a mean row and, given two or more splits, a `<model>_std` row.
pub fn csv_report(result: &ExperimentResult) -> String {
    let mut out = format!("model,{}\n", MetricSet::NAMES.join(","));
    out.push_str(&format!("{},{}\n", result.model, metric_fields(&result.mean)));
    if let Some(std) = &result.std {
        out.push_str(&format!("{}_std,{}\n", result.model, metric_fields(std)));
    }
    out
}

pub fn json_report(result: &ExperimentResult) -> Result<String> {
    Ok(serde_json::to_string_pretty(result)? + "\n")
}

pub fn emit_report(result: &ExperimentResult, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => csv_report(result),
        ReportFormat::Json => json_report(result)?,
    };
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_result(path: &Path) -> Result<ExperimentResult> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Default location of per-seed artifacts written by [`run_experiment`].
pub fn seed_dir(config: &ExperimentConfig, seed: u64) -> PathBuf {
    config.experiment_dir().join(format!("seed-{seed}"))
}
