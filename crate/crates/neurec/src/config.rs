//! Experiment configuration: `key = value` files, named presets and `--key value` overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use neurec_core::data::SplitMode;
use neurec_core::models::{LossKind, SlimConfig, TrainConfig};
use neurec_core::nn::Activation;
use serde::{Deserialize, Serialize};

use crate::io::{Delimiter, LogFormat};

/// Environment variable naming a root directory for relative output paths.
pub const OUTPUT_ROOT_VAR: &str = "NEUREC_OUTPUT_ROOT";

/// Every recognized configuration key, in the order the resolved config is echoed.
pub const KEYS: &[&str] = &[
    "name",
    "preset",
    "dataset",
    "delim",
    "cols",
    "header_lines",
    "model",
    "depth",
    "width",
    "k",
    "activation",
    "dropout",
    "learning_rate",
    "l2",
    "batch_size",
    "epochs",
    "loss",
    "negative_pool",
    "slim_l2",
    "slim_l1",
    "slim_sweeps",
    "slim_tol",
    "ratio",
    "split_mode",
    "seeds",
    "output",
];

pub const PRESETS: &[&str] = &["filmtrust", "ml-1m", "ml-hetrec", "frappe"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("config line {line}: expected `key = value`, found `{text}`")]
    Syntax { line: usize, text: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    UNeurec,
    INeurec,
    Mostpop,
    BprMf,
    Slim,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [ModelKind::UNeurec, ModelKind::INeurec, ModelKind::Mostpop, ModelKind::BprMf, ModelKind::Slim];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::UNeurec => "u_neurec",
            ModelKind::INeurec => "i_neurec",
            ModelKind::Mostpop => "mostpop",
            ModelKind::BprMf => "bpr_mf",
            ModelKind::Slim => "slim",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ModelKind::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| "expected one of u_neurec, i_neurec, mostpop, bpr_mf, slim".into())
    }
}

/// Everything one experiment needs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub preset: Option<String>,
    pub dataset: PathBuf,
    pub format: LogFormat,
    pub model: ModelKind,
    /// `seed` is ignored: each split trains with its own split seed.
    pub train: TrainConfig,
    pub slim: SlimConfig,
    pub ratio: f64,
    pub split_mode: SplitMode,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "experiment".into(),
            preset: None,
            dataset: PathBuf::new(),
            format: LogFormat::new(Delimiter::Whitespace, "user,item,rating").expect("valid default format"),
            model: ModelKind::UNeurec,
            train: TrainConfig::default(),
            slim: SlimConfig::default(),
            ratio: 0.8,
            split_mode: SplitMode::Global,
            seeds: vec![1, 2, 3, 4, 5],
            output: PathBuf::from("runs"),
        }
    }
}

fn bad(key: &str, value: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError::BadValue { key: key.into(), value: value.into(), reason: reason.to_string() }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| bad(key, value, e))
}

/// Applies the key/value pairs of a named preset.
fn preset_pairs(name: &str) -> Result<Vec<(&'static str, &'static str)>, ConfigError> {
    let common = [("depth", "5"), ("activation", "sigmoid"), ("epochs", "200"), ("ratio", "0.8"), ("seeds", "1,2,3,4,5")];
    let specific: &[(&str, &str)] = match name {
        "filmtrust" => &[
            ("delim", "ws"),
            ("cols", "user,item,rating"),
            ("header_lines", "0"),
            ("width", "150"),
            ("k", "40"),
            ("dropout", "0"),
            ("learning_rate", "5e-5"),
            ("l2", "0.1"),
        ],
        "ml-1m" => &[
            ("delim", "colons"),
            ("cols", "user,item,rating,ts"),
            ("header_lines", "0"),
            ("width", "300"),
            ("k", "50"),
            ("dropout", "0.03"),
            ("learning_rate", "1e-4"),
            ("l2", "0.1"),
        ],
        "ml-hetrec" => &[
            ("delim", "tab"),
            ("cols", "user,item,rating,..."),
            ("header_lines", "1"),
            ("width", "300"),
            ("k", "50"),
            ("dropout", "0.03"),
            ("learning_rate", "1e-4"),
            ("l2", "0.1"),
        ],
        "frappe" => &[
            ("delim", "tab"),
            ("cols", "user,item,..."),
            ("header_lines", "1"),
            ("width", "300"),
            ("k", "50"),
            ("dropout", "0.03"),
            ("learning_rate", "1e-4"),
            ("l2", "0.01"),
        ],
        other => return Err(bad("preset", other, format!("expected one of {}", PRESETS.join(", ")))),
    };
    Ok(common.iter().chain(specific).copied().collect())
}

impl ExperimentConfig {
    /// Sets one key. Format keys (`delim`, `cols`, `header_lines`) update the log format.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        match key {
            "name" => {
                if value.is_empty() || value.contains(['/', '\\']) {
                    return Err(bad(key, value, "must be a non-empty name without path separators"));
                }
                self.name = value.into();
            }
            "preset" => {
                for (k, v) in preset_pairs(value)? {
                    self.set(k, v)?;
                }
                self.preset = Some(value.into());
            }
            "dataset" => self.dataset = PathBuf::from(value),
            "delim" => self.format.delimiter = value.parse().map_err(|e| bad(key, value, e))?,
            "cols" => {
                let fresh = LogFormat::new(self.format.delimiter, value).map_err(|e| bad(key, value, e))?;
                self.format = fresh.with_header_lines(self.format.header_lines);
            }
            "header_lines" => self.format.header_lines = num(key, value)?,
            "model" => self.model = value.parse().map_err(|e: String| bad(key, value, e))?,
            "depth" => self.train.depth = num(key, value)?,
            "width" => self.train.width = num(key, value)?,
            "k" => self.train.k = num(key, value)?,
            "activation" => self.train.activation = value.parse::<Activation>().map_err(|e| bad(key, value, e))?,
            "dropout" => self.train.dropout = num(key, value)?,
            "learning_rate" => self.train.learning_rate = num(key, value)?,
            "l2" => self.train.l2 = num(key, value)?,
            "batch_size" => self.train.batch_size = num(key, value)?,
            "epochs" => self.train.epochs = num(key, value)?,
            "loss" => self.train.loss = value.parse::<LossKind>().map_err(|e| bad(key, value, e))?,
            "negative_pool" => self.train.negative_pool = num(key, value)?,
            "slim_l2" => self.slim.l2 = num(key, value)?,
            "slim_l1" => self.slim.l1 = num(key, value)?,
            "slim_sweeps" => self.slim.max_sweeps = num(key, value)?,
            "slim_tol" => self.slim.tol = num(key, value)?,
            "ratio" => self.ratio = num(key, value)?,
            "split_mode" => {
                self.split_mode = match value {
                    "global" => SplitMode::Global,
                    "per_user" => SplitMode::PerUser,
                    _ => return Err(bad(key, value, "expected global or per_user")),
                }
            }
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|e| bad(key, value, e)))
                    .collect::<Result<_, _>>()?;
            }
            "output" => self.output = PathBuf::from(value),
            other => return Err(ConfigError::UnknownKey(other.into())),
        }
        Ok(())
    }

    /// Reads the current value of a key in the syntax accepted by [`ExperimentConfig::set`].
    pub fn get(&self, key: &str) -> Result<String, ConfigError> {
        let t = &self.train;
        Ok(match key {
            "name" => self.name.clone(),
            "preset" => self.preset.clone().unwrap_or_default(),
            "dataset" => self.dataset.display().to_string(),
            "delim" => self.format.delimiter.to_string(),
            "cols" => self.format.columns_spec(),
            "header_lines" => self.format.header_lines.to_string(),
            "model" => self.model.to_string(),
            "depth" => t.depth.to_string(),
            "width" => t.width.to_string(),
            "k" => t.k.to_string(),
            "activation" => t.activation.to_string(),
            "dropout" => t.dropout.to_string(),
            "learning_rate" => t.learning_rate.to_string(),
            "l2" => t.l2.to_string(),
            "batch_size" => t.batch_size.to_string(),
            "epochs" => t.epochs.to_string(),
            "loss" => t.loss.to_string(),
            "negative_pool" => t.negative_pool.to_string(),
            "slim_l2" => self.slim.l2.to_string(),
            "slim_l1" => self.slim.l1.to_string(),
            "slim_sweeps" => self.slim.max_sweeps.to_string(),
            "slim_tol" => self.slim.tol.to_string(),
            "ratio" => self.ratio.to_string(),
            "split_mode" => match self.split_mode {
                SplitMode::Global => "global".into(),
                SplitMode::PerUser => "per_user".into(),
            },
            "seeds" => self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
            "output" => self.output.display().to_string(),
            other => return Err(ConfigError::UnknownKey(other.into())),
        })
    }

    /// Builds a config from ordered pairs. A `preset` key is applied before all other keys
    /// regardless of where it appears, so explicit keys always win over the preset.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self, ConfigError> {
        let mut config = Self::default();
        for (k, v) in pairs.iter().filter(|(k, _)| k.as_ref() == "preset") {
            config.set(k.as_ref(), v.as_ref())?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k.as_ref() != "preset") {
            config.set(k.as_ref(), v.as_ref())?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.slim.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(ConfigError::Invalid(format!("ratio {} must lie in (0, 1)", self.ratio)));
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seeds must not be empty".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ConfigError::Invalid("seeds must be distinct".into()));
        }
        Ok(())
    }

    /// The resolved configuration as `(key, value)` pairs in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        KEYS.iter().map(|&k| (k.to_string(), self.get(k).expect("listed key"))).collect()
    }

    /// The resolved configuration in config-file syntax. Omits `preset`, whose effect is
    /// already folded into the other keys.
    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .filter(|(k, _)| k != "preset")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    /// Output directory, placed under `root` when it is relative and a root is given.
    pub fn output_dir_with_root(&self, root: Option<&Path>) -> PathBuf {
        match root {
            Some(root) if self.output.is_relative() => root.join(&self.output),
            _ => self.output.clone(),
        }
    }

    /// Output directory, honoring the `NEUREC_OUTPUT_ROOT` environment variable.
    pub fn output_dir(&self) -> PathBuf {
        let root = std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from);
        self.output_dir_with_root(root.as_deref())
    }

    /// Directory holding this experiment's artifacts.
    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir().join(&self.name)
    }
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: n + 1, text: raw.into() })?;
        let k = k.trim();
        if k.is_empty() {
            return Err(ConfigError::Syntax { line: n + 1, text: raw.into() });
        }
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.into()));
        }
        pairs.push((k.to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Parses `--key value` (or `--key=value`) flags. Dashes in keys map to underscores.
pub fn parse_overrides(args: &[String]) -> Result<Vec<(String, String)>, ConfigError> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let flag = arg
            .strip_prefix("--")
            .ok_or_else(|| ConfigError::Invalid(format!("expected a `--key value` flag, found `{arg}`")))?;
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| ConfigError::Invalid(format!("flag `{arg}` needs a value")))?;
                (flag.to_string(), v.clone())
            }
        };
        let key = key.replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey(key));
        }
        pairs.push((key, value));
    }
    Ok(pairs)
}

/// Config file contents (if any) followed by command-line overrides.
pub fn load_config(file_text: Option<&str>, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut pairs = match file_text {
        Some(text) => parse_config_text(text)?,
        None => Vec::new(),
    };
    pairs.extend(parse_overrides(overrides)?);
    ExperimentConfig::from_pairs(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filmtrust_preset_values() {
        let c = ExperimentConfig::from_pairs(&[("preset", "filmtrust")]).unwrap();
        assert_eq!((c.train.depth, c.train.width, c.train.k), (5, 150, 40));
        assert_eq!(c.train.activation, Activation::Sigmoid);
        assert_eq!((c.train.dropout, c.train.learning_rate, c.train.l2), (0.0, 5e-5, 0.1));
        let f = ExperimentConfig::from_pairs(&[("preset", "frappe")]).unwrap();
        assert_eq!((f.train.width, f.train.k, f.train.dropout, f.train.l2), (300, 50, 0.03, 0.01));
        for p in PRESETS {
            ExperimentConfig::from_pairs(&[("preset", *p)]).unwrap();
        }
    }

    #[test]
    fn explicit_keys_beat_preset() {
        let c = ExperimentConfig::from_pairs(&[("k", "10"), ("preset", "ml-1m")]).unwrap();
        assert_eq!(c.train.k, 10);
        assert_eq!(c.train.width, 300);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert_eq!(parse_config_text("kk = 3\n"), Err(ConfigError::UnknownKey("kk".into())));
        assert!(matches!(parse_config_text("k 3\n"), Err(ConfigError::Syntax { line: 1, .. })));
        assert_eq!(parse_overrides(&["--bogus".into(), "1".into()]), Err(ConfigError::UnknownKey("bogus".into())));
        assert!(parse_overrides(&["--k".into()]).is_err());
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# FilmTrust\npreset = filmtrust\nmodel = mostpop # baseline\nseeds = 3,4\n";
        let args: Vec<String> = ["--seeds", "7", "--learning-rate=0.01"].iter().map(|s| s.to_string()).collect();
        let c = load_config(Some(text), &args).unwrap();
        assert_eq!(c.model, ModelKind::Mostpop);
        assert_eq!(c.seeds, vec![7]);
        assert_eq!(c.train.learning_rate, 0.01);
    }

    #[test]
    fn text_round_trip() {
        let c = load_config(Some("preset = ml-hetrec\nname = x\ndataset = /d/r.dat\nsplit_mode = per_user\n"), &[]).unwrap();
        let again = load_config(Some(&c.to_text()), &[]).unwrap();
        assert_eq!(ExperimentConfig { preset: c.preset.clone(), ..again }, c);
    }

    #[test]
    fn invalid_values() {
        assert!(ExperimentConfig::from_pairs(&[("seeds", "1,1")]).is_err());
        assert!(ExperimentConfig::from_pairs(&[("ratio", "1")]).is_err());
        assert!(ExperimentConfig::from_pairs(&[("model", "neumf")]).is_err());
        assert!(ExperimentConfig::from_pairs(&[("preset", "netflix")]).is_err());
        assert!(ExperimentConfig::from_pairs(&[("t", "0")]).is_err());
        assert!(ExperimentConfig::from_pairs(&[("negative_pool", "0")]).is_err());
    }

    #[test]
    fn output_root() {
        let c = ExperimentConfig::default();
        assert_eq!(c.output_dir_with_root(Some(Path::new("/tmp/r"))), PathBuf::from("/tmp/r/runs"));
        let abs = ExperimentConfig { output: "/abs".into(), ..c };
        assert_eq!(abs.output_dir_with_root(Some(Path::new("/tmp/r"))), PathBuf::from("/abs"));
    }
}
