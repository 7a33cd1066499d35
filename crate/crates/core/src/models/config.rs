use core::fmt;
use core::str::FromStr;

use crate::nn::Activation;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LossKind {
    /// Squared reconstruction error over every cell.
    #[default]
    Pointwise,
    /// Bayesian log loss on sampled (u, i+, i-) triples.
    Pairwise,
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::Pointwise => "pointwise",
            LossKind::Pairwise => "pairwise",
        })
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pointwise" => Ok(LossKind::Pointwise),
            "pairwise" => Ok(LossKind::Pairwise),
            other => Err(Error::InvalidConfig(alloc::format!("unknown loss `{other}`"))),
        }
    }
}

/// Training hyperparameters shared by the NeuRec variants and BPR-MF.
///
/// The network has `depth` layers: `depth - 1` hidden layers of `width` units followed by
/// an output layer of `k` units, all using `activation`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub depth: usize,
    pub width: usize,
    pub k: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub loss: LossKind,
    /// Candidate pool size `t` for rank-aware negative sampling.
    pub negative_pool: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            depth: 5,
            width: 150,
            k: 40,
            activation: Activation::Sigmoid,
            dropout: 0.0,
            learning_rate: 1e-4,
            l2: 0.1,
            batch_size: 64,
            epochs: 200,
            seed: 0,
            loss: LossKind::Pointwise,
            negative_pool: 5,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(alloc::string::String::from(msg)));
        if self.depth == 0 || self.width == 0 || self.k == 0 {
            return bad("depth, width and k must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.negative_pool == 0 {
            return bad("negative_pool must be at least 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) || !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return bad("learning_rate and l2 must be finite and non-negative");
        }
        crate::nn::check_dropout(self.dropout)
    }

    /// Layer dimensions for a network reading inputs of length `input_dim`.
    pub fn layer_dims(&self, input_dim: usize) -> alloc::vec::Vec<usize> {
        let mut dims = alloc::vec![input_dim];
        dims.extend(std::iter::repeat_n(self.width, self.depth - 1));
        dims.push(self.k);
        dims
    }
}
