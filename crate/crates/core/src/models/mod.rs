//! Recommenders: U-/I-NeuRec and the mostPOP, BPR-MF and SLIM baselines.

mod config;
mod mf;
mod mostpop;
mod neurec;
mod sampling;
mod slim;

pub use config::{LossKind, TrainConfig};
pub use mf::{train_bpr_mf, train_bpr_mf_observed, MfModel};
pub use mostpop::{train_mostpop, MostPop};
pub use neurec::{
    pairwise_loss, pointwise_loss, score_all_item_based, score_all_user_based, train_neurec,
    train_neurec_observed, train_pairwise, train_pointwise, NeuRecModel, NeuRecScorer, Variant,
};
pub use sampling::{sample_candidates, sample_negative};
pub use slim::{train_slim, SlimConfig, SlimModel, SlimSolver};

/// Exact number of learned parameters.
pub trait ParameterCount {
    fn num_parameters(&self) -> usize;
}

pub fn count_parameters<M: ParameterCount + ?Sized>(model: &M) -> usize {
    model.num_parameters()
}

/// Per-epoch training progress handed to observers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based.
    pub epoch: usize,
    /// Sum of batch losses over the epoch (data term plus the regularizer once per batch).
    pub loss: f64,
}
