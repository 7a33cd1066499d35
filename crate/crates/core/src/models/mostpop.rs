use alloc::vec::Vec;

use super::ParameterCount;
use crate::data::InteractionMatrix;
use crate::{Error, Result};

/// Ranks every item by its number of training interactions, identically for all users.
#[derive(Debug, Clone, PartialEq)]
pub struct MostPop {
    counts: Vec<f64>,
}

pub fn train_mostpop(train: &InteractionMatrix) -> MostPop {
    MostPop { counts: train.column_counts().into_iter().map(|c| c as f64).collect() }
}

impl MostPop {
    pub fn from_scores(counts: Vec<f64>) -> Result<Self> {
        if counts.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("popularity scores must be finite".into()));
        }
        Ok(Self { counts })
    }

    pub fn num_items(&self) -> usize {
        self.counts.len()
    }

    /// Per-item popularity.
    pub fn scores(&self) -> &[f64] {
        &self.counts
    }

    /// The user index is ignored; every user receives the same scores.
    pub fn score_all(&self, _user: usize) -> Vec<f64> {
        self.counts.clone()
    }
}

impl ParameterCount for MostPop {
    fn num_parameters(&self) -> usize {
        self.counts.len()
    }
}
