//! BPR matrix factorization.

use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::config::TrainConfig;
use super::neurec::log_loss;
use super::sampling::sample_candidates;
use super::{EpochStats, ParameterCount};
use crate::data::InteractionMatrix;
use crate::linalg;
use crate::math;
use crate::nn::{AdamConfig, AdamState, BlockLabel, ParamBlock};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MfModel {
    pub k: usize,
    /// `M x k`, row-major.
    pub user_factors: Vec<f64>,
    /// `N x k`, row-major.
    pub item_factors: Vec<f64>,
}

impl MfModel {
    pub fn init(num_users: usize, num_items: usize, k: usize, rng: &mut Rng) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        let bound_u = math::sqrt(6.0 / (num_users + k) as f64);
        let user_factors = (0..num_users * k).map(|_| rng::uniform_sym(rng, bound_u)).collect();
        let bound_v = math::sqrt(6.0 / (num_items + k) as f64);
        let item_factors = (0..num_items * k).map(|_| rng::uniform_sym(rng, bound_v)).collect();
        Ok(Self { k, user_factors, item_factors })
    }

    pub fn num_users(&self) -> usize {
        self.user_factors.len() / self.k
    }

    pub fn num_items(&self) -> usize {
        self.item_factors.len() / self.k
    }

    pub fn user(&self, u: usize) -> &[f64] {
        &self.user_factors[u * self.k..(u + 1) * self.k]
    }

    pub fn item(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.k..(i + 1) * self.k]
    }

    pub fn score(&self, u: usize, i: usize) -> f64 {
        linalg::dot(self.user(u), self.item(i))
    }

    pub fn score_all(&self, u: usize) -> Result<Vec<f64>> {
        if u >= self.num_users() {
            return Err(Error::IndexOutOfRange { what: "user", index: u, bound: self.num_users() });
        }
        Ok((0..self.num_items()).map(|i| self.score(u, i)).collect())
    }
}

impl ParameterCount for MfModel {
    /// `k(M + N)`
    fn num_parameters(&self) -> usize {
        self.user_factors.len() + self.item_factors.len()
    }
}

/// BPR-MF with uniformly sampled negatives. Each batch minimizes
/// `Σ -ln σ(x̂_ui+ - x̂_ui-) + λ(‖U_u‖² + ‖V_i+‖² + ‖V_i-‖²)` over its triples.
/// Uses `k`, `learning_rate`, `l2`, `batch_size`, `epochs` and `seed` from the config.
pub fn train_bpr_mf(config: &TrainConfig, train: &InteractionMatrix) -> Result<MfModel> {
    train_bpr_mf_observed(config, train, &mut |_| {})
}

pub fn train_bpr_mf_observed(
    config: &TrainConfig,
    train: &InteractionMatrix,
    observer: &mut dyn FnMut(EpochStats),
) -> Result<MfModel> {
    config.validate()?;
    let mut rng = rng::seeded(config.seed);
    let mut model = MfModel::init(train.num_users(), train.num_items(), config.k, &mut rng)?;
    let k = config.k;
    let l2 = config.l2;
    let mut adam = AdamState::new(
        AdamConfig::with_learning_rate(config.learning_rate),
        &[model.user_factors.len(), model.item_factors.len()],
    );
    let mut gu = alloc::vec![0.0; model.user_factors.len()];
    let mut gv = alloc::vec![0.0; model.item_factors.len()];
    let mut pairs: Vec<(usize, usize)> =
        train.entries().filter(|&(u, _)| train.row(u).len() < train.num_items()).collect();

    for epoch in 1..=config.epochs {
        pairs.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in pairs.chunks(config.batch_size).enumerate() {
            gu.iter_mut().for_each(|g| *g = 0.0);
            gv.iter_mut().for_each(|g| *g = 0.0);
            let mut loss = 0.0;
            for &(u, pos) in chunk {
                let neg = sample_candidates(train, u, 1, &mut rng)?[0];
                let margin = model.score(u, pos) - model.score(u, neg);
                let g = -math::sigmoid(-margin);
                loss += log_loss(margin)
                    + l2 * (linalg::sum_squares(model.user(u))
                        + linalg::sum_squares(model.item(pos))
                        + linalg::sum_squares(model.item(neg)));
                for d in 0..k {
                    let pu = model.user_factors[u * k + d];
                    let vp = model.item_factors[pos * k + d];
                    let vn = model.item_factors[neg * k + d];
                    gu[u * k + d] += g * (vp - vn) + 2.0 * l2 * pu;
                    gv[pos * k + d] += g * pu + 2.0 * l2 * vp;
                    gv[neg * k + d] += -g * pu + 2.0 * l2 * vn;
                }
            }
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            adam.step(&mut [
                ParamBlock { label: BlockLabel::Named("U"), values: &mut model.user_factors, grads: &gu },
                ParamBlock { label: BlockLabel::Named("V"), values: &mut model.item_factors, grads: &gv },
            ])?;
            total += loss;
        }
        observer(EpochStats { epoch, loss: total });
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two disjoint communities: users 0..10 like items 0..10, users 10..20 like 10..20.
    fn blocks() -> InteractionMatrix {
        let mut pairs = Vec::new();
        for u in 0..20usize {
            for i in 0..20usize {
                if (u < 10) == (i < 10) && (u + i) % 3 != 0 {
                    pairs.push((u, i));
                }
            }
        }
        InteractionMatrix::from_pairs(20, 20, pairs).unwrap()
    }

    #[test]
    fn learns_block_structure() {
        let x = blocks();
        let cfg = TrainConfig { k: 4, learning_rate: 0.05, l2: 1e-4, batch_size: 16, epochs: 60, ..TrainConfig::default() };
        let m = train_bpr_mf(&cfg, &x).unwrap();
        let (mut hits, mut total) = (0usize, 0usize);
        for u in 0..20 {
            for i in 0..20 {
                for j in 0..20 {
                    if (u < 10) == (i < 10) && (u < 10) != (j < 10) {
                        total += 1;
                        if m.score(u, i) > m.score(u, j) {
                            hits += 1;
                        }
                    }
                }
            }
        }
        assert!(hits as f64 / total as f64 > 0.9, "auc {}", hits as f64 / total as f64);
    }

    #[test]
    fn deterministic_and_counted() {
        let x = blocks();
        let cfg = TrainConfig { k: 3, epochs: 2, ..TrainConfig::default() };
        let a = train_bpr_mf(&cfg, &x).unwrap();
        assert_eq!(a, train_bpr_mf(&cfg, &x).unwrap());
        assert_eq!(a.num_parameters(), 3 * 40);
        assert!(a.score_all(20).is_err());
    }
}
