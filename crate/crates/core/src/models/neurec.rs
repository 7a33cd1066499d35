//! U-NeuRec and I-NeuRec.
//!
//! U-NeuRec feeds a user's training row `X_u*` through the network and scores item `i`
//! as `h_L(X_u*) · Q_i`. I-NeuRec feeds an item's column `X_*i` and scores
//! `P_u · h_L(X_*i)`. Both reduce to the same computation on a "view" of `X`: the rows
//! of `X` for the user variant, the rows of `Xᵀ` for the item variant. Each view row is
//! one training example whose targets are the factor rows.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;

use super::config::{LossKind, TrainConfig};
use super::sampling::sample_negative;
use super::{EpochStats, ParameterCount};
use crate::data::InteractionMatrix;
use crate::linalg;
use crate::math;
use crate::nn::{self, AdamConfig, AdamState, BlockLabel, Mlp, MlpGradients, ParamBlock, SparseBatch};
use crate::rng::{self, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    UserBased,
    ItemBased,
}

impl Variant {
    fn factor_label(self) -> &'static str {
        match self {
            Variant::UserBased => "Q",
            Variant::ItemBased => "P",
        }
    }

    fn name(self) -> &'static str {
        match self {
            Variant::UserBased => "user_based",
            Variant::ItemBased => "item_based",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "user_based" => Ok(Variant::UserBased),
            "item_based" => Ok(Variant::ItemBased),
            other => Err(Error::InvalidConfig(alloc::format!("unknown NeuRec variant `{other}`"))),
        }
    }
}

#[derive(Clone, Copy)]
struct View<'a> {
    matrix: &'a InteractionMatrix,
    by_rows: bool,
}

impl<'a> View<'a> {
    fn new(variant: Variant, matrix: &'a InteractionMatrix) -> Self {
        Self { matrix, by_rows: variant == Variant::UserBased }
    }

    fn examples(&self) -> usize {
        if self.by_rows {
            self.matrix.num_users()
        } else {
            self.matrix.num_items()
        }
    }

    fn targets(&self) -> usize {
        if self.by_rows {
            self.matrix.num_items()
        } else {
            self.matrix.num_users()
        }
    }

    fn input(&self, e: usize) -> &'a [usize] {
        if self.by_rows {
            self.matrix.row(e)
        } else {
            self.matrix.col(e)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuRecModel {
    variant: Variant,
    net: Mlp,
    /// `Q` (N x k) for the user variant, `P` (M x k) for the item variant; row-major.
    factors: Vec<f64>,
    k: usize,
}

impl NeuRecModel {
    /// Fresh model for an `num_users x num_items` interaction matrix.
    pub fn init(variant: Variant, num_users: usize, num_items: usize, config: &TrainConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let (input_dim, factor_rows) = match variant {
            Variant::UserBased => (num_items, num_items),
            Variant::ItemBased => (num_users, num_users),
        };
        let net = Mlp::init(&config.layer_dims(input_dim), config.activation, rng)?;
        let bound = math::sqrt(6.0 / (factor_rows + config.k) as f64);
        let factors = (0..factor_rows * config.k).map(|_| rng::uniform_sym(rng, bound)).collect();
        Ok(Self { variant, net, factors, k: config.k })
    }

    pub fn from_parts(variant: Variant, net: Mlp, factors: Vec<f64>) -> Result<Self> {
        let k = net.output_dim();
        if !factors.len().is_multiple_of(k) {
            return Err(Error::DimensionMismatch { what: "factor matrix", expected: (factors.len() / k + 1) * k, found: factors.len() });
        }
        if factors.iter().any(|v| !v.is_finite()) || !net.is_finite() {
            return Err(Error::InvalidConfig("non-finite model parameter".into()));
        }
        Ok(Self { variant, net, factors, k })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp {
        &mut self.net
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn factors_mut(&mut self) -> &mut [f64] {
        &mut self.factors
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn factor_rows(&self) -> usize {
        self.factors.len() / self.k
    }

    pub fn factor(&self, r: usize) -> &[f64] {
        &self.factors[r * self.k..(r + 1) * self.k]
    }

    /// `‖W‖²_F + ‖Q‖²_F` (or `‖P‖²_F`).
    pub fn regularizer(&self) -> f64 {
        self.net.weight_sq_norm() + linalg::sum_squares(&self.factors)
    }

    fn check_shape(&self, train: &InteractionMatrix) -> Result<()> {
        let (input, rows) = match self.variant {
            Variant::UserBased => (train.num_items(), train.num_items()),
            Variant::ItemBased => (train.num_users(), train.num_users()),
        };
        if self.net.input_dim() != input {
            return Err(Error::DimensionMismatch { what: "network input", expected: input, found: self.net.input_dim() });
        }
        if self.factor_rows() != rows {
            return Err(Error::DimensionMismatch { what: "factor rows", expected: rows, found: self.factor_rows() });
        }
        Ok(())
    }

    fn require(&self, variant: Variant) -> Result<()> {
        if self.variant == variant {
            Ok(())
        } else {
            Err(Error::WrongVariant { expected: variant.name() })
        }
    }

    /// `h_L` for the given view examples (no dropout), `examples.len() x k` row-major.
    fn encode(&self, view: View<'_>, examples: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(examples.len() * self.k);
        let mut batch = SparseBatch::new(self.net.input_dim());
        for chunk in examples.chunks(256) {
            batch.clear();
            for &e in chunk {
                batch.push_row(view.input(e).iter().map(|&i| (i, 1.0)));
            }
            out.extend_from_slice(self.net.forward_batch(&batch)?.output());
        }
        Ok(out)
    }

    /// Precomputes network outputs for every user (user variant) or item (item variant).
    pub fn scorer<'a>(&'a self, train: &InteractionMatrix) -> Result<NeuRecScorer<'a>> {
        self.check_shape(train)?;
        let view = View::new(self.variant, train);
        let all: Vec<usize> = (0..view.examples()).collect();
        let encodings = self.encode(view, &all)?;
        Ok(NeuRecScorer { model: self, encodings, num_users: train.num_users(), num_items: train.num_items() })
    }

    /// Samples a negative for `u` scored with this model's current parameters.
    pub fn sample_negative(&self, train: &InteractionMatrix, u: usize, t: usize, rng: &mut Rng) -> Result<usize> {
        self.check_shape(train)?;
        if u >= train.num_users() {
            return Err(Error::IndexOutOfRange { what: "user", index: u, bound: train.num_users() });
        }
        let view = View::new(self.variant, train);
        match self.variant {
            Variant::UserBased => {
                let h = self.encode(view, &[u])?;
                sample_negative(train, u, t, rng, |j| linalg::dot(self.factor(j), &h))
            }
            Variant::ItemBased => {
                let p = self.factor(u);
                let mut failure = None;
                let pick = sample_negative(train, u, t, rng, |j| match self.encode(view, &[j]) {
                    Ok(h) => linalg::dot(p, &h),
                    Err(e) => {
                        failure = Some(e);
                        f64::NEG_INFINITY
                    }
                })?;
                match failure {
                    Some(e) => Err(e),
                    None => Ok(pick),
                }
            }
        }
    }
}

impl ParameterCount for NeuRecModel {
    /// `S_nn + k·N` (user variant) or `S_nn + k·M` (item variant).
    fn num_parameters(&self) -> usize {
        self.net.num_parameters() + self.factors.len()
    }
}

/// Cached network outputs for one evaluation pass over a fixed model and training matrix.
pub struct NeuRecScorer<'a> {
    model: &'a NeuRecModel,
    encodings: Vec<f64>,
    num_users: usize,
    num_items: usize,
}

impl NeuRecScorer<'_> {
    fn encoding(&self, e: usize) -> &[f64] {
        &self.encodings[e * self.model.k..(e + 1) * self.model.k]
    }

    pub fn score(&self, u: usize, i: usize) -> f64 {
        match self.model.variant {
            Variant::UserBased => linalg::dot(self.encoding(u), self.model.factor(i)),
            Variant::ItemBased => linalg::dot(self.model.factor(u), self.encoding(i)),
        }
    }

    /// Scores of every item for user `u`.
    pub fn score_user(&self, u: usize) -> Result<Vec<f64>> {
        if u >= self.num_users {
            return Err(Error::IndexOutOfRange { what: "user", index: u, bound: self.num_users });
        }
        Ok((0..self.num_items).map(|i| self.score(u, i)).collect())
    }
}

/// `h_L(X_u*) · Q_i` for every item `i`.
pub fn score_all_user_based(model: &NeuRecModel, train: &InteractionMatrix, u: usize) -> Result<Vec<f64>> {
    model.require(Variant::UserBased)?;
    model.check_shape(train)?;
    if u >= train.num_users() {
        return Err(Error::IndexOutOfRange { what: "user", index: u, bound: train.num_users() });
    }
    let h = model.encode(View::new(model.variant, train), &[u])?;
    Ok((0..train.num_items()).map(|i| linalg::dot(&h, model.factor(i))).collect())
}

/// `P_u · h_L(X_*i)` for every item `i`. Recomputes all item outputs; use
/// [`NeuRecModel::scorer`] to share them across users.
pub fn score_all_item_based(model: &NeuRecModel, train: &InteractionMatrix, u: usize) -> Result<Vec<f64>> {
    model.require(Variant::ItemBased)?;
    model.scorer(train)?.score_user(u)
}

/// Squared error over every cell of the batch's view rows plus `λ(‖W‖² + ‖F‖²)`.
/// `batch` holds user indices for the user variant and item indices for the item variant.
pub fn pointwise_loss(model: &NeuRecModel, train: &InteractionMatrix, batch: &[usize], l2: f64) -> Result<f64> {
    model.check_shape(train)?;
    if batch.is_empty() {
        return Err(Error::Empty);
    }
    let view = View::new(model.variant, train);
    if let Some(&e) = batch.iter().find(|&&e| e >= view.examples()) {
        return Err(Error::IndexOutOfRange { what: "batch example", index: e, bound: view.examples() });
    }
    let h = model.encode(view, batch)?;
    let mut sse = 0.0;
    for (b, &e) in batch.iter().enumerate() {
        let hb = &h[b * model.k..(b + 1) * model.k];
        let ones = view.input(e);
        for r in 0..view.targets() {
            let target = if ones.binary_search(&r).is_ok() { 1.0 } else { 0.0 };
            let d = target - linalg::dot(hb, model.factor(r));
            sse += d * d;
        }
    }
    Ok(sse + l2 * model.regularizer())
}

/// `-ln σ(x̂_{u,i+} - x̂_{u,i-}) + λ(‖W‖² + ‖F‖²)`.
pub fn pairwise_loss(model: &NeuRecModel, train: &InteractionMatrix, u: usize, pos: usize, neg: usize, l2: f64) -> Result<f64> {
    model.check_shape(train)?;
    if u >= train.num_users() {
        return Err(Error::IndexOutOfRange { what: "user", index: u, bound: train.num_users() });
    }
    for i in [pos, neg] {
        if i >= train.num_items() {
            return Err(Error::IndexOutOfRange { what: "item", index: i, bound: train.num_items() });
        }
    }
    if !train.contains(u, pos) {
        return Err(Error::NotObserved { user: u, item: pos });
    }
    if train.contains(u, neg) {
        return Err(Error::AlreadyObserved { user: u, item: neg });
    }
    let view = View::new(model.variant, train);
    let margin = match model.variant {
        Variant::UserBased => {
            let h = model.encode(view, &[u])?;
            linalg::dot(&h, model.factor(pos)) - linalg::dot(&h, model.factor(neg))
        }
        Variant::ItemBased => {
            let h = model.encode(view, &[pos, neg])?;
            let p = model.factor(u);
            linalg::dot(p, &h[..model.k]) - linalg::dot(p, &h[model.k..])
        }
    };
    Ok(log_loss(margin) + l2 * model.regularizer())
}

/// `-ln σ(margin)`
pub(crate) fn log_loss(margin: f64) -> f64 {
    math::softplus(-margin)
}

struct Trainer<'a> {
    model: NeuRecModel,
    adam: AdamState,
    config: &'a TrainConfig,
    view: View<'a>,
    grads: MlpGradients,
    factor_grads: Vec<f64>,
}

impl<'a> Trainer<'a> {
    fn new(variant: Variant, config: &'a TrainConfig, train: &'a InteractionMatrix, rng: &mut Rng) -> Result<Self> {
        let model = NeuRecModel::init(variant, train.num_users(), train.num_items(), config, rng)?;
        let mut sizes = nn::mlp_block_sizes(&model.net);
        sizes.push(model.factors.len());
        let adam = AdamState::new(AdamConfig::with_learning_rate(config.learning_rate), &sizes);
        let grads = MlpGradients::zeros_like(&model.net);
        let factor_grads = alloc::vec![0.0; model.factors.len()];
        Ok(Self { view: View::new(variant, train), model, adam, config, grads, factor_grads })
    }

    fn reset_grads(&mut self) {
        self.grads.fill_zero();
        self.factor_grads.iter_mut().for_each(|g| *g = 0.0);
    }

    fn add_regularizer_grads(&mut self) {
        let l2 = self.config.l2;
        self.grads.add_weight_decay(&self.model.net, l2);
        if l2 != 0.0 {
            for (g, &f) in self.factor_grads.iter_mut().zip(&self.model.factors) {
                *g += 2.0 * l2 * f;
            }
        }
    }

    /// Adds the regularizer gradient and applies one Adam update.
    fn apply(&mut self) -> Result<()> {
        self.add_regularizer_grads();
        let label = self.model.variant.factor_label();
        let mut blocks = nn::mlp_blocks(&mut self.model.net, &self.grads);
        blocks.push(ParamBlock { label: BlockLabel::Named(label), values: &mut self.model.factors, grads: &self.factor_grads });
        self.adam.step(&mut blocks)
    }

    /// Loss and gradients of one pointwise batch.
    fn pointwise_batch(&mut self, examples: &[usize], rng: &mut Rng) -> Result<f64> {
        self.reset_grads();
        let k = self.model.k;
        let rows = examples.len();
        let targets = self.view.targets();
        let mut batch = SparseBatch::new(self.model.net.input_dim());
        for &e in examples {
            batch.push_binary_row(self.view.input(e), self.config.dropout, rng);
        }
        let trace = self.model.net.forward_batch(&batch)?;
        let h = trace.output();
        // residuals, then d(loss)/d(score) = 2 * residual
        let mut resid = alloc::vec![0.0; rows * targets];
        linalg::matmul_nt(rows, k, targets, h, &self.model.factors, 0.0, &mut resid);
        for (b, &e) in examples.iter().enumerate() {
            for &r in self.view.input(e) {
                resid[b * targets + r] -= 1.0;
            }
        }
        let sse = linalg::sum_squares(&resid);
        resid.iter_mut().for_each(|v| *v *= 2.0);
        linalg::matmul_tn(targets, rows, k, &resid, h, 0.0, &mut self.factor_grads);
        let mut grad_h = alloc::vec![0.0; rows * k];
        linalg::matmul_nn(rows, targets, k, &resid, &self.model.factors, 0.0, &mut grad_h);
        self.model.net.backward_batch(&batch, &trace, &grad_h, &mut self.grads)?;
        Ok(sse + self.config.l2 * self.model.regularizer())
    }

    /// Loss and gradients of one batch of `(u, i+, i-)` triples.
    fn pairwise_batch(&mut self, triples: &[(usize, usize, usize)], rng: &mut Rng) -> Result<f64> {
        self.reset_grads();
        let k = self.model.k;
        let dropout = self.config.dropout;
        let mut batch = SparseBatch::new(self.model.net.input_dim());
        let mut data_loss = 0.0;
        match self.model.variant {
            Variant::UserBased => {
                for &(u, _, _) in triples {
                    batch.push_binary_row(self.view.input(u), dropout, rng);
                }
                let trace = self.model.net.forward_batch(&batch)?;
                let mut grad_h = alloc::vec![0.0; triples.len() * k];
                let mut diff = alloc::vec![0.0; k];
                for (b, &(_, pos, neg)) in triples.iter().enumerate() {
                    let hb = trace.output_row(b);
                    let (fp, fn_) = (self.model.factor(pos), self.model.factor(neg));
                    for (d, v) in diff.iter_mut().enumerate() {
                        *v = fp[d] - fn_[d];
                    }
                    let margin = linalg::dot(hb, &diff);
                    data_loss += log_loss(margin);
                    let g = -math::sigmoid(-margin);
                    for d in 0..k {
                        grad_h[b * k + d] = g * diff[d];
                        self.factor_grads[pos * k + d] += g * hb[d];
                        self.factor_grads[neg * k + d] -= g * hb[d];
                    }
                }
                self.model.net.backward_batch(&batch, &trace, &grad_h, &mut self.grads)?;
            }
            Variant::ItemBased => {
                for &(_, pos, neg) in triples {
                    batch.push_binary_row(self.view.input(pos), dropout, rng);
                    batch.push_binary_row(self.view.input(neg), dropout, rng);
                }
                let trace = self.model.net.forward_batch(&batch)?;
                let mut grad_h = alloc::vec![0.0; 2 * triples.len() * k];
                for (b, &(u, _, _)) in triples.iter().enumerate() {
                    let hp = trace.output_row(2 * b);
                    let hn = trace.output_row(2 * b + 1);
                    let p = &self.model.factors[u * k..(u + 1) * k];
                    let margin = linalg::dot(p, hp) - linalg::dot(p, hn);
                    data_loss += log_loss(margin);
                    let g = -math::sigmoid(-margin);
                    for d in 0..k {
                        grad_h[2 * b * k + d] = g * p[d];
                        grad_h[(2 * b + 1) * k + d] = -g * p[d];
                        self.factor_grads[u * k + d] += g * (hp[d] - hn[d]);
                    }
                }
                self.model.net.backward_batch(&batch, &trace, &grad_h, &mut self.grads)?;
            }
        }
        Ok(data_loss + self.config.l2 * self.model.regularizer())
    }
}

/// Trains a NeuRec model with the loss selected by `config.loss`.
pub fn train_neurec(variant: Variant, config: &TrainConfig, train: &InteractionMatrix) -> Result<NeuRecModel> {
    train_neurec_observed(variant, config, train, &mut |_| {})
}

pub fn train_neurec_observed(
    variant: Variant,
    config: &TrainConfig,
    train: &InteractionMatrix,
    observer: &mut dyn FnMut(EpochStats),
) -> Result<NeuRecModel> {
    match config.loss {
        LossKind::Pointwise => run_pointwise(variant, config, train, observer),
        LossKind::Pairwise => run_pairwise(variant, config, train, observer),
    }
}

/// Mini-batch Adam on the squared reconstruction objective.
pub fn train_pointwise(variant: Variant, config: &TrainConfig, train: &InteractionMatrix) -> Result<NeuRecModel> {
    if config.loss != LossKind::Pointwise {
        return Err(Error::InvalidConfig("train_pointwise needs loss = pointwise".into()));
    }
    run_pointwise(variant, config, train, &mut |_| {})
}

/// Mini-batch Adam on the pairwise log loss with rank-aware negatives.
pub fn train_pairwise(variant: Variant, config: &TrainConfig, train: &InteractionMatrix) -> Result<NeuRecModel> {
    if config.loss != LossKind::Pairwise {
        return Err(Error::InvalidConfig("train_pairwise needs loss = pairwise".into()));
    }
    run_pairwise(variant, config, train, &mut |_| {})
}

fn run_pointwise(
    variant: Variant,
    config: &TrainConfig,
    train: &InteractionMatrix,
    observer: &mut dyn FnMut(EpochStats),
) -> Result<NeuRecModel> {
    let mut rng = rng::seeded(config.seed);
    let mut trainer = Trainer::new(variant, config, train, &mut rng)?;
    let mut order: Vec<usize> = (0..trainer.view.examples()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let loss = trainer.pointwise_batch(chunk, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            trainer.apply()?;
            total += loss;
        }
        observer(EpochStats { epoch, loss: total });
    }
    Ok(trainer.model)
}

fn run_pairwise(
    variant: Variant,
    config: &TrainConfig,
    train: &InteractionMatrix,
    observer: &mut dyn FnMut(EpochStats),
) -> Result<NeuRecModel> {
    let mut rng = rng::seeded(config.seed);
    let mut trainer = Trainer::new(variant, config, train, &mut rng)?;
    let mut pairs: Vec<(usize, usize)> = train
        .entries()
        .filter(|&(u, _)| train.row(u).len() < train.num_items())
        .collect();
    let all_examples: Vec<usize> = (0..trainer.view.examples()).collect();
    let mut triples = Vec::with_capacity(config.batch_size);
    for epoch in 1..=config.epochs {
        pairs.shuffle(&mut rng);
        // Negatives are ranked with the parameters as of the start of the epoch.
        let snapshot = trainer.model.encode(trainer.view, &all_examples)?;
        let k = trainer.model.k;
        let mut total = 0.0;
        for (b, chunk) in pairs.chunks(config.batch_size).enumerate() {
            triples.clear();
            for &(u, pos) in chunk {
                let model = &trainer.model;
                let neg = sample_negative(train, u, config.negative_pool, &mut rng, |j| match variant {
                    Variant::UserBased => linalg::dot(&snapshot[u * k..(u + 1) * k], model.factor(j)),
                    Variant::ItemBased => linalg::dot(model.factor(u), &snapshot[j * k..(j + 1) * k]),
                })?;
                triples.push((u, pos, neg));
            }
            let loss = trainer.pairwise_batch(&triples, &mut rng)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: b + 1 });
            }
            trainer.apply()?;
            total += loss;
        }
        observer(EpochStats { epoch, loss: total });
    }
    Ok(trainer.model)
}
