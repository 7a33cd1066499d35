//! Randomized invariants over splits, sampling, metrics, parameter counts and losses.

use neurec_core::data::{split_holdout_with, InteractionMatrix, SplitMode};
use neurec_core::eval::{rank_candidates, MetricSet, RelevantSet};
use neurec_core::models::{
    count_parameters, pointwise_loss, sample_candidates, sample_negative, train_mostpop, train_neurec, LossKind,
    MfModel, NeuRecModel, SlimConfig, SlimSolver, TrainConfig, Variant,
};
use neurec_core::nn::Activation;
use neurec_core::rng;
use proptest::prelude::*;

/// `(rows, cols, cell mask)` with at least one observed cell.
fn matrix_strategy(max_m: usize, max_n: usize) -> impl Strategy<Value = InteractionMatrix> {
    (1..=max_m, 1..=max_n)
        .prop_flat_map(|(m, n)| (Just(m), Just(n), proptest::collection::vec(any::<bool>(), m * n)))
        .prop_filter_map("empty matrix", |(m, n, mask)| {
            let pairs: Vec<(usize, usize)> = (0..m * n).filter(|&p| mask[p]).map(|p| (p / n, p % n)).collect();
            (!pairs.is_empty()).then(|| InteractionMatrix::from_pairs(m, n, pairs).unwrap())
        })
}

fn activation_strategy() -> impl Strategy<Value = Activation> {
    prop_oneof![
        Just(Activation::Sigmoid),
        Just(Activation::Tanh),
        Just(Activation::Relu),
        Just(Activation::Identity)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn split_partitions_the_pairs(x in matrix_strategy(12, 12), ratio in 0.05f64..0.95, seed: u64, per_user: bool) {
        let mode = if per_user { SplitMode::PerUser } else { SplitMode::Global };
        let split = split_holdout_with(&x, ratio, seed, mode).unwrap();
        prop_assert_eq!(split.train.nnz() + split.test.len(), x.nnz());
        for &(u, i) in &split.test {
            prop_assert!(!split.train.contains(u, i));
        }
        prop_assert_eq!(split.source(), x.clone());
        prop_assert!(split.test.windows(2).all(|w| w[0] < w[1]));
        if !per_user {
            let expected = ((1.0 - ratio) * x.nnz() as f64).round() as usize;
            prop_assert_eq!(split.test.len(), expected);
        }
        prop_assert_eq!(split_holdout_with(&x, ratio, seed, mode).unwrap(), split);
    }

    #[test]
    fn sampler_only_returns_unobserved_items(x in matrix_strategy(8, 15), t in 1usize..20, seed: u64) {
        let mut r = rng::seeded(seed);
        for u in 0..x.num_users() {
            let free = x.num_items() - x.row(u).len();
            match sample_candidates(&x, u, t, &mut r) {
                Ok(pool) => {
                    prop_assert_eq!(pool.len(), t.min(free));
                    prop_assert!(pool.windows(2).all(|w| w[0] < w[1]));
                    prop_assert!(pool.iter().all(|&i| i < x.num_items() && !x.contains(u, i)));
                }
                Err(_) => prop_assert_eq!(free, 0),
            }
            if free > 0 {
                let neg = sample_negative(&x, u, t, &mut r, |i| (i * 7 % 5) as f64).unwrap();
                prop_assert!(!x.contains(u, neg));
            }
        }
    }

    #[test]
    fn metrics_lie_in_unit_interval(
        scores in proptest::collection::vec(-5.0f64..5.0, 1..40),
        relevant_mask in proptest::collection::vec(any::<bool>(), 40),
    ) {
        let n = scores.len();
        let relevant: Vec<usize> = (0..n).filter(|&i| relevant_mask[i]).collect();
        prop_assume!(!relevant.is_empty());
        let ranked = rank_candidates(&scores, &[], 0).unwrap();
        let metrics = MetricSet::for_user(&ranked, &RelevantSet::new(relevant)).unwrap();
        for v in metrics.to_array() {
            prop_assert!((0.0..=1.0).contains(&v), "{v}");
        }
    }

    /// Raising a relevant item's score never lowers any metric.
    #[test]
    fn promoting_a_relevant_item_never_hurts(
        scores in proptest::collection::vec(-5.0f64..5.0, 2..30),
        pick in any::<proptest::sample::Index>(),
        boost in 0.0f64..10.0,
        relevant_mask in proptest::collection::vec(any::<bool>(), 30),
    ) {
        let n = scores.len();
        let target = pick.index(n);
        let mut relevant: Vec<usize> = (0..n).filter(|&i| relevant_mask[i]).collect();
        if !relevant.contains(&target) {
            relevant.push(target);
        }
        let set = RelevantSet::new(relevant);
        let before = MetricSet::for_user(&rank_candidates(&scores, &[], 0).unwrap(), &set).unwrap().to_array();
        let mut boosted = scores.clone();
        boosted[target] += boost;
        let after = MetricSet::for_user(&rank_candidates(&boosted, &[], 0).unwrap(), &set).unwrap().to_array();
        for (b, a) in before.iter().zip(after) {
            prop_assert!(a >= b - 1e-15, "{b} -> {a}");
        }
    }

    #[test]
    fn parameter_counts_follow_the_shapes(
        m in 1usize..30, n in 1usize..30, depth in 1usize..5, width in 1usize..12, k in 1usize..8, user_based: bool,
    ) {
        let cfg = TrainConfig { depth, width, k, ..TrainConfig::default() };
        let variant = if user_based { Variant::UserBased } else { Variant::ItemBased };
        let model = NeuRecModel::init(variant, m, n, &cfg, &mut rng::seeded(0)).unwrap();
        let (input, rows) = if user_based { (n, n) } else { (m, m) };
        let dims = cfg.layer_dims(input);
        let net: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        prop_assert_eq!(count_parameters(&model), net + rows * k);
        prop_assert_eq!(count_parameters(&MfModel::init(m, n, k, &mut rng::seeded(0)).unwrap()), k * (m + n));
        let x = InteractionMatrix::from_pairs(m, n, vec![(0, 0)]).unwrap();
        prop_assert_eq!(count_parameters(&train_mostpop(&x)), n);
        let slim = SlimSolver::new(&x, SlimConfig::default()).unwrap().model();
        prop_assert_eq!(count_parameters(&slim), n * n);
    }

    #[test]
    fn pointwise_loss_matches_cellwise_sum(
        x in matrix_strategy(8, 8),
        activation in activation_strategy(),
        user_based: bool,
        l2 in 0.0f64..1.0,
        seed: u64,
    ) {
        let variant = if user_based { Variant::UserBased } else { Variant::ItemBased };
        let cfg = TrainConfig { depth: 2, width: 5, k: 3, activation, ..TrainConfig::default() };
        let model = NeuRecModel::init(variant, x.num_users(), x.num_items(), &cfg, &mut rng::seeded(seed)).unwrap();
        let (examples, targets) = match variant {
            Variant::UserBased => (x.num_users(), x.num_items()),
            Variant::ItemBased => (x.num_items(), x.num_users()),
        };
        let batch: Vec<usize> = (0..examples).collect();
        let mut sse = 0.0;
        for e in 0..examples {
            let input = if user_based { x.row_view(e) } else { x.column_view(e) };
            let h = model.net().output(&input).unwrap();
            for r in 0..targets {
                let pred: f64 = h.iter().zip(model.factor(r)).map(|(a, b)| a * b).sum();
                let cell = if user_based { x.contains(e, r) } else { x.contains(r, e) };
                sse += (f64::from(u8::from(cell)) - pred).powi(2);
            }
        }
        let weights: f64 = model.net().layers().iter().flat_map(|l| &l.weights).map(|w| w * w).sum();
        let factors: f64 = model.factors().iter().map(|f| f * f).sum();
        let expected = sse + l2 * (weights + factors);
        let got = pointwise_loss(&model, &x, &batch, l2).unwrap();
        prop_assert!((got - expected).abs() <= 1e-10 * expected.max(1.0), "{got} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn training_is_a_function_of_the_seed(
        x in matrix_strategy(6, 6),
        seed: u64,
        user_based: bool,
        pairwise: bool,
    ) {
        let variant = if user_based { Variant::UserBased } else { Variant::ItemBased };
        let loss = if pairwise { LossKind::Pairwise } else { LossKind::Pointwise };
        let cfg = TrainConfig {
            depth: 2, width: 4, k: 2, epochs: 3, batch_size: 3, dropout: 0.1, learning_rate: 0.01, seed, loss,
            ..TrainConfig::default()
        };
        let a = train_neurec(variant, &cfg, &x);
        let b = train_neurec(variant, &cfg, &x);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a.to_string(), b.to_string()),
            _ => prop_assert!(false, "outcomes differ"),
        }
    }
}
