//! Top-n ranking protocol and metrics.
//!
//! Candidates are every item except the user's training positives, ranked by score
//! (descending, ties by ascending item index). Relevance is binary. MAP, MRR and NDCG
//! run over the full candidate list; NDCG uses the `1 / log2(p + 1)` discount.

use alloc::vec::Vec;

use crate::data::SplitPair;
use crate::math;
use crate::{Error, Result};

/// Cut-offs reported for precision and recall.
pub const CUTOFFS: [usize; 2] = [5, 10];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    pub user: usize,
    /// Best first.
    pub items: Vec<usize>,
    pub candidate_count: usize,
}

/// Ranks all non-training items of user `u`. `train_positives` must be sorted ascending.
pub fn rank_candidates(scores: &[f64], train_positives: &[usize], u: usize) -> Result<RankedList> {
    if let Some(item) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore { item });
    }
    let mut items: Vec<usize> =
        (0..scores.len()).filter(|i| train_positives.binary_search(i).is_err()).collect();
    items.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let candidate_count = items.len();
    Ok(RankedList { user: u, items, candidate_count })
}

/// Sorted, duplicate-free set of relevant items.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RelevantSet(Vec<usize>);

impl RelevantSet {
    pub fn new(mut items: Vec<usize>) -> Self {
        items.sort_unstable();
        items.dedup();
        Self(items)
    }

    pub fn contains(&self, item: usize) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[usize] {
        &self.0
    }
}

impl FromIterator<usize> for RelevantSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

fn hits_at(ranked: &RankedList, relevant: &RelevantSet, k: usize) -> usize {
    ranked.items.iter().take(k).filter(|&&i| relevant.contains(i)).count()
}

fn require_relevant(relevant: &RelevantSet) -> Result<()> {
    if relevant.is_empty() {
        Err(Error::EmptyRelevant)
    } else {
        Ok(())
    }
}

/// `|top-k ∩ relevant| / k`; the denominator stays `k` for short lists.
pub fn precision_at_k(ranked: &RankedList, relevant: &RelevantSet, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    hits_at(ranked, relevant, k) as f64 / k as f64
}

/// `|top-k ∩ relevant| / |relevant|`
pub fn recall_at_k(ranked: &RankedList, relevant: &RelevantSet, k: usize) -> Result<f64> {
    require_relevant(relevant)?;
    Ok(hits_at(ranked, relevant, k) as f64 / relevant.len() as f64)
}

pub fn average_precision(ranked: &RankedList, relevant: &RelevantSet) -> Result<f64> {
    require_relevant(relevant)?;
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (r, &i) in ranked.items.iter().enumerate() {
        if relevant.contains(i) {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

pub fn reciprocal_rank(ranked: &RankedList, relevant: &RelevantSet) -> Result<f64> {
    require_relevant(relevant)?;
    Ok(ranked
        .items
        .iter()
        .position(|&i| relevant.contains(i))
        .map_or(0.0, |p| 1.0 / (p + 1) as f64))
}

pub fn ndcg(ranked: &RankedList, relevant: &RelevantSet) -> Result<f64> {
    require_relevant(relevant)?;
    let dcg: f64 = ranked
        .items
        .iter()
        .enumerate()
        .filter(|(_, &i)| relevant.contains(i))
        .map(|(p, _)| 1.0 / math::log2((p + 2) as f64))
        .sum();
    let idcg: f64 = (0..relevant.len()).map(|p| 1.0 / math::log2((p + 2) as f64)).sum();
    Ok(dcg / idcg)
}

/// Metric values in report column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricSet {
    pub p5: f64,
    pub p10: f64,
    pub r5: f64,
    pub r10: f64,
    pub map: f64,
    pub mrr: f64,
    pub ndcg: f64,
}

impl MetricSet {
    pub const NAMES: [&'static str; 7] = ["P@5", "P@10", "R@5", "R@10", "MAP", "MRR", "NDCG"];

    pub fn to_array(&self) -> [f64; 7] {
        [self.p5, self.p10, self.r5, self.r10, self.map, self.mrr, self.ndcg]
    }

    pub fn from_array(v: [f64; 7]) -> Self {
        Self { p5: v[0], p10: v[1], r5: v[2], r10: v[3], map: v[4], mrr: v[5], ndcg: v[6] }
    }

    pub fn for_user(ranked: &RankedList, relevant: &RelevantSet) -> Result<Self> {
        Ok(Self {
            p5: precision_at_k(ranked, relevant, CUTOFFS[0]),
            p10: precision_at_k(ranked, relevant, CUTOFFS[1]),
            r5: recall_at_k(ranked, relevant, CUTOFFS[0])?,
            r10: recall_at_k(ranked, relevant, CUTOFFS[1])?,
            map: average_precision(ranked, relevant)?,
            mrr: reciprocal_rank(ranked, relevant)?,
            ndcg: ndcg(ranked, relevant)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserMetrics {
    pub user: usize,
    pub metrics: MetricSet,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankingReport {
    pub per_user: Vec<UserMetrics>,
    /// Unweighted means over evaluated users.
    pub aggregate: MetricSet,
    pub evaluated_users: usize,
    /// Users without any test positive.
    pub skipped_users: usize,
    /// Evaluated users whose training row is empty.
    pub cold_start_users: usize,
}

impl RankingReport {
    /// Aggregates per-user values. Each mean is taken over the values in ascending order,
    /// so the result does not depend on the order users were visited in.
    pub fn from_user_metrics(mut per_user: Vec<UserMetrics>, total_users: usize, cold_start_users: usize) -> Self {
        per_user.sort_by_key(|m| m.user);
        let n = per_user.len();
        let mut agg = [0.0; 7];
        if n > 0 {
            for (c, slot) in agg.iter_mut().enumerate() {
                let mut col: Vec<f64> = per_user.iter().map(|m| m.metrics.to_array()[c]).collect();
                col.sort_by(f64::total_cmp);
                *slot = col.iter().sum::<f64>() / n as f64;
            }
        }
        Self {
            aggregate: MetricSet::from_array(agg),
            evaluated_users: n,
            skipped_users: total_users - n,
            cold_start_users,
            per_user,
        }
    }
}

/// Evaluates a scorer on a split. `score` returns one score per item for a user.
pub fn evaluate_model<F>(mut score: F, split: &SplitPair) -> Result<RankingReport>
where
    F: FnMut(usize) -> Result<Vec<f64>>,
{
    let n_items = split.num_items();
    let test = split.test_by_user();
    let mut per_user = Vec::new();
    let mut cold = 0;
    for (u, items) in test.into_iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        let scores = score(u)?;
        if scores.len() != n_items {
            return Err(Error::DimensionMismatch { what: "score vector", expected: n_items, found: scores.len() });
        }
        let positives = split.train.row(u);
        if positives.is_empty() {
            cold += 1;
        }
        let ranked = rank_candidates(&scores, positives, u)?;
        let metrics = MetricSet::for_user(&ranked, &RelevantSet::new(items))?;
        per_user.push(UserMetrics { user: u, metrics });
    }
    Ok(RankingReport::from_user_metrics(per_user, split.num_users(), cold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::InteractionMatrix;
    use alloc::vec;

    fn list(items: Vec<usize>) -> RankedList {
        let n = items.len();
        RankedList { user: 0, items, candidate_count: n }
    }

    #[test]
    fn ranking_excludes_positives_and_breaks_ties() {
        let r = rank_candidates(&[0.9, 0.1, 0.5], &[0], 0).unwrap();
        assert_eq!(r.items, vec![2, 1]);
        assert_eq!(r.candidate_count, 2);
        let r = rank_candidates(&[1.0; 4], &[], 3).unwrap();
        assert_eq!(r.items, vec![0, 1, 2, 3]);
        assert!(rank_candidates(&[0.0, f64::NAN], &[], 0).is_err());
    }

    #[test]
    fn metric_examples() {
        let r = list(vec![10, 11, 12, 13, 14, 15]);
        let rel = RelevantSet::new(vec![10, 12]);
        assert_eq!(precision_at_k(&r, &rel, 5), 0.4);
        assert_eq!(precision_at_k(&r, &RelevantSet::default(), 5), 0.0);
        assert_eq!(recall_at_k(&r, &rel, 10).unwrap(), 1.0);
        assert_eq!(recall_at_k(&r, &RelevantSet::new(vec![99]), 5).unwrap(), 0.0);
        assert_eq!(recall_at_k(&r, &RelevantSet::default(), 5), Err(Error::EmptyRelevant));
        assert_eq!(average_precision(&list(vec![1, 2, 3]), &RelevantSet::new(vec![1, 2])).unwrap(), 1.0);
        assert_eq!(average_precision(&list(vec![0, 1, 2, 7]), &RelevantSet::new(vec![7])).unwrap(), 0.25);
        assert_eq!(reciprocal_rank(&r, &rel).unwrap(), 1.0);
        assert_eq!(reciprocal_rank(&r, &RelevantSet::new(vec![12])).unwrap(), 1.0 / 3.0);
        assert_eq!(reciprocal_rank(&r, &RelevantSet::new(vec![77])).unwrap(), 0.0);
        assert_eq!(ndcg(&list(vec![4, 5, 1]), &RelevantSet::new(vec![4, 5])).unwrap(), 1.0);
        let v = ndcg(&list(vec![1, 0, 2]), &RelevantSet::new(vec![1, 2])).unwrap();
        let want = 1.5 / (1.0 + 1.0 / libm::log2(3.0));
        assert!((v - want).abs() < 1e-15);
    }

    #[test]
    fn two_user_fixture() {
        // 2 users, 6 items. user 0 trains on {0}, tests {1, 4}; user 1 trains on {2}, tests {5}.
        let train = InteractionMatrix::from_pairs(3, 6, vec![(0, 0), (1, 2)]).unwrap();
        let split = SplitPair { train, test: vec![(0, 1), (0, 4), (1, 5)], seed: 0, ratio: 0.5 };
        let scores = [vec![9.0, 5.0, 4.0, 3.0, 2.0, 1.0], vec![0.0, 0.1, 0.9, 0.2, 0.3, 0.25]];
        let rep = evaluate_model(|u| Ok(scores[u].clone()), &split).unwrap();
        // user 0 ranks [1,2,3,4,5]; hits at 1 and 4.
        // user 1 ranks [4,5,3,1,0]; hit at 2.
        let log2 = |x: f64| libm::log2(x);
        let u0 = MetricSet {
            p5: 0.4,
            p10: 0.2,
            r5: 1.0,
            r10: 1.0,
            map: (1.0 + 2.0 / 4.0) / 2.0,
            mrr: 1.0,
            ndcg: (1.0 + 1.0 / log2(5.0)) / (1.0 + 1.0 / log2(3.0)),
        };
        let u1 = MetricSet { p5: 0.2, p10: 0.1, r5: 1.0, r10: 1.0, map: 0.5, mrr: 0.5, ndcg: 1.0 / log2(3.0) };
        let a = u0.to_array();
        let b = u1.to_array();
        for c in 0..7 {
            assert!((rep.aggregate.to_array()[c] - (a[c] + b[c]) / 2.0).abs() < 1e-15, "column {c}");
        }
        assert_eq!(rep.evaluated_users, 2);
        assert_eq!(rep.skipped_users, 1);
        assert!(evaluate_model(|_| Ok(vec![0.0; 3]), &split).is_err());
    }
}
