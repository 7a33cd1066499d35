//! Rank-aware negative sampling.

use alloc::vec::Vec;

use rand::Rng as _;

use crate::data::InteractionMatrix;
use crate::rng::Rng;
use crate::{Error, Result};

/// Maps the `rank`-th unobserved item (0-based) of a user to its item index.
/// `positives` must be sorted ascending.
fn nth_unobserved(positives: &[usize], rank: usize) -> usize {
    let mut item = rank;
    for &p in positives {
        if p <= item {
            item += 1;
        } else {
            break;
        }
    }
    item
}

/// Draws `t` distinct unobserved items of user `u` uniformly without replacement, or all of
/// them when fewer than `t` exist. Returned in ascending item order.
pub fn sample_candidates(train: &InteractionMatrix, u: usize, t: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    if u >= train.num_users() {
        return Err(Error::IndexOutOfRange { what: "user", index: u, bound: train.num_users() });
    }
    let positives = train.row(u);
    let available = train.num_items() - positives.len();
    if available == 0 {
        return Err(Error::NoNegatives { user: u });
    }
    let mut ranks: Vec<usize> = if t >= available {
        (0..available).collect()
    } else {
        // Floyd's algorithm: t distinct values from 0..available.
        let mut chosen: Vec<usize> = Vec::with_capacity(t);
        for j in available - t..available {
            let x = rng.gen_range(0..=j);
            if chosen.contains(&x) {
                chosen.push(j);
            } else {
                chosen.push(x);
            }
        }
        chosen
    };
    ranks.sort_unstable();
    Ok(ranks.into_iter().map(|r| nth_unobserved(positives, r)).collect())
}

/// Samples a pool of `t` unobserved items and returns the one `score` ranks highest
/// (ties go to the smaller item index).
pub fn sample_negative<F>(train: &InteractionMatrix, u: usize, t: usize, rng: &mut Rng, mut score: F) -> Result<usize>
where
    F: FnMut(usize) -> f64,
{
    if t == 0 {
        return Err(Error::InvalidConfig("negative pool size must be at least 1".into()));
    }
    let pool = sample_candidates(train, u, t, rng)?;
    if pool.len() == 1 {
        return Ok(pool[0]);
    }
    let mut best = pool[0];
    let mut best_score = score(best);
    for &j in &pool[1..] {
        let s = score(j);
        if s > best_score {
            best = j;
            best_score = s;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use alloc::vec;

    #[test]
    fn nth_unobserved_skips_positives() {
        let pos = [0, 2, 3, 7];
        let all: Vec<usize> = (0..6).map(|r| nth_unobserved(&pos, r)).collect();
        assert_eq!(all, vec![1, 4, 5, 6, 8, 9]);
    }

    #[test]
    fn pool_is_distinct_and_unobserved() {
        let m = InteractionMatrix::from_pairs(2, 20, vec![(0, 1), (0, 5), (0, 19), (1, 3)]).unwrap();
        let mut rng = rng::seeded(4);
        for t in [1, 3, 10, 17, 40] {
            let pool = sample_candidates(&m, 0, t, &mut rng).unwrap();
            assert_eq!(pool.len(), t.min(17));
            assert!(pool.windows(2).all(|w| w[0] < w[1]));
            assert!(pool.iter().all(|&i| !m.contains(0, i) && i < 20));
        }
    }

    #[test]
    fn full_pool_returns_global_argmax() {
        let m = InteractionMatrix::from_pairs(1, 6, vec![(0, 4)]).unwrap();
        let scores = [0.3, 0.1, 0.2, 0.0, 9.0, 0.25];
        let mut rng = rng::seeded(1);
        assert_eq!(sample_negative(&m, 0, 100, &mut rng, |j| scores[j]).unwrap(), 0);
    }

    #[test]
    fn user_with_everything_observed_errors() {
        let m = InteractionMatrix::from_pairs(1, 2, vec![(0, 0), (0, 1)]).unwrap();
        let mut rng = rng::seeded(1);
        assert_eq!(sample_negative(&m, 0, 3, &mut rng, |_| 0.0), Err(Error::NoNegatives { user: 0 }));
    }

    #[test]
    fn single_candidate_is_uniform() {
        let m = InteractionMatrix::from_pairs(1, 5, vec![(0, 2)]).unwrap();
        let mut rng = rng::seeded(8);
        let mut counts = [0usize; 5];
        let n = 8000;
        for _ in 0..n {
            counts[sample_negative(&m, 0, 1, &mut rng, |_| 0.0).unwrap()] += 1;
        }
        assert_eq!(counts[2], 0);
        for (i, &c) in counts.iter().enumerate() {
            if i != 2 {
                // expected 2000, sd ≈ 38.7
                assert!((c as f64 - 2000.0).abs() < 4.0 * 38.8, "item {i}: {c}");
            }
        }
    }
}
