//! Implicit-feedback interaction data: raw records, dense id maps, the binary
//! user-item matrix and seeded train/test splits.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::rng;
use crate::{Error, Result};

/// One parsed line of an interaction log.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RawRecord {
    pub user: String,
    pub item: String,
    pub rating: f64,
    pub timestamp: Option<i64>,
}

/// Interaction log in file order. Duplicate (user, item) pairs are allowed here.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawInteractions {
    pub records: Vec<RawRecord>,
}

impl RawInteractions {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Bijection between external ids and dense indices, assigned in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdMap {
    users: Vec<String>,
    items: Vec<String>,
    user_index: BTreeMap<String, usize>,
    item_index: BTreeMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a map from index-ordered external ids. Fails on duplicates.
    pub fn from_ids(users: Vec<String>, items: Vec<String>) -> Result<Self> {
        let mut map = IdMap::new();
        for u in users {
            let before = map.users.len();
            if map.intern_user(&u) != before {
                return Err(Error::InvalidConfig(alloc::format!("duplicate user id `{u}`")));
            }
        }
        for i in items {
            let before = map.items.len();
            if map.intern_item(&i) != before {
                return Err(Error::InvalidConfig(alloc::format!("duplicate item id `{i}`")));
            }
        }
        Ok(map)
    }

    pub fn intern_user(&mut self, id: &str) -> usize {
        intern(&mut self.users, &mut self.user_index, id)
    }

    pub fn intern_item(&mut self, id: &str) -> usize {
        intern(&mut self.items, &mut self.item_index, id)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn user_index(&self, id: &str) -> Option<usize> {
        self.user_index.get(id).copied()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_index.get(id).copied()
    }

    pub fn user_id(&self, index: usize) -> Option<&str> {
        self.users.get(index).map(String::as_str)
    }

    pub fn item_id(&self, index: usize) -> Option<&str> {
        self.items.get(index).map(String::as_str)
    }

    pub fn user_ids(&self) -> &[String] {
        &self.users
    }

    pub fn item_ids(&self) -> &[String] {
        &self.items
    }
}

fn intern(forward: &mut Vec<String>, index: &mut BTreeMap<String, usize>, id: &str) -> usize {
    if let Some(&i) = index.get(id) {
        return i;
    }
    let i = forward.len();
    forward.push(String::from(id));
    index.insert(String::from(id), i);
    i
}

/// Sparse binary `M x N` matrix with both row (CSR) and column (CSC) access.
///
/// Row and column index lists are sorted ascending and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionMatrix {
    num_users: usize,
    num_items: usize,
    row_ptr: Vec<usize>,
    row_items: Vec<usize>,
    col_ptr: Vec<usize>,
    col_users: Vec<usize>,
}

impl InteractionMatrix {
    /// Builds the matrix from `(user, item)` pairs. Duplicates collapse to one entry.
    pub fn from_pairs(
        num_users: usize,
        num_items: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut entries: Vec<(usize, usize)> = Vec::new();
        for (u, i) in pairs {
            if u >= num_users {
                return Err(Error::IndexOutOfRange { what: "user", index: u, bound: num_users });
            }
            if i >= num_items {
                return Err(Error::IndexOutOfRange { what: "item", index: i, bound: num_items });
            }
            entries.push((u, i));
        }
        entries.sort_unstable();
        entries.dedup();

        let mut row_ptr = alloc::vec![0usize; num_users + 1];
        let mut col_count = alloc::vec![0usize; num_items + 1];
        for &(u, i) in &entries {
            row_ptr[u + 1] += 1;
            col_count[i + 1] += 1;
        }
        for u in 0..num_users {
            row_ptr[u + 1] += row_ptr[u];
        }
        for i in 0..num_items {
            col_count[i + 1] += col_count[i];
        }
        let col_ptr = col_count.clone();
        let row_items: Vec<usize> = entries.iter().map(|&(_, i)| i).collect();
        // Entries are sorted by (user, item), so filling columns in this order keeps
        // every column's user list sorted.
        let mut col_users = alloc::vec![0usize; entries.len()];
        let mut cursor = col_count;
        for &(u, i) in &entries {
            col_users[cursor[i]] = u;
            cursor[i] += 1;
        }
        Ok(Self { num_users, num_items, row_ptr, row_items, col_ptr, col_users })
    }

    pub fn empty(num_users: usize, num_items: usize) -> Self {
        Self::from_pairs(num_users, num_items, core::iter::empty()).expect("no entries")
    }

    /// M
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    /// N
    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn nnz(&self) -> usize {
        self.row_items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_items.is_empty()
    }

    /// Observed items of user `u`, ascending.
    pub fn row(&self, u: usize) -> &[usize] {
        &self.row_items[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    /// Users who interacted with item `i`, ascending.
    pub fn col(&self, i: usize) -> &[usize] {
        &self.col_users[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    pub fn contains(&self, u: usize, i: usize) -> bool {
        u < self.num_users && self.row(u).binary_search(&i).is_ok()
    }

    /// Dense `X_u*`.
    pub fn row_view(&self, u: usize) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.num_items];
        for &i in self.row(u) {
            v[i] = 1.0;
        }
        v
    }

    /// Dense `X_*i`.
    pub fn column_view(&self, i: usize) -> Vec<f64> {
        let mut v = alloc::vec![0.0; self.num_users];
        for &u in self.col(i) {
            v[u] = 1.0;
        }
        v
    }

    /// All `(user, item)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_users).flat_map(move |u| self.row(u).iter().map(move |&i| (u, i)))
    }

    pub fn transpose(&self) -> InteractionMatrix {
        InteractionMatrix {
            num_users: self.num_items,
            num_items: self.num_users,
            row_ptr: self.col_ptr.clone(),
            row_items: self.col_users.clone(),
            col_ptr: self.row_ptr.clone(),
            col_users: self.row_items.clone(),
        }
    }

    /// Number of users interacting with each item.
    pub fn column_counts(&self) -> Vec<usize> {
        (0..self.num_items).map(|i| self.col_ptr[i + 1] - self.col_ptr[i]).collect()
    }
}

/// Binarizes a raw log: every distinct (user, item) pair becomes a 1-entry,
/// whatever its rating. Ids are indexed in first-seen order.
pub fn build_matrix(raw: &RawInteractions) -> Result<(InteractionMatrix, IdMap)> {
    if raw.is_empty() {
        return Err(Error::Empty);
    }
    let mut ids = IdMap::new();
    let mut pairs = Vec::with_capacity(raw.len());
    for r in &raw.records {
        let u = ids.intern_user(&r.user);
        let i = ids.intern_item(&r.item);
        pairs.push((u, i));
    }
    let matrix = InteractionMatrix::from_pairs(ids.num_users(), ids.num_items(), pairs)?;
    Ok((matrix, ids))
}

/// How held-out pairs are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SplitMode {
    /// Uniform partition of the global pair set.
    #[default]
    Global,
    /// Each user's pairs are partitioned separately.
    PerUser,
}

/// Disjoint train/test partition of one interaction matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitPair {
    pub train: InteractionMatrix,
    /// Held-out pairs, sorted by (user, item).
    pub test: Vec<(usize, usize)>,
    pub seed: u64,
    pub ratio: f64,
}

impl SplitPair {
    pub fn num_users(&self) -> usize {
        self.train.num_users()
    }

    pub fn num_items(&self) -> usize {
        self.train.num_items()
    }

    /// Test items grouped per user (each list ascending).
    pub fn test_by_user(&self) -> Vec<Vec<usize>> {
        let mut out = alloc::vec![Vec::new(); self.num_users()];
        for &(u, i) in &self.test {
            out[u].push(i);
        }
        out
    }

    /// Union of train and test, i.e. the matrix that was split.
    pub fn source(&self) -> InteractionMatrix {
        InteractionMatrix::from_pairs(
            self.num_users(),
            self.num_items(),
            self.train.entries().chain(self.test.iter().copied()),
        )
        .expect("split indices are in range")
    }
}

fn held_out_count(total: usize, ratio: f64) -> usize {
    let n = libm::round((1.0 - ratio) * total as f64) as usize;
    n.min(total)
}

/// Seeded random train/test split keeping `ratio` of the pairs for training.
pub fn split_holdout(matrix: &InteractionMatrix, ratio: f64, seed: u64) -> Result<SplitPair> {
    split_holdout_with(matrix, ratio, seed, SplitMode::Global)
}

pub fn split_holdout_with(
    matrix: &InteractionMatrix,
    ratio: f64,
    seed: u64,
    mode: SplitMode,
) -> Result<SplitPair> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    if matrix.is_empty() {
        return Err(Error::Empty);
    }
    let mut rng = rng::seeded(seed);
    let mut train_pairs = Vec::with_capacity(matrix.nnz());
    let mut test = Vec::new();
    match mode {
        SplitMode::Global => {
            let mut entries: Vec<(usize, usize)> = matrix.entries().collect();
            entries.shuffle(&mut rng);
            let n_test = held_out_count(entries.len(), ratio);
            test.extend_from_slice(&entries[..n_test]);
            train_pairs.extend_from_slice(&entries[n_test..]);
        }
        SplitMode::PerUser => {
            for u in 0..matrix.num_users() {
                let mut items: Vec<usize> = matrix.row(u).to_vec();
                items.shuffle(&mut rng);
                let n_test = held_out_count(items.len(), ratio);
                test.extend(items[..n_test].iter().map(|&i| (u, i)));
                train_pairs.extend(items[n_test..].iter().map(|&i| (u, i)));
            }
        }
    }
    test.sort_unstable();
    let train = InteractionMatrix::from_pairs(matrix.num_users(), matrix.num_items(), train_pairs)?;
    Ok(SplitPair { train, test, seed, ratio })
}
