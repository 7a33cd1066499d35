//! SLIM: `min ‖X - XS‖²_F + λ‖S‖²_F + μ‖S‖₁` subject to `S ≥ 0`, `diag(S) = 0`.
//!
//! Columns of `S` decouple. Column `j` minimizes
//! `G_jj - 2 sᵀG_j + sᵀG s + λ‖s‖² + μ Σ s` with `G = XᵀX`, which cyclic coordinate
//! descent solves with the closed-form update `s_i = max(0, (ρ - μ/2) / (G_ii + λ))`,
//! `ρ = G_ij - Σ_{l≠i} G_il s_l`. Starting from zero, any coordinate with `G_ij = 0` stays
//! at zero, so only co-occurring item pairs are visited.

use alloc::vec::Vec;

use super::ParameterCount;
use crate::data::InteractionMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlimConfig {
    /// λ
    pub l2: f64,
    /// μ
    pub l1: f64,
    pub max_sweeps: usize,
    /// Stop once no coordinate moved more than this during a sweep.
    pub tol: f64,
}

impl Default for SlimConfig {
    fn default() -> Self {
        Self { l2: 0.1, l1: 0.1, max_sweeps: 50, tol: 1e-6 }
    }
}

impl SlimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2 >= 0.0 && self.l2.is_finite() && self.l1 >= 0.0 && self.l1.is_finite()) {
            return Err(Error::InvalidConfig("SLIM l2 and l1 must be finite and non-negative".into()));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig("SLIM tol must be non-negative".into()));
        }
        Ok(())
    }
}

/// Coordinate-descent state for every column of `S`.
#[derive(Debug, Clone)]
pub struct SlimSolver {
    config: SlimConfig,
    /// Off-diagonal non-zeros of `G`, per column, ascending row index.
    gram: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    /// `S[:, j]` aligned with `gram[j]`.
    coef: Vec<Vec<f64>>,
    last_change: f64,
    sweeps: usize,
}

impl SlimSolver {
    pub fn new(train: &InteractionMatrix, config: SlimConfig) -> Result<Self> {
        config.validate()?;
        let n = train.num_items();
        let mut dense = alloc::vec![0.0f64; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut gram = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for j in 0..n {
            for &u in train.col(j) {
                for &i in train.row(u) {
                    if dense[i] == 0.0 {
                        touched.push(i);
                    }
                    dense[i] += 1.0;
                }
            }
            touched.sort_unstable();
            diag.push(dense[j]);
            gram.push(touched.iter().filter(|&&i| i != j).map(|&i| (i, dense[i])).collect::<Vec<_>>());
            for &i in &touched {
                dense[i] = 0.0;
            }
            touched.clear();
        }
        let coef = gram.iter().map(|g| alloc::vec![0.0; g.len()]).collect();
        Ok(Self { config, gram, diag, coef, last_change: f64::INFINITY, sweeps: 0 })
    }

    pub fn num_items(&self) -> usize {
        self.diag.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Largest coordinate change in the most recent sweep.
    pub fn last_change(&self) -> f64 {
        self.last_change
    }

    pub fn converged(&self) -> bool {
        self.last_change < self.config.tol
    }

    /// `q = G s` for column `j`, as a dense vector.
    fn gram_times(&self, j: usize, q: &mut [f64]) {
        q.iter_mut().for_each(|v| *v = 0.0);
        for (&(l, _), &s) in self.gram[j].iter().zip(&self.coef[j]) {
            if s != 0.0 {
                q[l] += self.diag[l] * s;
                for &(r, g) in &self.gram[l] {
                    q[r] += g * s;
                }
            }
        }
    }

    fn column_objective(&self, j: usize, q: &[f64]) -> f64 {
        let (l2, l1) = (self.config.l2, self.config.l1);
        let mut obj = self.diag[j];
        for (&(i, g), &s) in self.gram[j].iter().zip(&self.coef[j]) {
            obj += s * (q[i] - 2.0 * g + l2 * s + l1);
        }
        obj
    }

    /// Objective summed over all columns.
    pub fn objective(&self) -> f64 {
        let mut q = alloc::vec![0.0; self.num_items()];
        (0..self.num_items())
            .map(|j| {
                self.gram_times(j, &mut q);
                self.column_objective(j, &q)
            })
            .sum()
    }

    /// One cyclic pass over every free coordinate. Returns the objective afterwards.
    pub fn sweep(&mut self) -> f64 {
        let (l2, l1) = (self.config.l2, self.config.l1);
        let n = self.num_items();
        let mut q = alloc::vec![0.0; n];
        let mut total = 0.0;
        let mut max_change = 0.0f64;
        for j in 0..n {
            self.gram_times(j, &mut q);
            for idx in 0..self.gram[j].len() {
                let (i, g_ij) = self.gram[j][idx];
                let old = self.coef[j][idx];
                let g_ii = self.diag[i];
                let rho = g_ij - (q[i] - g_ii * old);
                let new = ((rho - 0.5 * l1) / (g_ii + l2)).max(0.0);
                let delta = new - old;
                if delta != 0.0 {
                    self.coef[j][idx] = new;
                    q[i] += g_ii * delta;
                    for &(r, g) in &self.gram[i] {
                        q[r] += g * delta;
                    }
                    max_change = max_change.max(delta.abs());
                }
            }
            total += self.column_objective(j, &q);
        }
        self.last_change = max_change;
        self.sweeps += 1;
        total
    }

    pub fn model(&self) -> SlimModel {
        let n = self.num_items();
        let mut rows: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); n];
        for j in 0..n {
            for (&(i, _), &s) in self.gram[j].iter().zip(&self.coef[j]) {
                if s > 0.0 {
                    rows[i].push((j, s));
                }
            }
        }
        SlimModel { n, l2: self.config.l2, l1: self.config.l1, rows }
    }
}

/// Runs coordinate-descent sweeps until the largest coordinate change drops below
/// `config.tol` or `config.max_sweeps` is reached.
pub fn train_slim(train: &InteractionMatrix, config: SlimConfig) -> Result<SlimModel> {
    let mut solver = SlimSolver::new(train, config)?;
    while solver.sweeps() < config.max_sweeps && !solver.converged() {
        solver.sweep();
    }
    Ok(solver.model())
}

/// Sparse non-negative `N x N` aggregation matrix with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SlimModel {
    n: usize,
    l2: f64,
    l1: f64,
    /// Row `l` lists `(i, S_li)` for the positive entries, ascending `i`.
    rows: Vec<Vec<(usize, f64)>>,
}

impl SlimModel {
    /// Builds a model from `(row, col, value)` triples; zeros are dropped.
    pub fn from_entries(n: usize, l2: f64, l1: f64, entries: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); n];
        for (r, c, v) in entries {
            if r >= n || c >= n {
                return Err(Error::IndexOutOfRange { what: "SLIM coefficient", index: r.max(c), bound: n });
            }
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(alloc::format!("SLIM coefficient ({r}, {c}) = {v} is not a finite non-negative value")));
            }
            if r == c && v != 0.0 {
                return Err(Error::InvalidConfig(alloc::format!("SLIM diagonal entry ({r}, {r}) must be zero")));
            }
            if v != 0.0 {
                rows[r].push((c, v));
            }
        }
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidConfig("duplicate SLIM coefficient".into()));
            }
        }
        Ok(Self { n, l2, l1, rows })
    }

    pub fn num_items(&self) -> usize {
        self.n
    }

    pub fn l2(&self) -> f64 {
        self.l2
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        match self.rows[row].binary_search_by_key(&col, |&(c, _)| c) {
            Ok(p) => self.rows[row][p].1,
            Err(_) => 0.0,
        }
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Positive entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    /// `X_u* S`.
    pub fn score_all(&self, train: &InteractionMatrix, u: usize) -> Result<Vec<f64>> {
        if train.num_items() != self.n {
            return Err(Error::DimensionMismatch { what: "SLIM items", expected: self.n, found: train.num_items() });
        }
        if u >= train.num_users() {
            return Err(Error::IndexOutOfRange { what: "user", index: u, bound: train.num_users() });
        }
        let mut scores = alloc::vec![0.0; self.n];
        for &l in train.row(u) {
            for &(i, v) in &self.rows[l] {
                scores[i] += v;
            }
        }
        Ok(scores)
    }
}

impl ParameterCount for SlimModel {
    /// `N²`: the dense aggregation matrix the method parameterizes.
    fn num_parameters(&self) -> usize {
        self.n * self.n
    }
}
