//! Synthetic rating logs shared by the harness tests.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use neurec::neurec_core::rng::{self, RngExt};

/// Writes a `user item rating` log with two taste communities and some noise, and
/// returns its path.
pub fn write_log(dir: &Path, users: usize, items: usize, seed: u64) -> PathBuf {
    let mut r = rng::seeded(seed);
    let mut text = String::new();
    for u in 0..users {
        for i in 0..items {
            let same_side = (u % 2 == 0) == (i < items / 2);
            let p = if same_side { 0.45 } else { 0.05 };
            if r.gen_bool(p) {
                writeln!(text, "user{u} item{i} {}", r.gen_range(1..=5)).unwrap();
            }
        }
    }
    let path = dir.join("ratings.txt");
    fs::write(&path, text).unwrap();
    path
}

/// Overrides for a quick experiment on `dataset`.
pub fn quick_overrides(dataset: &Path, output: &Path, model: &str) -> Vec<String> {
    [
        ("dataset", dataset.to_str().unwrap()),
        ("output", output.to_str().unwrap()),
        ("model", model),
        ("depth", "2"),
        ("width", "12"),
        ("k", "4"),
        ("epochs", "6"),
        ("learning_rate", "0.01"),
        ("batch_size", "8"),
        ("seeds", "1,2"),
        ("slim_sweeps", "5"),
    ]
    .iter()
    .flat_map(|(k, v)| [format!("--{k}"), v.to_string()])
    .collect()
}
