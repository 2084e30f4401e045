#![allow(dead_code)]

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::RngExt;
use ranker_core::rng::rng_from_seed;

pub fn ranker<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_ranker"))
        .args(args)
        .env_remove("RANKER_SEED")
        .output()
        .expect("ranker binary runs")
}

/// Runs `ranker` and panics with its stderr on failure.
pub fn ranker_ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = ranker(args);
    assert!(
        out.status.success(),
        "ranker failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn p(path: &Path) -> String {
    path.display().to_string()
}

/// Writes a LETOR file of `n_queries` queries whose first feature tracks
/// the grade.
pub fn write_learnable(path: &Path, seed: u64, n_queries: u64, qid_offset: u64) {
    let mut rng = rng_from_seed(seed);
    let mut text = String::new();
    for q in 0..n_queries {
        for _ in 0..10 {
            let grade: u32 = rng.random_range(0..=2);
            let x = f64::from(grade) + rng.random_range(-0.6..0.6);
            let y: f64 = rng.random_range(-1.0..1.0);
            text.push_str(&format!("{grade} qid:{} 1:{x} 2:{y} 3:{}\n", q + qid_offset, x * y));
        }
    }
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).unwrap();
    }
    fs::write(path, text).unwrap();
}

/// `Fold1..FoldN` with disjoint query ids.
pub fn write_folds(root: &Path, n: u64) {
    for i in 0..n {
        let dir = root.join(format!("Fold{}", i + 1));
        write_learnable(&dir.join("train.txt"), 10 + i, 8, 1000 * i);
        write_learnable(&dir.join("test.txt"), 20 + i, 4, 1000 * i + 500);
    }
}

pub const SMALL_SYNTH: [&str; 8] = [
    "--set",
    "n_classes=3",
    "--set",
    "n_features=5",
    "--set",
    "train_size=300",
    "--set",
    "test_size=60",
];
