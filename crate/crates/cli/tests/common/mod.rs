#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use multiplicity_cli::ResultRecord;
use multiplicity_core::seeded_rng;
use rand::Rng;

/// Two shifted blobs written as CSV with a `class` column (`pos`/`neg`).
/// Column 0 carries the shift; the rest are noise.
pub fn write_blobs(dir: &Path, name: &str, seed: u64, n_major: usize, n_minor: usize, p: usize, shift: f64) -> PathBuf {
    let mut rng = seeded_rng(seed);
    let mut text = String::new();
    let header: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
    writeln!(text, "{},class", header.join(",")).unwrap();
    for i in 0..n_major + n_minor {
        let positive = i >= n_major;
        let row: Vec<String> = (0..p)
            .map(|j| {
                let u: f64 = (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0;
                let v = u + if positive && j == 0 { shift } else { 0.0 };
                format!("{v:.6}")
            })
            .collect();
        writeln!(text, "{},{}", row.join(","), if positive { "pos" } else { "neg" }).unwrap();
    }
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, text).unwrap();
    path
}

pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

/// Records with the timing field cleared, for rerun comparisons.
pub fn timeless(mut records: Vec<ResultRecord>) -> Vec<ResultRecord> {
    for r in &mut records {
        r.wall_time = 0.0;
    }
    records
}

/// A small two-dataset grid: 2 x (2 + none) x (1 + none) x 1 = 12 cells.
pub fn toy_grid(dir: &Path, extra: &str) -> PathBuf {
    write_blobs(dir, "alpha", 1, 90, 30, 4, 1.5);
    write_blobs(dir, "beta", 2, 100, 25, 3, 2.0);
    let body = format!(
        r#"
master_seed = 11
repeats = 1
balancing = ["oversample", "smote"]
filtering = ["cor"]
pool_size = 6
output_dir = "out"
{extra}

[[datasets]]
name = "alpha"
path = "alpha.csv"
target = "class"
positive = "pos"

[[datasets]]
name = "beta"
path = "beta.csv"
target = "class"
positive = "pos"
"#
    );
    write_config(dir, &body)
}
