mod common;

use std::process::Command;

use common::{timeless, toy_grid, write_blobs, write_config};
use multiplicity_cli::{cell_seed, parse_config, read_store, run_experiment, stable_seed};
use multiplicity_core::filtering::FilterMode;
use multiplicity_core::Method;

#[test]
fn toy_grid_has_twelve_records_in_grid_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&toy_grid(dir.path(), "")).unwrap();
    assert_eq!(cfg.n_cells(), 12);
    let summary = run_experiment(&cfg, false).unwrap();
    assert_eq!(summary.n_records, 12);
    assert_eq!(summary.n_failed, 0);
    let records = read_store(&summary.store).unwrap();
    assert_eq!(records.len(), 12);

    let mut expected = Vec::new();
    for d in ["alpha", "beta"] {
        for b in [Method::None, Method::Oversample, Method::Smote] {
            for f in [FilterMode::None, FilterMode::CorrelationOnly] {
                expected.push((d.to_string(), b, f));
            }
        }
    }
    let got: Vec<_> = records.iter().map(|r| (r.dataset.clone(), r.balancing, r.filtering)).collect();
    assert_eq!(got, expected);

    for r in &records {
        let (d, o) = (r.discrepancy.unwrap(), r.obscurity.unwrap());
        assert!((0.0..=1.0).contains(&d) && (0.0..=1.0).contains(&o));
        assert!(o <= d + 1e-12);
        assert!((0.0..=1.0).contains(&r.auc_reference.unwrap()));
        assert_eq!(r.seed, cell_seed(11, &r.dataset, r.balancing, r.filtering, r.repeat));
        assert_eq!(r.validation_losses.len(), 6);
        let reference = r.reference_index.unwrap();
        assert!(r.member_indices.contains(&reference));
        assert_eq!(r.n_rashomon_members, Some(r.member_indices.len()));
        if r.is_baseline() {
            assert_eq!(r.performance_gain_vs_original, Some(0.0));
        }
    }
    // profiles are written for every dataset; two datasets are too few for three clusters
    assert!(dir.path().join("out/profiles/alpha.csv").exists());
    assert!(dir.path().join("out/profiles/beta.csv").exists());
    assert!(records.iter().all(|r| r.complexity_cluster.is_none()));
}

#[test]
fn reruns_and_worker_counts_give_identical_records() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let one = parse_config(&toy_grid(a.path(), "workers = 1")).unwrap();
    let three = parse_config(&toy_grid(b.path(), "workers = 3")).unwrap();
    let first = timeless(read_store(&run_experiment(&one, false).unwrap().store).unwrap());
    let second = timeless(read_store(&run_experiment(&three, false).unwrap().store).unwrap());
    let again = timeless(read_store(&run_experiment(&one, false).unwrap().store).unwrap());
    assert_eq!(first, second);
    assert_eq!(first, again);
}

#[test]
fn adding_cells_leaves_existing_cells_unchanged() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let small = parse_config(&toy_grid(a.path(), "")).unwrap();
    let mut big = parse_config(&toy_grid(b.path(), "")).unwrap();
    big.balancing.push(Method::Undersample);
    big.filtering.push(FilterMode::SignificanceOnly);
    let small_recs = timeless(read_store(&run_experiment(&small, false).unwrap().store).unwrap());
    let big_recs = timeless(read_store(&run_experiment(&big, false).unwrap().store).unwrap());
    assert_eq!(big_recs.len(), 2 * 4 * 3);
    for r in &small_recs {
        let twin = big_recs
            .iter()
            .find(|s| s.dataset == r.dataset && s.balancing == r.balancing && s.filtering == r.filtering)
            .unwrap();
        assert_eq!(r, twin);
    }
}

#[test]
fn failing_cells_are_tagged_and_the_grid_continues() {
    let dir = tempfile::tempdir().unwrap();
    // pure noise: the correlation filter keeps nothing, so those cells fail
    write_blobs(dir.path(), "noise", 5, 80, 20, 3, 0.0);
    write_blobs(dir.path(), "signal", 6, 80, 20, 3, 3.0);
    let path = write_config(
        dir.path(),
        r#"
balancing = ["oversample"]
filtering = ["cor"]
pool_size = 4
output_dir = "out"
[[datasets]]
name = "noise"
path = "noise.csv"
target = "class"
positive = "pos"
[[datasets]]
name = "signal"
path = "signal.csv"
target = "class"
positive = "pos"
"#,
    );
    let cfg = parse_config(&path).unwrap();
    let summary = run_experiment(&cfg, false).unwrap();
    let records = read_store(&summary.store).unwrap();
    assert_eq!(records.len(), 8);
    let failed: Vec<_> = records.iter().filter(|r| r.failed()).collect();
    assert_eq!(summary.n_failed, failed.len());
    assert_eq!(failed.len(), 2);
    for r in &failed {
        assert_eq!((r.dataset.as_str(), r.filtering), ("noise", FilterMode::CorrelationOnly));
        assert!(r.error.as_deref().unwrap().contains("no feature survived"));
        assert!(r.discrepancy.is_none() && r.performance_gain_vs_original.is_none());
    }
    assert!(records.iter().filter(|r| !r.failed()).all(|r| r.discrepancy.is_some()));

    let status = Command::new(env!("CARGO_BIN_EXE_multiplicity"))
        .args(["experiment", "run"])
        .arg(&path)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn resume_keeps_finished_groups() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(&toy_grid(dir.path(), "")).unwrap();
    let store = run_experiment(&cfg, false).unwrap().store;
    let full = read_store(&store).unwrap();
    // drop the second group as if the run had stopped half way
    let lines: Vec<String> = std::fs::read_to_string(&store).unwrap().lines().take(6).map(String::from).collect();
    std::fs::write(&store, lines.join("\n") + "\n").unwrap();
    let summary = run_experiment(&cfg, true).unwrap();
    assert_eq!(summary.n_records, 12);
    assert_eq!(timeless(read_store(&store).unwrap()), timeless(full));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_multiplicity");
    let bad = write_config(dir.path(), "epsilonn = 0.1\n");
    let out = Command::new(bin).args(["experiment", "run"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    let missing = write_config(dir.path(), "[[datasets]]\npath = \"nowhere.csv\"\ntarget = \"class\"\n");
    let out = Command::new(bin).args(["experiment", "run"]).arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let good = toy_grid(dir.path(), "");
    let out = Command::new(bin).args(["experiment", "run"]).arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seeds_are_stable_string_hashes() {
    assert_eq!(stable_seed(&["a", "b"]), stable_seed(&["a", "b"]));
    assert_ne!(stable_seed(&["a", "b"]), stable_seed(&["ab"]));
    assert_ne!(cell_seed(1, "d", Method::Smote, FilterMode::None, 0), cell_seed(1, "d", Method::Smote, FilterMode::None, 1));
}
