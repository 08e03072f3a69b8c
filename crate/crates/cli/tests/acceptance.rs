//! Acceptance suite: one test per criterion, each printing a single
//! `criterion N: PASS|FAIL ...` line to stderr (uncaptured) before asserting.
//!
//! The desk grid behind criteria 3, 6, 7 and 8 runs once per process and is
//! shared. Extra fixture datasets (qsar-biodeg, abalone, steel_plates_fault)
//! are picked up from the directory named by `MULTIPLICITY_EXTRA_DATA` when set;
//! each file is `<name>.csv` with the label in the last column.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use multiplicity_cli::report::{rq6_table, CorrelationUnit};
use multiplicity_cli::{parse_config_str, read_store, run_experiment, ExperimentConfig, ResultRecord};
use multiplicity_core::filtering::{bh_adjust, wilcoxon_rank_sum};
use multiplicity_core::stats::{dunn_posthoc, kruskal_wallis, mid_ranks, spearman, PAdjust};
use multiplicity_core::{
    balance, class_stats, complexity_profile, discrepancy, load_csv, obscurity, seeded_rng, BalanceSpec,
    ComplexityOptions, ComplexityProfile, Dataset, Method, PredictionMatrix, Provenance,
};
use rand::seq::SliceRandom;
use rand::Rng;

fn verdict(criterion: usize, pass: bool, detail: &str) {
    let line = format!("criterion {criterion}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    // written straight to the handle so the test harness does not capture it
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

// ---------------------------------------------------------------- criterion 1

/// Reference values from the appendix tables.
struct Fixture {
    name: &'static str,
    t2: f64,
    t3: f64,
    t4: f64,
    l1: f64,
    l2: f64,
    l3: f64,
    f2: f64,
    n1: f64,
    n2: f64,
    n3: f64,
    lsc: f64,
}

const FIXTURES: [Fixture; 5] = [
    Fixture { name: "spambase", t2: 0.0124, t3: 0.0004, t4: 0.0351, l1: 0.2591, l2: 0.1051, l3: 0.0875, f2: 2.5331e-33, n1: 0.1614, n2: 0.2714, n3: 0.0873, lsc: 0.9939 },
    Fixture { name: "phoneme", t2: 0.0009, t3: 0.0009, t4: 1.0000, l1: 0.3188, l2: 0.1560, l3: 0.1422, f2: 0.2708, n1: 0.1952, n2: 0.2462, n3: 0.0906, lsc: 0.9805 },
    Fixture { name: "qsar-biodeg", t2: 0.0388, t3: 0.0066, t4: 0.1707, l1: 0.2735, l2: 0.1127, l3: 0.0982, f2: 0.0001, n1: 0.2729, n2: 0.3514, n3: 0.1696, lsc: 0.9896 },
    Fixture { name: "abalone", t2: 0.0019, t3: 0.0005, t4: 0.2500, l1: 0.1681, l2: 0.0772, l3: 0.0763, f2: 0.0021, n1: 0.1984, n2: 0.3443, n3: 0.1448, lsc: 0.9842 },
    Fixture { name: "steel_plates_fault", t2: 0.0170, t3: 0.0005, t4: 0.0303, l1: 0.0, l2: 0.0, l3: 0.0, f2: 0.0, n1: 0.0453, n2: 0.2520, n3: 0.0092, lsc: 0.9718 },
];

const DIM_REL_TOL: f64 = 0.05;
const NEIGHBOR_REL_TOL: f64 = 0.10;
const LINEAR_ABS_TOL: f64 = 0.05;
/// Steel plates must come out linearly separable.
const STEEL_LINEAR_MAX: f64 = 0.01;
const PROFILE_TIME_LIMIT: Duration = Duration::from_secs(300);
/// Table entries print 4 decimals; a printed 0.0000 means below this.
const TABLE_ZERO: f64 = 5e-5;

fn load_last_column(path: &Path) -> Dataset {
    let header = std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string();
    let target = header.rsplit(',').next().unwrap().trim().trim_matches('"').to_string();
    load_csv(path, &target, None).unwrap()
}

fn fixture_path(name: &str) -> Option<PathBuf> {
    let local = data_dir().join(format!("{name}.csv"));
    if local.exists() {
        return Some(local);
    }
    let extra = PathBuf::from(std::env::var_os("MULTIPLICITY_EXTRA_DATA")?).join(format!("{name}.csv"));
    extra.exists().then_some(extra)
}

fn within_orders(ours: f64, reference: f64) -> bool {
    if reference < TABLE_ZERO && ours < TABLE_ZERO {
        return true;
    }
    if ours <= 0.0 || reference <= 0.0 {
        return false;
    }
    (ours / reference).log10().abs() <= 1.0
}

fn check_fixture(fx: &Fixture, p: &ComplexityProfile, failures: &mut Vec<String>) {
    let get = |v: Option<f64>, m: &str| v.unwrap_or_else(|| panic!("{} {m} is NA", fx.name));
    let mut rel = |m: &str, ours: f64, reference: f64, tol: f64| {
        let err = (ours - reference).abs() / reference.abs().max(1e-12);
        // references carry 4 decimals, so allow half a unit in the last place
        if (ours - reference).abs() > tol * reference.abs() + TABLE_ZERO {
            failures.push(format!("{} {m} {ours:.4} vs {reference:.4} ({:.1}% off)", fx.name, 100.0 * err));
        }
    };
    rel("t2", get(p.t2, "t2"), fx.t2, DIM_REL_TOL);
    rel("t3", get(p.t3, "t3"), fx.t3, DIM_REL_TOL);
    rel("t4", get(p.t4, "t4"), fx.t4, DIM_REL_TOL);
    rel("n1", get(p.n1, "n1"), fx.n1, NEIGHBOR_REL_TOL);
    rel("n2", get(p.n2, "n2"), fx.n2, NEIGHBOR_REL_TOL);
    rel("n3", get(p.n3, "n3"), fx.n3, NEIGHBOR_REL_TOL);
    rel("lsc", get(p.lsc, "lsc"), fx.lsc, NEIGHBOR_REL_TOL);
    let f2 = get(p.f2, "f2");
    if !within_orders(f2, fx.f2) {
        failures.push(format!("{} f2 {f2:.3e} vs {:.3e} (more than one order of magnitude)", fx.name, fx.f2));
    }
    for (m, ours, reference) in [("l1", p.l1, fx.l1), ("l2", p.l2, fx.l2), ("l3", p.l3, fx.l3)] {
        let ours = get(ours, m);
        let ok = if fx.name == "steel_plates_fault" {
            ours <= STEEL_LINEAR_MAX
        } else {
            (ours - reference).abs() <= LINEAR_ABS_TOL
        };
        if !ok {
            failures.push(format!("{} {m} {ours:.4} vs {reference:.4} (abs diff {:.4})", fx.name, (ours - reference).abs()));
        }
    }
}

#[test]
fn criterion_1_complexity_fixtures() {
    let mut failures = Vec::new();
    let mut evaluated = Vec::new();
    let mut skipped = Vec::new();
    for fx in &FIXTURES {
        let Some(path) = fixture_path(fx.name) else {
            skipped.push(fx.name);
            continue;
        };
        let ds = load_last_column(&path);
        let started = Instant::now();
        let profile = complexity_profile(&ds, 0, &ComplexityOptions::default()).unwrap();
        let took = started.elapsed();
        if took > PROFILE_TIME_LIMIT {
            failures.push(format!("{} profile took {took:?}", fx.name));
        }
        check_fixture(fx, &profile, &mut failures);
        evaluated.push(format!("{} ({:.1}s)", fx.name, took.as_secs_f64()));
    }
    assert!(!evaluated.is_empty(), "no fixture dataset available");
    let detail = format!(
        "evaluated [{}]; not supplied [{}]; {} deviations{}{}",
        evaluated.join(", "),
        skipped.join(", "),
        failures.len(),
        if failures.is_empty() { "" } else { ": " },
        failures.join("; ")
    );
    verdict(1, failures.is_empty(), &detail);
    assert!(failures.is_empty(), "{detail}");
}

// ---------------------------------------------------------------- criterion 2

fn oracle(columns: &[Vec<u8>], reference: usize) -> (f64, f64) {
    let n = columns[0].len();
    let m = columns.len();
    let mut disc: f64 = 0.0;
    for (j, col) in columns.iter().enumerate() {
        if j == reference {
            continue;
        }
        let mut differ = 0;
        for i in 0..n {
            if col[i] != columns[reference][i] {
                differ += 1;
            }
        }
        disc = disc.max(differ as f64 / n as f64);
    }
    let mut total = 0.0;
    for i in 0..n {
        let mut conflicts = 0;
        for (j, col) in columns.iter().enumerate() {
            if j != reference && col[i] != columns[reference][i] {
                conflicts += 1;
            }
        }
        total += if m > 1 { conflicts as f64 / (m - 1) as f64 } else { 0.0 };
    }
    (disc, total / n as f64)
}

#[test]
fn criterion_2_oracle_equivalence() {
    let mut rng = seeded_rng(20);
    let mut mismatches = 0;
    let mut order_violations = 0;
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=20);
        let m = rng.gen_range(1..=10);
        let bias: f64 = rng.gen();
        let columns: Vec<Vec<u8>> =
            (0..m).map(|_| (0..n).map(|_| u8::from(rng.gen::<f64>() < bias)).collect()).collect();
        let reference = rng.gen_range(0..m);
        let pm = PredictionMatrix::from_columns(&columns, reference).unwrap();
        let (d, o) = (discrepancy(&pm), obscurity(&pm));
        let (od, oo) = oracle(&columns, reference);
        // the oracle averages per-row fractions; the library divides one count
        worst = worst.max((d - od).abs()).max((o - oo).abs());
        if d != od || (o - oo).abs() > 1e-12 {
            mismatches += 1;
        }
        if o > d {
            order_violations += 1;
        }
    }
    let pass = mismatches == 0 && order_violations == 0;
    verdict(
        2,
        pass,
        &format!("1000 matrices: {mismatches} mismatches (largest gap {worst:.1e}), {order_violations} with obscurity > discrepancy"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- desk grid

const GRID_DATASETS: [&str; 6] = ["yeast_me2", "kc1", "pc1", "phoneme", "spambase", "abalone_19"];
const GRID_REPEATS: usize = 2;
const GRID_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);
const EPSILON_LADDER: [f64; 4] = [0.0, 0.025, 0.05, 0.1];

fn grid_config(out: &Path) -> ExperimentConfig {
    let mut text = format!(
        r#"
master_seed = 2024
repeats = {GRID_REPEATS}
balancing = ["oversample", "undersample", "nearmiss", "smote", "adasyn", "blsmote", "dbsmote", "slsmote", "rslsmote", "ansmote"]
pool_size = 50
epsilon = 0.05
output_dir = "{}"
"#,
        out.display()
    );
    for d in GRID_DATASETS {
        text.push_str(&format!(
            "\n[[datasets]]\nname = \"{d}\"\npath = \"{}\"\ntarget = \"class\"\n",
            data_dir().join(format!("{d}.csv")).display()
        ));
    }
    parse_config_str(&text, Path::new(".")).unwrap()
}

struct GridRun {
    records: Vec<ResultRecord>,
    profiles: Vec<ComplexityProfile>,
    elapsed: Duration,
}

fn run_grid(tag: &str) -> GridRun {
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join(format!("acceptance_grid_{tag}"));
    let _ = std::fs::remove_dir_all(&out);
    let cfg = grid_config(&out);
    let started = Instant::now();
    let summary = run_experiment(&cfg, false).unwrap();
    let elapsed = started.elapsed();
    GridRun { records: read_store(&summary.store).unwrap(), profiles: summary.profiles, elapsed }
}

fn grid() -> &'static GridRun {
    static GRID: OnceLock<GridRun> = OnceLock::new();
    GRID.get_or_init(|| run_grid("a"))
}

// ---------------------------------------------------------------- criterion 3

#[test]
fn criterion_3_rashomon_set_properties() {
    let g = grid();
    let mut checked = 0;
    let mut problems = Vec::new();
    for r in g.records.iter().filter(|r| !r.failed()) {
        checked += 1;
        let tag = format!("{} {}/{} r{}", r.dataset, r.balancing, r.filtering, r.repeat);
        let losses = &r.validation_losses;
        let reference = r.reference_index.unwrap();
        let best = losses.iter().copied().fold(f64::INFINITY, f64::min);
        if losses[reference] != best {
            problems.push(format!("{tag}: reference is not a loss minimiser"));
        }
        if !r.member_indices.contains(&reference) {
            problems.push(format!("{tag}: reference not a member"));
        }
        if r.member_indices.iter().any(|&i| losses[i] > losses[reference] + r.epsilon) {
            problems.push(format!("{tag}: member outside the loss band"));
        }
        let counts: Vec<usize> = EPSILON_LADDER
            .iter()
            .map(|e| losses.iter().filter(|&&l| l <= losses[reference] + e).count())
            .collect();
        if counts.windows(2).any(|w| w[0] > w[1]) {
            problems.push(format!("{tag}: member counts {counts:?} not monotone"));
        }
        if counts[2] != r.member_indices.len() {
            problems.push(format!("{tag}: stored {} members, rule gives {}", r.member_indices.len(), counts[2]));
        }
    }
    let pass = problems.is_empty() && checked > 0;
    verdict(3, pass, &format!("{checked} cells checked at eps {EPSILON_LADDER:?}; {} problems {}", problems.len(), problems.join("; ")));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 4

fn imbalanced_blobs(seed: u64) -> Dataset {
    let mut rng = seeded_rng(seed);
    let (n_major, n_minor, p) = (200, 40, 4);
    let labels: Vec<u8> = (0..n_major + n_minor).map(|i| u8::from(i >= n_major)).collect();
    let x = ndarray_like(n_major + n_minor, p, |i, _| {
        let u: f64 = (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0;
        u + if labels[i] == 1 { 1.0 } else { 0.0 }
    });
    Dataset::from_parts("blobs", x, labels).unwrap()
}

fn ndarray_like(n: usize, p: usize, mut f: impl FnMut(usize, usize) -> f64) -> ndarray::Array2<f64> {
    let mut v = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            v.push(f(i, j));
        }
    }
    ndarray::Array2::from_shape_vec((n, p), v).unwrap()
}

fn in_parent_box(row: &[f64], a: &[f64], b: &[f64]) -> bool {
    row.iter().zip(a.iter().zip(b)).all(|(&v, (&x, &y))| v >= x.min(y) - 1e-12 && v <= x.max(y) + 1e-12)
}

#[test]
fn criterion_4_balancing_postconditions() {
    let data = imbalanced_blobs(4);
    let mut problems = Vec::new();
    let mut synthetic_checked = 0;
    for method in Method::ALL.into_iter().filter(|&m| m != Method::None) {
        let spec = BalanceSpec::new(method, 17);
        let out = match balance(&data, &spec) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("{method}: {e}"));
                continue;
            }
        };
        let s = class_stats(&out.data);
        let tolerance = 1.0 / s.n_minority.min(s.n_majority) as f64;
        if (s.ir - 1.0).abs() > tolerance + 1e-12 {
            problems.push(format!("{method}: IR {:.4} (maj {}, min {})", s.ir, s.n_majority, s.n_minority));
        }
        let row_of = |id: u64| data.row(data.row_ids.iter().position(|&r| r == id).unwrap());
        for (i, prov) in out.provenance.iter().enumerate() {
            if let Provenance::Synthetic { anchor, neighbor } = *prov {
                synthetic_checked += 1;
                if !in_parent_box(out.data.row(i), row_of(anchor), row_of(neighbor)) {
                    problems.push(format!("{method}: synthetic row {i} outside its parents' box"));
                }
            }
        }
        let again = balance(&data, &spec).unwrap();
        let same = again.data.features.iter().map(|v| v.to_bits()).eq(out.data.features.iter().map(|v| v.to_bits()))
            && again.data.labels == out.data.labels
            && again.provenance == out.provenance;
        if !same {
            problems.push(format!("{method}: same seed gave a different outcome"));
        }
    }
    let pass = problems.is_empty();
    verdict(4, pass, &format!("10 methods on 200/40; {synthetic_checked} synthetic rows box-checked; {}", if pass { "all reproducible".into() } else { problems.join("; ") }));
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 5

const PERMUTATIONS: usize = 100_000;
const APPROX_TOL: f64 = 0.01;

fn permutation_rank_sum_p(x0: &[f64], x1: &[f64], seed: u64) -> f64 {
    let pooled: Vec<f64> = x0.iter().chain(x1).copied().collect();
    let (ranks, _) = mid_ranks(&pooled);
    let n0 = x0.len();
    let mean = (n0 * x1.len()) as f64 / 2.0;
    let u_of = |r: &[f64]| r[..n0].iter().sum::<f64>() - (n0 * (n0 + 1)) as f64 / 2.0;
    let observed = (u_of(&ranks) - mean).abs();
    let mut rng = seeded_rng(seed);
    let mut shuffled = ranks.clone();
    let mut hits = 0;
    for _ in 0..PERMUTATIONS {
        shuffled.shuffle(&mut rng);
        if (u_of(&shuffled) - mean).abs() >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / PERMUTATIONS as f64
}

/// Permutation p of |mean rank a - mean rank b| with pooled ranks over all
/// groups, shuffling every group label.
fn permutation_dunn_p(groups: &[Vec<f64>], a: usize, b: usize, seed: u64) -> f64 {
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let (ranks, _) = mid_ranks(&pooled);
    let mut labels: Vec<usize> = groups.iter().enumerate().flat_map(|(g, v)| std::iter::repeat(g).take(v.len())).collect();
    let stat = |labels: &[usize]| {
        let mean = |g: usize| {
            let (s, c) = ranks.iter().zip(labels).filter(|(_, &l)| l == g).fold((0.0, 0), |(s, c), (r, _)| (s + r, c + 1));
            s / c as f64
        };
        (mean(a) - mean(b)).abs()
    };
    let observed = stat(&labels);
    let mut rng = seeded_rng(seed);
    let mut hits = 0;
    for _ in 0..PERMUTATIONS {
        labels.shuffle(&mut rng);
        if stat(&labels) >= observed - 1e-9 {
            hits += 1;
        }
    }
    hits as f64 / PERMUTATIONS as f64
}

fn sample(rng: &mut multiplicity_core::Rng, n: usize, shift: f64, round: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let u: f64 = (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() - 2.0 + shift;
            if round {
                (u * 2.0).round() / 2.0
            } else {
                u
            }
        })
        .collect()
}

#[test]
fn criterion_5_statistics_correctness() {
    let mut problems = Vec::new();

    let kw = kruskal_wallis(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
    if (kw.statistic - 3.857).abs() > 1e-3 {
        problems.push(format!("KW H = {}", kw.statistic));
    }
    let bh = bh_adjust(&[0.01, 0.02, 0.03]);
    if bh != vec![0.03, 0.03, 0.03] {
        problems.push(format!("BH {bh:?}"));
    }
    let w = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    if !(w.exact && (w.p_value - 1.0 / 3.0).abs() < 1e-15) {
        problems.push(format!("exact rank-sum p = {}", w.p_value));
    }
    let rho = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 3.0, 4.0, 5.0]).unwrap().rho;
    if (rho - 0.9).abs() > 1e-15 {
        problems.push(format!("Spearman rho = {rho}"));
    }

    // five fixed instances for each approximation; the last two have ties
    let mut rng = seeded_rng(55);
    let mut worst_w = 0.0_f64;
    for (k, (n0, n1, shift, round)) in
        [(12, 15, 0.8, false), (20, 20, 0.4, false), (10, 30, 0.6, false), (25, 18, 0.5, true), (15, 15, 0.9, true)]
            .into_iter()
            .enumerate()
    {
        let x0 = sample(&mut rng, n0, 0.0, round);
        let x1 = sample(&mut rng, n1, shift, round);
        let approx = wilcoxon_rank_sum(&x0, &x1).unwrap();
        let perm = permutation_rank_sum_p(&x0, &x1, 100 + k as u64);
        worst_w = worst_w.max((approx.p_value - perm).abs());
        if approx.exact || (approx.p_value - perm).abs() > APPROX_TOL {
            problems.push(format!("rank-sum instance {k}: approx {:.4} vs permutation {perm:.4}", approx.p_value));
        }
    }
    let mut worst_d = 0.0_f64;
    for (k, (sizes, shifts, round)) in [
        (vec![15, 15, 15], vec![0.0, 0.5, 1.0], false),
        (vec![20, 12, 18], vec![0.0, 0.3, 0.7], false),
        (vec![15, 15, 15, 15], vec![0.0, 0.2, 0.6, 1.0], false),
        (vec![18, 18, 18], vec![0.0, 0.4, 0.4], true),
        (vec![25, 15], vec![0.0, 0.6], true),
    ]
    .into_iter()
    .enumerate()
    {
        let groups: Vec<Vec<f64>> = sizes.iter().zip(&shifts).map(|(&n, &s)| sample(&mut rng, n, s, round)).collect();
        for c in dunn_posthoc(&groups, PAdjust::None).unwrap() {
            let perm = permutation_dunn_p(&groups, c.group_a, c.group_b, 200 + k as u64);
            worst_d = worst_d.max((c.p_value - perm).abs());
            if (c.p_value - perm).abs() > APPROX_TOL {
                problems.push(format!(
                    "Dunn instance {k} pair {}-{}: approx {:.4} vs permutation {perm:.4}",
                    c.group_a, c.group_b, c.p_value
                ));
            }
        }
    }
    let pass = problems.is_empty();
    verdict(
        5,
        pass,
        &format!(
            "hand instances and {PERMUTATIONS}-permutation oracles; largest gaps rank-sum {worst_w:.4}, Dunn {worst_d:.4}{}{}",
            if pass { "" } else { "; " },
            problems.join("; ")
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 6

#[test]
fn criterion_6_balancing_inflates_discrepancy() {
    let g = grid();
    let mut lines = Vec::new();
    let mut inflated = 0;
    for d in GRID_DATASETS {
        let values = |balanced: bool| -> Vec<f64> {
            g.records
                .iter()
                .filter(|r| r.dataset == d && (r.balancing != Method::None) == balanced)
                .filter_map(|r| r.discrepancy)
                .collect()
        };
        let original = multiplicity_cli::report::median(&values(false)).unwrap();
        let balanced = multiplicity_cli::report::median(&values(true)).unwrap();
        if balanced > original {
            inflated += 1;
        }
        lines.push(format!("{d} {original:.4}->{balanced:.4}"));
    }
    let n = GRID_DATASETS.len();
    let in_time = g.elapsed < GRID_TIME_LIMIT;
    // at least four in five datasets
    let pass = inflated * 5 >= 4 * n && in_time;
    verdict(
        6,
        pass,
        &format!(
            "balanced median discrepancy above original in {inflated}/{n} datasets [{}]; grid of {} cells took {:.0}s",
            lines.join(", "),
            g.records.len(),
            g.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_linearity_tracks_obscurity() {
    let g = grid();
    let table = rq6_table(&g.records, &g.profiles, CorrelationUnit::Record);
    let per_dataset = rq6_table(&g.records, &g.profiles, CorrelationUnit::Dataset);
    let mut parts = Vec::new();
    let mut pass = true;
    for m in ["l1", "l2", "l3"] {
        let r = table.iter().find(|r| r.measure == m).unwrap().obscurity_r;
        let rd = per_dataset.iter().find(|r| r.measure == m).unwrap().obscurity_r;
        pass &= r.is_some_and(|v| v > 0.0);
        parts.push(format!("{m} r={} (per dataset {})", fmt_opt(r), fmt_opt(rd)));
    }
    verdict(7, pass, &format!("Spearman with obscurity over cells: {}", parts.join(", ")));
    assert!(pass);
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("NA".into(), |x| format!("{x:.3}"))
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_determinism() {
    let first = &grid().records;
    let second = run_grid("b").records;
    let strip = |rs: &[ResultRecord]| -> Vec<ResultRecord> {
        rs.iter().cloned().map(|mut r| {
            r.wall_time = 0.0;
            r
        }).collect()
    };
    let a = strip(first);
    let b = strip(&second);
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    let pass = differing == 0 && !a.is_empty();
    verdict(8, pass, &format!("two runs of {} cells; {differing} records differ outside wall_time", a.len()));
    assert!(pass);
}
