use ndarray::Array2;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, BinnedMatrix, GrowParams, Tree, DEPTH_CAP};
use crate::dataset::{class_stats, Dataset};
use crate::error::{Error, Result};
use crate::{derive_seed, seeded_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    DecisionTree,
    RandomForest,
    GradientBoostedTrees,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::DecisionTree, Family::RandomForest, Family::GradientBoostedTrees];

    pub fn name(self) -> &'static str {
        match self {
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::GradientBoostedTrees => "gradient_boosted_trees",
        }
    }
}

/// Hyperparameter grids the random search draws from.
pub mod grid {
    /// `None` grows until leaves are pure or `min_leaf` stops it.
    pub const TREE_DEPTH: [Option<usize>; 8] = [Some(2), Some(3), Some(4), Some(6), Some(8), Some(10), Some(12), None];
    pub const TREE_MIN_LEAF: [usize; 6] = [1, 2, 5, 10, 20, 50];

    pub const FOREST_TREES: [usize; 3] = [10, 25, 50];
    pub const FOREST_DEPTH: [Option<usize>; 5] = [Some(4), Some(6), Some(8), Some(12), None];
    pub const FOREST_MIN_LEAF: [usize; 4] = [1, 2, 5, 10];
    pub const FOREST_FEATURES: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

    pub const BOOST_ROUNDS: [usize; 3] = [25, 50, 100];
    pub const BOOST_DEPTH: [Option<usize>; 4] = [Some(2), Some(3), Some(4), Some(5)];
    pub const BOOST_MIN_LEAF: [usize; 4] = [1, 5, 10, 20];
    pub const BOOST_LEARNING_RATE: [f64; 4] = [0.05, 0.1, 0.2, 0.3];
    pub const BOOST_FEATURES: [f64; 3] = [0.6, 0.8, 1.0];

    /// L2 penalty on boosted leaf values.
    pub const BOOST_LAMBDA: f64 = 1.0;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Trees in a forest or boosting rounds; 1 for a single tree.
    pub n_trees: usize,
    pub feature_subsample: f64,
    /// Shrinkage for boosting; unused otherwise.
    pub learning_rate: f64,
    pub seed: u64,
}

impl ModelSpec {
    /// Draw a spec from the grids. The family cycles with the ordinal so every
    /// pool of three or more models covers all families.
    pub fn sample(ordinal: usize, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let family = Family::ALL[ordinal % Family::ALL.len()];
        let pick = |rng: &mut Rng, n: usize| rng.gen_range(0..n);
        match family {
            Family::DecisionTree => ModelSpec {
                family,
                max_depth: grid::TREE_DEPTH[pick(&mut rng, grid::TREE_DEPTH.len())],
                min_leaf: grid::TREE_MIN_LEAF[pick(&mut rng, grid::TREE_MIN_LEAF.len())],
                n_trees: 1,
                feature_subsample: 1.0,
                learning_rate: 1.0,
                seed,
            },
            Family::RandomForest => ModelSpec {
                family,
                n_trees: grid::FOREST_TREES[pick(&mut rng, grid::FOREST_TREES.len())],
                max_depth: grid::FOREST_DEPTH[pick(&mut rng, grid::FOREST_DEPTH.len())],
                min_leaf: grid::FOREST_MIN_LEAF[pick(&mut rng, grid::FOREST_MIN_LEAF.len())],
                feature_subsample: grid::FOREST_FEATURES[pick(&mut rng, grid::FOREST_FEATURES.len())],
                learning_rate: 1.0,
                seed,
            },
            Family::GradientBoostedTrees => ModelSpec {
                family,
                n_trees: grid::BOOST_ROUNDS[pick(&mut rng, grid::BOOST_ROUNDS.len())],
                max_depth: grid::BOOST_DEPTH[pick(&mut rng, grid::BOOST_DEPTH.len())],
                min_leaf: grid::BOOST_MIN_LEAF[pick(&mut rng, grid::BOOST_MIN_LEAF.len())],
                learning_rate: grid::BOOST_LEARNING_RATE[pick(&mut rng, grid::BOOST_LEARNING_RATE.len())],
                feature_subsample: grid::BOOST_FEATURES[pick(&mut rng, grid::BOOST_FEATURES.len())],
                seed,
            },
        }
    }

    fn grow_params(&self, lambda: f64) -> GrowParams {
        GrowParams {
            max_depth: self.max_depth.unwrap_or(DEPTH_CAP),
            min_leaf: self.min_leaf,
            feature_fraction: self.feature_subsample,
            lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predictor {
    Tree(Tree),
    /// Mean of the member trees' positive fractions.
    Forest(Vec<Tree>),
    /// sigmoid(base + rate * sum of tree outputs)
    Boosted { base: f64, rate: f64, trees: Vec<Tree> },
}

impl Predictor {
    pub fn score(&self, row: &[f64]) -> f64 {
        match self {
            Predictor::Tree(t) => t.predict(row),
            Predictor::Forest(ts) => ts.iter().map(|t| t.predict(row)).sum::<f64>() / ts.len() as f64,
            Predictor::Boosted { base, rate, trees } => {
                sigmoid(base + rate * trees.iter().map(|t| t.predict(row)).sum::<f64>())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub n_rows: usize,
    pub n_features: usize,
    pub n_leaves: usize,
    /// Error on the training rows at threshold 0.5.
    pub training_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub predictor: Predictor,
    pub summary: TrainingSummary,
}

impl TrainedModel {
    /// Positive-class score in [0, 1].
    pub fn score(&self, row: &[f64]) -> f64 {
        self.predictor.score(row)
    }

    pub fn scores(&self, x: &Array2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.score(r.as_slice().expect("standard layout"))).collect()
    }
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn fit_tree(spec: &ModelSpec, bins: &BinnedMatrix, y: &[f64], rng: &mut Rng) -> Predictor {
    let mut rows: Vec<usize> = (0..y.len()).collect();
    let ones = vec![1.0; y.len()];
    Predictor::Tree(grow_tree(bins, &mut rows, y, &ones, spec.grow_params(0.0), rng))
}

fn fit_forest(spec: &ModelSpec, bins: &BinnedMatrix, y: &[f64], rng: &mut Rng) -> Predictor {
    let n = y.len();
    let ones = vec![1.0; n];
    let trees = (0..spec.n_trees)
        .map(|_| {
            let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow_tree(bins, &mut rows, y, &ones, spec.grow_params(0.0), rng)
        })
        .collect();
    Predictor::Forest(trees)
}

fn fit_boosted(spec: &ModelSpec, bins: &BinnedMatrix, x: &Array2<f64>, y: &[f64], rng: &mut Rng) -> Predictor {
    let n = y.len();
    let prior = (y.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
    let base = (prior / (1.0 - prior)).ln();
    let mut f = vec![base; n];
    let mut g = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut trees = Vec::with_capacity(spec.n_trees);
    for _ in 0..spec.n_trees {
        for i in 0..n {
            let p = sigmoid(f[i]);
            g[i] = y[i] - p;
            h[i] = p * (1.0 - p);
        }
        let mut rows: Vec<usize> = (0..n).collect();
        let tree = grow_tree(bins, &mut rows, &g, &h, spec.grow_params(grid::BOOST_LAMBDA), rng);
        for (i, fi) in f.iter_mut().enumerate() {
            *fi += spec.learning_rate * tree.predict(x.row(i).as_slice().expect("standard layout"));
        }
        trees.push(tree);
    }
    Predictor::Boosted { base, rate: spec.learning_rate, trees }
}

fn leaves(p: &Predictor) -> usize {
    match p {
        Predictor::Tree(t) => t.n_leaves(),
        Predictor::Forest(ts) | Predictor::Boosted { trees: ts, .. } => ts.iter().map(Tree::n_leaves).sum(),
    }
}

/// Fit one model from its spec on pre-binned data.
fn fit_binned(spec: &ModelSpec, train: &Dataset, bins: &BinnedMatrix) -> TrainedModel {
    let y: Vec<f64> = train.labels.iter().map(|&l| f64::from(l)).collect();
    let mut rng = seeded_rng(spec.seed);
    let predictor = match spec.family {
        Family::DecisionTree => fit_tree(spec, bins, &y, &mut rng),
        Family::RandomForest => fit_forest(spec, bins, &y, &mut rng),
        Family::GradientBoostedTrees => fit_boosted(spec, bins, &train.features, &y, &mut rng),
    };
    let wrong = (0..train.n_rows())
        .filter(|&i| u8::from(predictor.score(train.row(i)) >= super::THRESHOLD) != train.labels[i])
        .count();
    let summary = TrainingSummary {
        n_rows: train.n_rows(),
        n_features: train.n_features(),
        n_leaves: leaves(&predictor),
        training_error: wrong as f64 / train.n_rows() as f64,
    };
    TrainedModel { spec: spec.clone(), predictor, summary }
}

fn check_trainable(train: &Dataset) -> Result<()> {
    let s = class_stats(train);
    if s.n_minority == 0 || s.n_majority == 0 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Train a single model from an explicit spec.
pub fn fit_model(spec: &ModelSpec, train: &Dataset) -> Result<TrainedModel> {
    check_trainable(train)?;
    Ok(fit_binned(spec, train, &BinnedMatrix::new(&train.features)))
}

/// The specs a pool of this size and seed trains, in ordinal order.
pub fn pool_specs(pool_size: usize, seed: u64) -> Vec<ModelSpec> {
    (0..pool_size).map(|i| ModelSpec::sample(i, derive_seed(seed, i as u64))).collect()
}

/// Train `pool_size` models with specs drawn by seeded random search. Models
/// train in parallel; each has its own seed derived from (seed, ordinal).
pub fn train_pool(train: &Dataset, pool_size: usize, seed: u64) -> Result<Vec<TrainedModel>> {
    if pool_size < 2 {
        return Err(Error::InvalidParameter(format!("pool size must be at least 2, got {pool_size}")));
    }
    check_trainable(train)?;
    let bins = BinnedMatrix::new(&train.features);
    Ok(pool_specs(pool_size, seed).par_iter().map(|s| fit_binned(s, train, &bins)).collect())
}
