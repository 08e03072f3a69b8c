//! Algorithms for studying predictive multiplicity under class imbalance.
//!
//! The crate covers tabular data handling, ten class-balancing methods,
//! univariate feature filtering, data-complexity measures, a seeded pool of
//! tree models with Rashomon-set multiplicity metrics, and the nonparametric
//! tests used to compare experimental conditions.

pub mod complexity;
pub mod dataset;
pub mod error;
pub mod filtering;
pub mod neighbors;
pub mod rashomon;
pub mod resampling;
pub mod stats;

pub use complexity::{complexity_profile, ComplexityOptions, ComplexityProfile, Measure};
pub use dataset::{class_stats, load_csv, load_csv_report, stratified_split, LoadReport, ClassStats, Dataset, FeatureKind, Scaling, SplitPair};
pub use error::{Error, Result};
pub use neighbors::{knn, knn_among, NeighborGraph};
pub use rashomon::{
    build_rashomon_set, discrepancy, obscurity, prediction_matrix, train_pool, LossKind, MultiplicityReport,
    PredictionMatrix, RashomonSet, TrainedModel,
};
pub use resampling::{balance, BalanceSpec, Method, Provenance, ResampleOutcome};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random generator used everywhere a seed is accepted.
pub type Rng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mix a base seed with a stream index (splitmix64 finalizer) so derived
/// seeds do not depend on evaluation order.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
