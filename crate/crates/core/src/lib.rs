//! Training-set reduction for k-nearest-neighbor classifiers.
//!
//! The centerpiece is Parallel Instance Filtering ([`pif`]): a Wilson-editing
//! pass removes noisy instances, the survivors are split into disjoint groups
//! that share the same nearest enemy, and every group is filtered on its own
//! worker. Four classic instance-selection algorithms ([`baselines`]), a
//! stratification wrapper ([`stratify`]) and a repeated-holdout experiment
//! runner ([`harness`]) sit beside it.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64`/`*32` aliases below pin the common instantiations.

pub mod baselines;
pub mod classifier;
pub mod dataset;
pub mod editing;
mod error;
pub mod harness;
pub mod neighbors;
pub mod parallel;
pub mod pif;
pub mod reduction;
mod scalar;
pub mod stratify;

pub use classifier::{accuracy, classify, Prediction};
pub use dataset::{load_csv, normalize, split, Dataset, InstanceId, Label, LabelColumn, SplitSpec};
pub use editing::wilson_edit;
pub use error::{Error, ErrorKind, Result};
pub use neighbors::{build_table, distance, nearest_in_set, DistanceKind, NeighborTable};
pub use parallel::Threads;
pub use pif::{EnemyPartition, PifConfig};
pub use reduction::{run_reducer, ReduceOptions, ReductionResult, Reducer};
pub use scalar::Scalar;
pub use stratify::stratified_reduce;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type NeighborTable64 = NeighborTable<f64>;
pub type NeighborTable32 = NeighborTable<f32>;
pub type MinMaxScaler64 = dataset::MinMaxScaler<f64>;
pub type MinMaxScaler32 = dataset::MinMaxScaler<f32>;
