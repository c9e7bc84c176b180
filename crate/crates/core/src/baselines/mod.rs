//! Comparison algorithms: CNN, DROP3, ICF and MSS.
//!
//! Each one returns a [`ReductionResult`](crate::ReductionResult) over the ids of
//! its input. Ties are broken by ascending instance id throughout.

mod cnn;
mod drop3;
mod icf;
mod mss;

pub use cnn::{cnn_reduce, is_consistent};
pub use drop3::{drop3_reduce, drop3_removal_order};
pub use icf::{icf_reduce, icf_reduce_with_stats, IcfOutcome};
pub use mss::{is_selective, mss_reduce};
