//! Common surface shared by every reducer.

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, InstanceId};
use crate::neighbors::DistanceKind;
use crate::parallel::{with_threads, Threads};
use crate::pif::PifConfig;
use crate::{baselines, pif, Error, Result, Scalar};

pub const DEFAULT_K: usize = 3;
pub const DEFAULT_M: usize = 2;

fn default_k() -> usize {
    DEFAULT_K
}

fn default_m() -> usize {
    DEFAULT_M
}

/// An instance-selection algorithm together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algo", rename_all = "lowercase")]
pub enum Reducer {
    /// Keep everything (the plain k-NN baseline).
    None,
    Pif {
        #[serde(default = "default_k")]
        k_edit: usize,
        #[serde(default = "default_m")]
        m: usize,
    },
    Cnn,
    Drop3 {
        #[serde(default = "default_k")]
        k: usize,
    },
    Icf {
        #[serde(default = "default_k")]
        k: usize,
    },
    Mss,
}

impl Reducer {
    pub fn pif() -> Self {
        Reducer::Pif {
            k_edit: DEFAULT_K,
            m: DEFAULT_M,
        }
    }

    /// Builds a reducer from its short name with the given `k` and `m`.
    pub fn from_name(name: &str, k: usize, m: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "none" | "knn" => Ok(Reducer::None),
            "pif" => Ok(Reducer::Pif { k_edit: k, m }),
            "cnn" => Ok(Reducer::Cnn),
            "drop3" => Ok(Reducer::Drop3 { k }),
            "icf" => Ok(Reducer::Icf { k }),
            "mss" => Ok(Reducer::Mss),
            _ => Err(Error::InvalidParameter(format!(
                "unknown algorithm {name:?} (expected one of none, pif, cnn, drop3, icf, mss)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Reducer::None => "none",
            Reducer::Pif { .. } => "pif",
            Reducer::Cnn => "cnn",
            Reducer::Drop3 { .. } => "drop3",
            Reducer::Icf { .. } => "icf",
            Reducer::Mss => "mss",
        }
    }

    /// Column label used in reports.
    pub fn display_name(&self) -> &'static str {
        match self {
            Reducer::None => "KNN",
            Reducer::Pif { .. } => "PIF",
            Reducer::Cnn => "CNN",
            Reducer::Drop3 { .. } => "DROP3",
            Reducer::Icf { .. } => "ICF",
            Reducer::Mss => "MSS",
        }
    }
}

impl fmt::Display for Reducer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reducer::Pif { k_edit, m } => write!(f, "pif(k={k_edit}, m={m})"),
            Reducer::Drop3 { k } | Reducer::Icf { k } => write!(f, "{}(k={k})", self.name()),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Reducer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Reducer::from_name(s, DEFAULT_K, DEFAULT_M)
    }
}

/// Settings shared by all reducers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReduceOptions {
    pub kind: DistanceKind,
    /// Only CNN consumes randomness.
    pub seed: u64,
    pub threads: Threads,
}

/// Outcome of one reduction run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionResult {
    pub algorithm: Reducer,
    /// Kept instance ids, ascending.
    pub retained: Vec<InstanceId>,
    pub n_input: usize,
    pub storage_pct: f64,
    pub wall_time: Duration,
    /// Subset size when the run went through the stratification wrapper.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratified: Option<usize>,
}

impl ReductionResult {
    pub fn new(algorithm: Reducer, mut retained: Vec<InstanceId>, n_input: usize, wall_time: Duration) -> Self {
        retained.sort_unstable();
        let storage_pct = storage_pct(retained.len(), n_input);
        ReductionResult {
            algorithm,
            retained,
            n_input,
            storage_pct,
            wall_time,
            stratified: None,
        }
    }
}

pub fn storage_pct(kept: usize, n_input: usize) -> f64 {
    100.0 * kept as f64 / n_input as f64
}

/// Runs `reducer` on `ds` inside a pool sized by `opts.threads`.
pub fn run_reducer<T: Scalar>(ds: &Dataset<T>, reducer: &Reducer, opts: &ReduceOptions) -> Result<ReductionResult> {
    if ds.is_empty() {
        return Err(Error::InvalidDataset("cannot reduce an empty dataset".into()));
    }
    let kind = opts.kind;
    match *reducer {
        Reducer::None => Ok(ReductionResult::new(Reducer::None, ds.ids().to_vec(), ds.len(), Duration::ZERO)),
        Reducer::Pif { k_edit, m } => pif::reduce(
            ds,
            &PifConfig {
                k_edit,
                m,
                kind,
                threads: opts.threads,
            },
        ),
        Reducer::Cnn => with_threads(opts.threads, || baselines::cnn_reduce(ds, kind, opts.seed))?,
        Reducer::Drop3 { k } => with_threads(opts.threads, || baselines::drop3_reduce(ds, k, kind))?,
        Reducer::Icf { k } => with_threads(opts.threads, || baselines::icf_reduce(ds, k, kind))?,
        Reducer::Mss => with_threads(opts.threads, || baselines::mss_reduce(ds, kind))?,
    }
}
