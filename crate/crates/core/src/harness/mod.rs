//! Repeated-holdout experiments: split, reduce the training part, score k-NN on
//! the test part, and aggregate accuracy, storage and their ratio.

mod report;
mod synth;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::accuracy_full;
use crate::dataset::{load_csv, normalize, split, Dataset, LabelColumn, MinMaxScaler, SplitSpec};
use crate::neighbors::DistanceKind;
use crate::parallel::{with_threads, Threads};
use crate::reduction::{run_reducer, ReduceOptions, ReductionResult, Reducer};
use crate::stratify::stratified_reduce;
use crate::{Error, Result, Scalar};

pub use report::{
    emit_report, format_summary, read_json, runs_csv_path, write_json, write_runs_csv, write_table_csv, ReportFormat,
};
pub use synth::generate_synthetic;

pub const SCHEMA_VERSION: u32 = 1;

/// Where min-max statistics come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeScope {
    /// The whole dataset, before splitting.
    Global,
    /// The training split; the test split is mapped with the same statistics.
    #[default]
    TrainOnly,
}

impl std::str::FromStr for NormalizeScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "global" => Ok(NormalizeScope::Global),
            "train-only" | "train_only" | "train" => Ok(NormalizeScope::TrainOnly),
            _ => Err(Error::InvalidParameter(format!("unknown normalize scope {s:?}"))),
        }
    }
}

fn default_repetitions() -> usize {
    20
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_k_eval() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub dataset: PathBuf,
    /// Column name or zero-based index; the last column when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
    /// `none` is the unreduced k-NN baseline.
    pub algorithms: Vec<Reducer>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_k_eval")]
    pub k_eval: usize,
    /// Repetition `r` splits with `seed + r` (and seeds CNN with it).
    #[serde(default)]
    pub seed: u64,
    /// Reduce through the stratification wrapper with this subset size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratify: Option<usize>,
    #[serde(default)]
    pub normalize_scope: NormalizeScope,
    /// Preserve class proportions when splitting train/test.
    #[serde(default)]
    pub stratified_split: bool,
    #[serde(default)]
    pub metric: DistanceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Include wall-clock times in the report. Off by default so that reports
    /// are byte-reproducible.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn new(dataset: impl Into<PathBuf>, algorithms: Vec<Reducer>) -> Self {
        ExperimentSpec {
            dataset: dataset.into(),
            label_column: None,
            algorithms,
            repetitions: default_repetitions(),
            train_fraction: default_train_fraction(),
            k_eval: default_k_eval(),
            seed: 0,
            stratify: None,
            normalize_scope: NormalizeScope::default(),
            stratified_split: false,
            metric: DistanceKind::default(),
            threads: None,
            record_timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::InvalidParameter("repetitions must be >= 1".into()));
        }
        if self.k_eval == 0 {
            return Err(Error::InvalidParameter("k_eval must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "train fraction must lie strictly between 0 and 1, got {}",
                self.train_fraction
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidParameter("no algorithms listed".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidParameter("threads must be >= 1".into()));
        }
        Ok(())
    }

    /// Parses a JSON spec; a relative dataset path is resolved against
    /// `base_dir`.
    pub fn from_json(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let mut spec: ExperimentSpec = serde_json::from_str(text)?;
        if let Some(base) = base_dir {
            if spec.dataset.is_relative() {
                spec.dataset = base.join(&spec.dataset);
            }
        }
        Ok(spec)
    }

    fn label_column(&self) -> LabelColumn {
        self.label_column
            .as_deref()
            .map(|s| s.parse().expect("infallible"))
            .unwrap_or_default()
    }

    fn threads(&self) -> Threads {
        self.threads.map_or(Threads::Auto, Threads::Fixed)
    }
}

/// One (algorithm, repetition) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub accuracy: Option<f64>,
    pub storage_pct: Option<f64>,
    pub retained: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    /// Report column name, e.g. `PIF` or `CNN_s` when stratified.
    pub name: String,
    pub reducer: Reducer,
    pub stratified: bool,
    pub completed_runs: usize,
    pub failed_runs: usize,
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub mean_storage: Option<f64>,
    pub std_storage: Option<f64>,
    /// `mean_accuracy / mean_storage`.
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_wall_ms: Option<f64>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub dataset: String,
    /// Instances in the full dataset (before splitting).
    pub size: usize,
    pub spec: ExperimentSpec,
    pub algorithms: Vec<AlgorithmSummary>,
}

impl ExperimentReport {
    pub fn algorithm(&self, name: &str) -> Option<&AlgorithmSummary> {
        self.algorithms.iter().find(|a| a.name.eq_ignore_ascii_case(name))
    }
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

impl AlgorithmSummary {
    fn from_runs(reducer: Reducer, stratified: bool, runs: Vec<RunRecord>) -> Self {
        let ok: Vec<&RunRecord> = runs.iter().filter(|r| !r.failed()).collect();
        let acc: Vec<f64> = ok.iter().filter_map(|r| r.accuracy).collect();
        let storage: Vec<f64> = ok.iter().filter_map(|r| r.storage_pct).collect();
        let wall: Vec<f64> = ok.iter().filter_map(|r| r.wall_ms).collect();
        let acc_stats = mean_std(&acc);
        let storage_stats = mean_std(&storage);
        let name = if stratified {
            format!("{}_s", reducer.display_name())
        } else {
            reducer.display_name().to_string()
        };
        AlgorithmSummary {
            name,
            reducer,
            stratified,
            completed_runs: ok.len(),
            failed_runs: runs.len() - ok.len(),
            mean_accuracy: acc_stats.map(|s| s.0),
            std_accuracy: acc_stats.map(|s| s.1),
            mean_storage: storage_stats.map(|s| s.0),
            std_storage: storage_stats.map(|s| s.1),
            ratio: acc_stats.zip(storage_stats).map(|(a, s)| a.0 / s.0),
            mean_wall_ms: mean_std(&wall).map(|s| s.0),
            runs,
        }
    }
}

/// Loads the spec's dataset and runs the experiment on it.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let ds: Dataset<f64> = load_csv(&spec.dataset, &spec.label_column())?;
    run_experiment_on(&ds, spec, &spec.dataset.display().to_string())
}

/// Runs the experiment on an in-memory dataset.
///
/// Failures inside a cell (a reducer error, say) are recorded in that cell and
/// the remaining cells still run.
pub fn run_experiment_on<T: Scalar>(ds: &Dataset<T>, spec: &ExperimentSpec, name: &str) -> Result<ExperimentReport> {
    spec.validate()?;
    let base = match spec.normalize_scope {
        NormalizeScope::Global => normalize(ds)?,
        NormalizeScope::TrainOnly => ds.clone(),
    };
    let mut cells: Vec<Vec<RunRecord>> = vec![Vec::with_capacity(spec.repetitions); spec.algorithms.len()];

    with_threads(spec.threads(), || {
        for run in 0..spec.repetitions {
            let seed = spec.seed.wrapping_add(run as u64);
            let parts = split(&base, &SplitSpec::new(spec.train_fraction, seed, spec.stratified_split)).and_then(
                |(train, test)| match spec.normalize_scope {
                    NormalizeScope::Global => Ok((train, test)),
                    NormalizeScope::TrainOnly => {
                        let scaler = MinMaxScaler::fit(&train)?;
                        Ok((scaler.transform(&train)?, scaler.transform(&test)?))
                    }
                },
            );
            for (reducer, runs) in spec.algorithms.iter().zip(cells.iter_mut()) {
                let record = match &parts {
                    Ok((train, test)) => run_cell(train, test, reducer, spec, run, seed),
                    Err(e) => RunRecord {
                        run,
                        seed,
                        n_train: 0,
                        n_test: 0,
                        accuracy: None,
                        storage_pct: None,
                        retained: None,
                        wall_ms: None,
                        error: Some(e.to_string()),
                    },
                };
                runs.push(record);
            }
        }
    })?;

    let algorithms = spec
        .algorithms
        .iter()
        .zip(cells)
        .map(|(reducer, runs)| {
            let stratified = spec.stratify.is_some() && *reducer != Reducer::None;
            AlgorithmSummary::from_runs(*reducer, stratified, runs)
        })
        .collect();
    Ok(ExperimentReport {
        schema_version: SCHEMA_VERSION,
        dataset: name.to_string(),
        size: ds.len(),
        spec: spec.clone(),
        algorithms,
    })
}

fn reduce_train<T: Scalar>(train: &Dataset<T>, reducer: &Reducer, spec: &ExperimentSpec, seed: u64) -> Result<ReductionResult> {
    let opts = ReduceOptions {
        kind: spec.metric,
        seed,
        threads: Threads::Auto,
    };
    match spec.stratify {
        Some(size) if *reducer != Reducer::None => stratified_reduce(train, reducer, &opts, size, seed),
        _ => run_reducer(train, reducer, &opts),
    }
}

fn run_cell<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    reducer: &Reducer,
    spec: &ExperimentSpec,
    run: usize,
    seed: u64,
) -> RunRecord {
    let mut record = RunRecord {
        run,
        seed,
        n_train: train.len(),
        n_test: test.len(),
        accuracy: None,
        storage_pct: None,
        retained: None,
        wall_ms: None,
        error: None,
    };
    let outcome = reduce_train(train, reducer, spec, seed).and_then(|r| {
        let kept = train.select_ids(&r.retained)?;
        let acc = accuracy_full(test, &kept, spec.k_eval, spec.metric)?;
        Ok((r, acc))
    });
    match outcome {
        Ok((r, acc)) => {
            record.accuracy = Some(acc);
            record.storage_pct = Some(r.storage_pct);
            record.retained = Some(r.retained.len());
            if spec.record_timing {
                record.wall_ms = Some(r.wall_time.as_secs_f64() * 1e3);
            }
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}
