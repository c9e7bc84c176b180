//! Stratified reduction: split the training set into class-balanced random
//! subsets, reduce each one independently, and take the union.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, InstanceId};
use crate::parallel::{with_threads, Threads};
use crate::reduction::{run_reducer, ReduceOptions, ReductionResult, Reducer};
use crate::{Error, Result, Scalar};

/// Subset size used when none is given.
pub const DEFAULT_SUBSET_SIZE: usize = 1000;

/// Splits the rows of `ds` into `ceil(n / subset_size)` disjoint subsets.
///
/// Each class is shuffled and dealt out evenly; leftover members go one per
/// subset, continuing round-robin across classes, so subset sizes differ by at
/// most one. Rows inside a subset keep the input order.
pub fn stratified_subsets<T: Scalar>(ds: &Dataset<T>, subset_size: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let n = ds.len();
    let classes = ds.distinct_labels();
    if subset_size < 2 * classes.max(1) {
        return Err(Error::InvalidParameter(format!(
            "subset size {subset_size} is below twice the class count ({classes})"
        )));
    }
    if n < subset_size {
        return Err(Error::InvalidParameter(format!(
            "subset size {subset_size} exceeds the {n} available instances"
        )));
    }
    let count = n.div_ceil(subset_size);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut subsets: Vec<Vec<usize>> = vec![Vec::with_capacity(subset_size); count];

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for i in 0..n {
        by_class[ds.label(i).index()].push(i);
    }
    let mut cursor = 0;
    for members in by_class.iter_mut().filter(|m| !m.is_empty()) {
        members.shuffle(&mut rng);
        let base = members.len() / count;
        let mut rest = members.as_slice();
        for subset in subsets.iter_mut() {
            subset.extend_from_slice(&rest[..base]);
            rest = &rest[base..];
        }
        for &r in rest {
            subsets[cursor].push(r);
            cursor = (cursor + 1) % count;
        }
    }
    for subset in &mut subsets {
        subset.sort_unstable();
    }
    Ok(subsets)
}

/// Runs `reducer` on every stratified subset in parallel and unions the
/// results. Subset `i` is reduced with seed `opts.seed + i`, so a single
/// subset reproduces a direct run exactly.
pub fn stratified_reduce<T: Scalar>(
    ds: &Dataset<T>,
    reducer: &Reducer,
    opts: &ReduceOptions,
    subset_size: usize,
    seed: u64,
) -> Result<ReductionResult> {
    let start = Instant::now();
    let subsets = stratified_subsets(ds, subset_size, seed)?;
    let outcomes: Vec<Result<ReductionResult>> = with_threads(opts.threads, || {
        subsets
            .par_iter()
            .enumerate()
            .map(|(i, rows)| {
                let sub = ds.select_rows(rows);
                let sub_opts = ReduceOptions {
                    seed: opts.seed.wrapping_add(i as u64),
                    threads: Threads::Auto,
                    ..*opts
                };
                run_reducer(&sub, reducer, &sub_opts)
            })
            .collect()
    })?;

    let mut retained: Vec<InstanceId> = Vec::new();
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let r = outcome.map_err(|e| Error::Subset {
            subset: i,
            source: Box::new(e),
        })?;
        retained.extend(r.retained);
    }
    let mut result = ReductionResult::new(*reducer, retained, ds.len(), start.elapsed());
    result.stratified = Some(subset_size);
    Ok(result)
}
