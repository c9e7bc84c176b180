//! Iterative Case Filtering.
//!
//! `LocalSet(x)` holds the same-class instances strictly closer to `x` than its
//! nearest enemy (x included). `Reachable(x)` is `LocalSet(x)`; `Coverage(x)`
//! is every `y` whose local set contains `x`. Each round deletes, all at once,
//! the instances with `|Reachable| > |Coverage|`, until a round deletes nothing.

use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::editing;
use crate::neighbors::DistanceKind;
use crate::reduction::{ReductionResult, Reducer};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone)]
pub struct IcfOutcome {
    pub result: ReductionResult,
    /// Rounds executed, the final no-change round included.
    pub iterations: usize,
}

/// `(|Reachable|, |Coverage|)` for every row of `ds`.
pub(crate) fn reach_and_coverage<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind) -> Vec<(usize, usize)> {
    let n = ds.len();
    let enemy_dist: Vec<T> = (0..n)
        .into_par_iter()
        .map(|i| {
            let q = ds.row(i);
            (0..n)
                .filter(|&j| ds.label(j) != ds.label(i))
                .map(|j| kind.eval(q, ds.row(j)))
                .fold(T::infinity(), T::min)
        })
        .collect();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let q = ds.row(i);
            let mut reach = 0;
            let mut cover = 0;
            for j in (0..n).filter(|&j| ds.label(j) == ds.label(i)) {
                let d = if i == j { T::zero() } else { kind.eval(q, ds.row(j)) };
                if d < enemy_dist[i] {
                    reach += 1;
                }
                if d < enemy_dist[j] {
                    cover += 1;
                }
            }
            (reach, cover)
        })
        .collect()
}

pub fn icf_reduce<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<ReductionResult> {
    icf_reduce_with_stats(ds, k, kind).map(|o| o.result)
}

/// ICF after a Wilson-editing pass with the same `k`. A round never deletes
/// the whole of a class: if every remaining member of a class is marked, that
/// class is left alone in that round.
pub fn icf_reduce_with_stats<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<IcfOutcome> {
    let start = Instant::now();
    let (kept, _) = editing::edit_rows(ds, k, kind)?;
    let mut current = ds.select_rows(&kept);
    if current.distinct_labels() < 2 {
        return Err(Error::NoEnemies);
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        let counts = reach_and_coverage(&current, kind);
        let mut marked: Vec<bool> = counts.iter().map(|&(r, c)| r > c).collect();

        let mut survivors = vec![0usize; current.n_classes()];
        for (i, &m) in marked.iter().enumerate() {
            if !m {
                survivors[current.label(i).index()] += 1;
            }
        }
        for (i, m) in marked.iter_mut().enumerate() {
            if survivors[current.label(i).index()] == 0 {
                *m = false;
            }
        }

        if !marked.iter().any(|&m| m) {
            break;
        }
        let keep: Vec<usize> = (0..current.len()).filter(|&i| !marked[i]).collect();
        current = current.select_rows(&keep);
    }

    Ok(IcfOutcome {
        result: ReductionResult::new(Reducer::Icf { k }, current.ids().to_vec(), ds.len(), start.elapsed()),
        iterations,
    })
}
