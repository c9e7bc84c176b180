//! Condensed nearest neighbor: grow a subset until 1-NN over it labels every
//! training instance correctly.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{Dataset, InstanceId};
use crate::neighbors::{knn_among, DistanceKind, Neighbor};
use crate::reduction::{ReductionResult, Reducer};
use crate::{Error, Result, Scalar};

/// Nearest absorbed instance seen so far, and how much of the absorbed list
/// has been compared against.
#[derive(Clone, Copy)]
struct Cursor<T> {
    best: Option<Neighbor<T>>,
    seen: usize,
}

impl<T: Scalar> Cursor<T> {
    fn catch_up(&mut self, ds: &Dataset<T>, row: usize, absorbed: &[usize], kind: DistanceKind) {
        let q = ds.row(row);
        for &s in &absorbed[self.seen..] {
            let cand = Neighbor {
                row: s,
                id: ds.id(s),
                dist: kind.eval(q, ds.row(s)),
            };
            if self.best.is_none_or(|b| cand.precedes(&b)) {
                self.best = Some(cand);
            }
        }
        self.seen = absorbed.len();
    }
}

/// Classic CNN: seed with one random instance per class, then sweep the data
/// in a seeded random order absorbing every instance the current subset
/// misclassifies, until a full sweep absorbs nothing.
pub fn cnn_reduce<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind, seed: u64) -> Result<ReductionResult> {
    let start = Instant::now();
    let n = ds.len();
    if n == 0 {
        return Err(Error::InvalidDataset("cannot reduce an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for i in 0..n {
        by_class[ds.label(i).index()].push(i);
    }
    let mut absorbed: Vec<usize> = by_class
        .iter()
        .filter_map(|members| members.choose(&mut rng).copied())
        .collect();
    let mut in_subset = vec![false; n];
    for &r in &absorbed {
        in_subset[r] = true;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut cursors = vec![Cursor { best: None, seen: 0 }; n];
    loop {
        // Bring every cursor up to date in parallel; the sweep below then only
        // compares against instances absorbed during the sweep itself.
        cursors.par_iter_mut().enumerate().for_each(|(r, c)| {
            if !in_subset[r] {
                c.catch_up(ds, r, &absorbed, kind);
            }
        });
        let mut grew = false;
        for &r in &order {
            if in_subset[r] {
                continue;
            }
            let c = &mut cursors[r];
            c.catch_up(ds, r, &absorbed, kind);
            let predicted = c.best.map(|b| ds.label(b.row));
            if predicted != Some(ds.label(r)) {
                absorbed.push(r);
                in_subset[r] = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }

    let retained: Vec<InstanceId> = absorbed.iter().map(|&r| ds.id(r)).collect();
    Ok(ReductionResult::new(Reducer::Cnn, retained, n, start.elapsed()))
}

/// True when 1-NN over `subset` (ids) labels every instance of `ds` outside the
/// subset correctly. Members of the subset classify themselves.
pub fn is_consistent<T: Scalar>(ds: &Dataset<T>, subset: &[InstanceId], kind: DistanceKind) -> Result<bool> {
    let rows = ds.rows_of(subset)?;
    if rows.is_empty() {
        return Ok(ds.is_empty());
    }
    let mut member = vec![false; ds.len()];
    for &r in &rows {
        member[r] = true;
    }
    Ok((0..ds.len()).into_par_iter().all(|i| {
        member[i]
            || knn_among(ds, ds.row(i), rows.iter().copied(), 1, None, kind)
                .first()
                .is_some_and(|nb| ds.label(nb.row) == ds.label(i))
    }))
}
