//! DROP3: Wilson editing followed by a decremental pass that drops an
//! instance whenever its associates are classified at least as well without it.

use std::time::Instant;

use crate::classifier::vote;
use crate::dataset::{Dataset, InstanceId};
use crate::editing;
use crate::neighbors::{enemies_only, scan, DistanceKind, Neighbor, TopK};
use crate::reduction::{ReductionResult, Reducer};
use crate::{Error, Result, Scalar};

/// Mutable neighbor/associate bookkeeping over the edited set.
struct State<'a, T> {
    ds: &'a Dataset<T>,
    kind: DistanceKind,
    k: usize,
    alive: Vec<bool>,
    /// Up to k+1 nearest alive rows, nearest first.
    neighbors: Vec<Vec<Neighbor<T>>>,
    /// Rows whose neighbor list contains this row.
    associates: Vec<Vec<usize>>,
}

impl<'a, T: Scalar> State<'a, T> {
    fn new(ds: &'a Dataset<T>, k: usize, kind: DistanceKind) -> Self {
        let n = ds.len();
        let table = scan(ds, k + 1, kind);
        let neighbors: Vec<Vec<Neighbor<T>>> = (0..n)
            .map(|i| {
                table
                    .neighbors(i)
                    .iter()
                    .zip(table.neighbor_dists(i))
                    .map(|(&row, &dist)| Neighbor {
                        row,
                        id: ds.id(row),
                        dist,
                    })
                    .collect()
            })
            .collect();
        let mut associates = vec![Vec::new(); n];
        for (a, list) in neighbors.iter().enumerate() {
            for nb in list {
                associates[nb.row].push(a);
            }
        }
        State {
            ds,
            kind,
            k,
            alive: vec![true; n],
            neighbors,
            associates,
        }
    }

    fn correct(&self, a: usize, without: Option<usize>) -> bool {
        let labels = self.neighbors[a]
            .iter()
            .filter(|nb| Some(nb.row) != without)
            .take(self.k)
            .map(|nb| self.ds.label(nb.row));
        vote(labels, self.ds.n_classes()).predicted == self.ds.label(a)
    }

    fn remove(&mut self, p: usize) {
        self.alive[p] = false;
        for nb in std::mem::take(&mut self.neighbors[p]) {
            self.associates[nb.row].retain(|&a| a != p);
        }
        for a in std::mem::take(&mut self.associates[p]) {
            self.neighbors[a].retain(|nb| nb.row != p);
            if let Some(next) = self.next_neighbor(a) {
                self.associates[next.row].push(a);
                self.neighbors[a].push(next);
            }
        }
    }

    /// Nearest alive row not yet in `a`'s list. Everything in the list ranks
    /// ahead of it, so it goes at the end.
    fn next_neighbor(&self, a: usize) -> Option<Neighbor<T>> {
        let list = &self.neighbors[a];
        let query = self.ds.row(a);
        let mut top = TopK::new(1);
        for r in 0..self.ds.len() {
            if r == a || !self.alive[r] || list.iter().any(|nb| nb.row == r) {
                continue;
            }
            top.offer(Neighbor {
                row: r,
                id: self.ds.id(r),
                dist: self.kind.eval(query, self.ds.row(r)),
            });
        }
        top.into_vec().pop()
    }
}

/// Visiting order of the decremental pass: descending distance to the nearest
/// enemy within `ds`, ascending id among ties.
fn removal_order<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind) -> Vec<usize> {
    let enemies = enemies_only(ds, kind);
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|&a, &b| {
        enemies
            .enemy_dist(b)
            .partial_cmp(&enemies.enemy_dist(a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ds.id(a).cmp(&ds.id(b)))
    });
    order
}

fn edited<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<Dataset<T>> {
    if k == 0 || ds.len() <= k + 1 {
        return Err(Error::KOutOfRange { k, n: ds.len() });
    }
    let (kept, _) = editing::edit_rows(ds, k, kind)?;
    Ok(ds.select_rows(&kept))
}

/// Ids of the edited set in the order the decremental pass visits them.
pub fn drop3_removal_order<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<Vec<InstanceId>> {
    let sub = edited(ds, k, kind)?;
    Ok(removal_order(&sub, kind).into_iter().map(|r| sub.id(r)).collect())
}

/// DROP3 with `k`-NN classification and `k + 1` tracked neighbors.
///
/// An instance `p` is dropped when at least as many of its current associates
/// are classified correctly without `p` as with it. The last remaining member
/// of a class is never dropped.
pub fn drop3_reduce<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<ReductionResult> {
    let start = Instant::now();
    let sub = edited(ds, k, kind)?;
    let order = removal_order(&sub, kind);
    let mut state = State::new(&sub, k, kind);
    let mut class_size = sub.class_counts();

    for p in order {
        let label = sub.label(p).index();
        if class_size[label] == 1 {
            continue;
        }
        let assoc = &state.associates[p];
        let with = assoc.iter().filter(|&&a| state.correct(a, None)).count();
        let without = assoc.iter().filter(|&&a| state.correct(a, Some(p))).count();
        if without >= with {
            state.remove(p);
            class_size[label] -= 1;
        }
    }

    let retained: Vec<InstanceId> = (0..sub.len())
        .filter(|&r| state.alive[r])
        .map(|r| sub.id(r))
        .collect();
    Ok(ReductionResult::new(
        Reducer::Drop3 { k },
        retained,
        ds.len(),
        start.elapsed(),
    ))
}
