//! Brute-force k-nearest-neighbor and nearest-enemy search.
//!
//! Every algorithm in the crate sits on top of this module. Queries are
//! processed in blocks of rows on the rayon pool; candidates are streamed in
//! cache-sized blocks. Neighbors are ranked by `(distance, instance id)`, so the
//! result never depends on the number of workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, InstanceId};
use crate::{Error, Result, Scalar};

const QUERY_BLOCK: usize = 32;
const CANDIDATE_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    Euclidean,
    /// Same neighbor ordering as `Euclidean` without the square root.
    SquaredEuclidean,
    Manhattan,
}

impl DistanceKind {
    pub fn name(self) -> &'static str {
        match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::SquaredEuclidean => "squared_euclidean",
            DistanceKind::Manhattan => "manhattan",
        }
    }

    /// Distance between two rows of equal length (checked in debug builds only).
    #[inline]
    pub fn eval<T: Scalar>(self, a: &[T], b: &[T]) -> T {
        debug_assert_eq!(a.len(), b.len());
        match self {
            DistanceKind::Euclidean => squared_l2(a, b).sqrt(),
            DistanceKind::SquaredEuclidean => squared_l2(a, b),
            DistanceKind::Manhattan => l1(a, b),
        }
    }
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "euclidean" | "l2" => Ok(DistanceKind::Euclidean),
            "squared_euclidean" | "sqeuclidean" => Ok(DistanceKind::SquaredEuclidean),
            "manhattan" | "l1" => Ok(DistanceKind::Manhattan),
            _ => Err(Error::InvalidParameter(format!("unknown metric {s:?}"))),
        }
    }
}

// Four independent accumulators let the compiler keep several lanes busy.
// Both kernels are exactly symmetric in their arguments.
#[inline]
fn squared_l2<T: Scalar>(a: &[T], b: &[T]) -> T {
    let split = a.len() - a.len() % 4;
    let mut acc = [T::zero(); 4];
    for (x, y) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        for lane in 0..4 {
            let d = x[lane] - y[lane];
            acc[lane] = acc[lane] + d * d;
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in a[split..].iter().zip(&b[split..]) {
        let d = x - y;
        tail = tail + d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn l1<T: Scalar>(a: &[T], b: &[T]) -> T {
    let split = a.len() - a.len() % 4;
    let mut acc = [T::zero(); 4];
    for (x, y) in a[..split].chunks_exact(4).zip(b[..split].chunks_exact(4)) {
        for lane in 0..4 {
            acc[lane] = acc[lane] + (x[lane] - y[lane]).abs();
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in a[split..].iter().zip(&b[split..]) {
        tail = tail + (x - y).abs();
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Distance between two feature rows.
pub fn distance<T: Scalar>(a: &[T], b: &[T], kind: DistanceKind) -> Result<T> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(kind.eval(a, b))
}

/// `(d1, id1)` ranks strictly before `(d2, id2)`.
#[inline]
pub(crate) fn precedes<T: Scalar>(d1: T, id1: InstanceId, d2: T, id2: InstanceId) -> bool {
    d1 < d2 || (d1 == d2 && id1 < id2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T> {
    pub row: usize,
    pub id: InstanceId,
    pub dist: T,
}

impl<T: Scalar> Neighbor<T> {
    #[inline]
    pub(crate) fn precedes(&self, other: &Self) -> bool {
        precedes(self.dist, self.id, other.dist, other.id)
    }
}

/// Bounded sorted list holding the best `k` candidates seen so far.
#[derive(Debug, Clone)]
pub(crate) struct TopK<T> {
    k: usize,
    items: Vec<Neighbor<T>>,
}

impl<T: Scalar> TopK<T> {
    pub(crate) fn new(k: usize) -> Self {
        TopK {
            k,
            items: Vec::with_capacity(k + 1),
        }
    }

    #[inline]
    pub(crate) fn offer(&mut self, cand: Neighbor<T>) {
        if self.k == 0 {
            return;
        }
        if self.items.len() == self.k {
            if !cand.precedes(self.items.last().unwrap()) {
                return;
            }
            self.items.pop();
        }
        let mut pos = self.items.len();
        while pos > 0 && cand.precedes(&self.items[pos - 1]) {
            pos -= 1;
        }
        self.items.insert(pos, cand);
    }

    pub(crate) fn into_vec(self) -> Vec<Neighbor<T>> {
        self.items
    }
}

/// The `k` nearest rows among `rows` to `query`, skipping `exclude` (an
/// instance id), ranked by `(distance, id)`.
pub(crate) fn knn_among<T: Scalar>(
    ds: &Dataset<T>,
    query: &[T],
    rows: impl IntoIterator<Item = usize>,
    k: usize,
    exclude: Option<InstanceId>,
    kind: DistanceKind,
) -> Vec<Neighbor<T>> {
    let mut top = TopK::new(k);
    for r in rows {
        let id = ds.id(r);
        if Some(id) == exclude {
            continue;
        }
        top.offer(Neighbor {
            row: r,
            id,
            dist: kind.eval(query, ds.row(r)),
        });
    }
    top.into_vec()
}

/// Per-instance k nearest neighbors and nearest enemy.
///
/// Neighbors and enemies are stored as row positions of the dataset the table
/// was built from; map them through [`Dataset::id`] for instance ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable<T = f64> {
    k: usize,
    neighbor_rows: Vec<usize>,
    neighbor_dists: Vec<T>,
    enemy_rows: Vec<Option<usize>>,
    enemy_dists: Vec<T>,
}

impl<T: Scalar> NeighborTable<T> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.enemy_rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.enemy_rows.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbor_rows[i * self.k..(i + 1) * self.k]
    }

    pub fn neighbor_dists(&self, i: usize) -> &[T] {
        &self.neighbor_dists[i * self.k..(i + 1) * self.k]
    }

    pub fn enemy(&self, i: usize) -> Option<usize> {
        self.enemy_rows[i]
    }

    /// Distance to the nearest enemy; infinite when there is none.
    pub fn enemy_dist(&self, i: usize) -> T {
        self.enemy_dists[i]
    }

    /// True when no instance has an enemy (single-label data).
    pub fn no_enemies(&self) -> bool {
        self.enemy_rows.iter().all(Option::is_none)
    }

    pub fn require_enemies(&self) -> Result<()> {
        if self.no_enemies() {
            Err(Error::NoEnemies)
        } else {
            Ok(())
        }
    }
}

/// Builds the neighbor table for every row of `ds`.
///
/// Requires `1 <= k <= n - 1`. A single-label dataset is not an error here:
/// the enemy fields are left empty and [`NeighborTable::no_enemies`] reports it.
pub fn build_table<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<NeighborTable<T>> {
    if k == 0 || k >= ds.len() {
        return Err(Error::KOutOfRange { k, n: ds.len() });
    }
    Ok(scan(ds, k, kind))
}

/// Table with no neighbor lists, only nearest enemies.
pub(crate) fn enemies_only<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind) -> NeighborTable<T> {
    scan(ds, 0, kind)
}

struct BlockOut<T> {
    neighbors: Vec<Neighbor<T>>,
    enemies: Vec<Option<Neighbor<T>>>,
}

pub(crate) fn scan<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> NeighborTable<T> {
    let n = ds.len();
    let k = k.min(n.saturating_sub(1));
    let starts: Vec<usize> = (0..n).step_by(QUERY_BLOCK).collect();
    let blocks: Vec<BlockOut<T>> = starts
        .into_par_iter()
        .map(|start| scan_block(ds, k, kind, start, (start + QUERY_BLOCK).min(n)))
        .collect();

    let mut table = NeighborTable {
        k,
        neighbor_rows: Vec::with_capacity(n * k),
        neighbor_dists: Vec::with_capacity(n * k),
        enemy_rows: Vec::with_capacity(n),
        enemy_dists: Vec::with_capacity(n),
    };
    for block in blocks {
        for nb in block.neighbors {
            table.neighbor_rows.push(nb.row);
            table.neighbor_dists.push(nb.dist);
        }
        for e in block.enemies {
            table.enemy_rows.push(e.map(|e| e.row));
            table.enemy_dists.push(e.map_or(T::infinity(), |e| e.dist));
        }
    }
    table
}

fn scan_block<T: Scalar>(
    ds: &Dataset<T>,
    k: usize,
    kind: DistanceKind,
    start: usize,
    end: usize,
) -> BlockOut<T> {
    let n = ds.len();
    let mut tops: Vec<TopK<T>> = (start..end).map(|_| TopK::new(k)).collect();
    let mut enemies: Vec<Option<Neighbor<T>>> = vec![None; end - start];
    for cstart in (0..n).step_by(CANDIDATE_BLOCK) {
        let cend = (cstart + CANDIDATE_BLOCK).min(n);
        for q in start..end {
            let query = ds.row(q);
            let qlabel = ds.label(q);
            let top = &mut tops[q - start];
            let enemy = &mut enemies[q - start];
            for c in cstart..cend {
                if c == q {
                    continue;
                }
                let cand = Neighbor {
                    row: c,
                    id: ds.id(c),
                    dist: kind.eval(query, ds.row(c)),
                };
                top.offer(cand);
                if ds.label(c) != qlabel && enemy.is_none_or(|e| cand.precedes(&e)) {
                    *enemy = Some(cand);
                }
            }
        }
    }
    BlockOut {
        neighbors: tops.into_iter().flat_map(TopK::into_vec).collect(),
        enemies,
    }
}

/// Nearest candidate to `query_id`, excluding the query itself.
pub fn nearest_in_set<T: Scalar>(
    ds: &Dataset<T>,
    query_id: InstanceId,
    candidate_ids: &[InstanceId],
    kind: DistanceKind,
) -> Result<(InstanceId, T)> {
    let q = ds
        .row_of(query_id)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown instance id {query_id}")))?;
    let rows = ds.rows_of(candidate_ids)?;
    knn_among(ds, ds.row(q), rows, 1, Some(query_id), kind)
        .first()
        .map(|nb| (nb.id, nb.dist))
        .ok_or(Error::EmptyCandidates)
}
