//! Parallel Instance Filtering.
//!
//! 1. Wilson-edit the training set.
//! 2. Give every survivor its nearest enemy among the survivors. Instances
//!    sharing an enemy form one group; the groups are disjoint and cover the
//!    edited set.
//! 3. Within each group of at least `m` members, remove `y` when some other
//!    member `x` satisfies
//!
//!    ```text
//!    D(y, NE) >= max(D(y, x), D(x, NE))
//!    ```
//!
//!    i.e. `x` is no farther from the enemy than `y`, and `y` is no farther from
//!    `x` than from the enemy. Groups are filtered independently on the worker
//!    pool.
//!
//! The rule is evaluated against each group's original membership, so removals
//! never cascade and the result is independent of scan order. When two
//! members witness each other (equal enemy distance, close enough together)
//! the lower id is kept and the higher removed, so no group is ever emptied.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{Dataset, InstanceId};
use crate::editing;
use crate::neighbors::{enemies_only, DistanceKind};
use crate::parallel::{with_threads, Threads};
use crate::reduction::{ReductionResult, Reducer, DEFAULT_K, DEFAULT_M};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PifConfig {
    /// Neighbor count for the editing pass.
    pub k_edit: usize,
    /// Smallest group size the filtering rule is applied to.
    pub m: usize,
    pub kind: DistanceKind,
    pub threads: Threads,
}

impl Default for PifConfig {
    fn default() -> Self {
        PifConfig {
            k_edit: DEFAULT_K,
            m: DEFAULT_M,
            kind: DistanceKind::Euclidean,
            threads: Threads::Auto,
        }
    }
}

impl PifConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_edit == 0 {
            return Err(Error::InvalidParameter("k_edit must be >= 1".into()));
        }
        if self.m < 2 {
            return Err(Error::InvalidParameter(format!("m must be >= 2, got {}", self.m)));
        }
        Ok(())
    }
}

/// Instances grouped by their nearest enemy.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EnemyPartition {
    groups: BTreeMap<InstanceId, Vec<InstanceId>>,
}

impl EnemyPartition {
    /// Enemy id -> ascending member ids.
    pub fn groups(&self) -> &BTreeMap<InstanceId, Vec<InstanceId>> {
        &self.groups
    }

    pub fn members(&self, enemy: InstanceId) -> Option<&[InstanceId]> {
        self.groups.get(&enemy).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn member_count(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }
}

/// Row-level partition: (enemy row, member rows) in ascending enemy order.
fn partition_rows<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind) -> Result<Vec<(usize, Vec<usize>)>> {
    let table = enemies_only(ds, kind);
    table.require_enemies()?;
    let mut groups: BTreeMap<InstanceId, (usize, Vec<usize>)> = BTreeMap::new();
    for row in 0..ds.len() {
        // every row has an enemy once any row has one
        let enemy = table.enemy(row).ok_or(Error::NoEnemies)?;
        groups
            .entry(ds.id(enemy))
            .or_insert_with(|| (enemy, Vec::new()))
            .1
            .push(row);
    }
    Ok(groups.into_values().collect())
}

/// Partitions `retained` by nearest enemy, where enemies are searched only
/// among `retained` itself.
pub fn partition_by_enemy<T: Scalar>(
    ds: &Dataset<T>,
    retained: &[InstanceId],
    kind: DistanceKind,
) -> Result<EnemyPartition> {
    let sub = ds.select_ids(retained)?;
    let groups = partition_rows(&sub, kind)?;
    Ok(to_partition(&sub, &groups))
}

fn to_partition<T: Scalar>(ds: &Dataset<T>, groups: &[(usize, Vec<usize>)]) -> EnemyPartition {
    EnemyPartition {
        groups: groups
            .iter()
            .map(|(enemy, members)| {
                let mut ids: Vec<InstanceId> = members.iter().map(|&r| ds.id(r)).collect();
                ids.sort_unstable();
                (ds.id(*enemy), ids)
            })
            .collect(),
    }
}

/// Rows of `members` that the filtering rule removes.
fn filtered_out<T: Scalar>(ds: &Dataset<T>, enemy: usize, members: &[usize], kind: DistanceKind) -> Vec<usize> {
    let ne = ds.row(enemy);
    let mut by_enemy_dist: Vec<(T, InstanceId, usize)> = members
        .iter()
        .map(|&r| (kind.eval(ds.row(r), ne), ds.id(r), r))
        .collect();
    by_enemy_dist.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
    });

    let mut removed = Vec::new();
    for &(dy, idy, ry) in &by_enemy_dist {
        let y = ds.row(ry);
        // A witness must satisfy D(x, NE) <= D(y, NE); the list is sorted by that.
        let found = by_enemy_dist
            .iter()
            .take_while(|&&(dx, _, _)| dx <= dy)
            .any(|&(dx, idx, rx)| rx != ry && is_witness(dy, idy, dx, idx, kind.eval(y, ds.row(rx))));
        if found {
            removed.push(ry);
        }
    }
    removed
}

/// Applies the filtering rule to one group and returns the kept member ids,
/// ascending.
pub fn filter_subset<T: Scalar>(
    ds: &Dataset<T>,
    enemy_id: InstanceId,
    members: &[InstanceId],
    kind: DistanceKind,
) -> Result<Vec<InstanceId>> {
    let enemy = ds
        .row_of(enemy_id)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown instance id {enemy_id}")))?;
    let rows = ds.rows_of(members)?;
    let removed = filtered_out(ds, enemy, &rows, kind);
    let mut kept: Vec<InstanceId> = rows
        .iter()
        .filter(|r| !removed.contains(r))
        .map(|&r| ds.id(r))
        .collect();
    kept.sort_unstable();
    Ok(kept)
}

/// Everything a PIF run produced, for inspection and verification.
#[derive(Debug, Clone)]
pub struct PifTrace {
    /// Ids kept by the editing pass, ascending.
    pub edited: Vec<InstanceId>,
    pub partition: EnemyPartition,
    /// Ids removed by the filtering rule, ascending.
    pub filtered: Vec<InstanceId>,
    pub result: ReductionResult,
}

pub fn reduce<T: Scalar>(ds: &Dataset<T>, cfg: &PifConfig) -> Result<ReductionResult> {
    reduce_traced(ds, cfg).map(|t| t.result)
}

pub fn reduce_traced<T: Scalar>(ds: &Dataset<T>, cfg: &PifConfig) -> Result<PifTrace> {
    cfg.validate()?;
    let start = Instant::now();
    with_threads(cfg.threads, || run(ds, cfg, start))?
}

fn run<T: Scalar>(ds: &Dataset<T>, cfg: &PifConfig, start: Instant) -> Result<PifTrace> {
    let (kept, _) = editing::edit_rows(ds, cfg.k_edit, cfg.kind)?;
    let edited = ds.select_rows(&kept);
    let groups = partition_rows(&edited, cfg.kind)?;

    let mut removed: Vec<usize> = groups
        .par_iter()
        .filter(|(_, members)| members.len() >= cfg.m)
        .flat_map_iter(|(enemy, members)| filtered_out(&edited, *enemy, members, cfg.kind))
        .collect();
    removed.sort_unstable();

    let mut is_removed = vec![false; edited.len()];
    for &r in &removed {
        is_removed[r] = true;
    }
    let retained: Vec<InstanceId> = (0..edited.len())
        .filter(|&r| !is_removed[r])
        .map(|r| edited.id(r))
        .collect();
    let result = ReductionResult::new(
        Reducer::Pif {
            k_edit: cfg.k_edit,
            m: cfg.m,
        },
        retained,
        ds.len(),
        start.elapsed(),
    );

    let mut edited_ids = edited.ids().to_vec();
    edited_ids.sort_unstable();
    let mut filtered: Vec<InstanceId> = removed.iter().map(|&r| edited.id(r)).collect();
    filtered.sort_unstable();
    Ok(PifTrace {
        edited: edited_ids,
        partition: to_partition(&edited, &groups),
        filtered,
        result,
    })
}

/// Whether `x` (enemy distance `dx`) removes `y` (enemy distance `dy`) at
/// mutual distance `dyx`, tie rule included. Exposed for verification code.
pub fn is_witness<T: Scalar>(dy: T, idy: InstanceId, dx: T, idx: InstanceId, dyx: T) -> bool {
    if idx == idy || dy < dx.max(dyx) {
        return false;
    }
    // y and x witness each other only when tied; the lower id survives.
    let mutual = dx >= dy.max(dyx);
    !(mutual && idy < idx)
}
