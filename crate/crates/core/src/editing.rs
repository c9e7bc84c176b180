//! Wilson editing: drop every instance that leave-one-out k-NN over the
//! unmodified set misclassifies.

use rayon::prelude::*;

use crate::classifier::vote;
use crate::dataset::{Dataset, InstanceId};
use crate::neighbors::{scan, DistanceKind, NeighborTable};
use crate::{Error, Result, Scalar};

/// Ids of the instances kept by Wilson editing, ascending.
pub fn wilson_edit<T: Scalar>(ds: &Dataset<T>, k: usize, kind: DistanceKind) -> Result<Vec<InstanceId>> {
    let (rows, _) = edit_rows(ds, k, kind)?;
    let mut ids: Vec<InstanceId> = rows.iter().map(|&r| ds.id(r)).collect();
    ids.sort_unstable();
    Ok(ids)
}

/// Kept row positions plus the neighbor table the votes were taken from.
pub(crate) fn edit_rows<T: Scalar>(
    ds: &Dataset<T>,
    k: usize,
    kind: DistanceKind,
) -> Result<(Vec<usize>, NeighborTable<T>)> {
    if k == 0 || ds.len() <= k {
        return Err(Error::KOutOfRange { k, n: ds.len() });
    }
    let table = scan(ds, k, kind);
    let rows = kept_rows(ds, &table)?;
    Ok((rows, table))
}

/// All votes are taken against the full table before anything is removed.
pub(crate) fn kept_rows<T: Scalar>(ds: &Dataset<T>, table: &NeighborTable<T>) -> Result<Vec<usize>> {
    let correct: Vec<bool> = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let p = vote(table.neighbors(i).iter().map(|&r| ds.label(r)), ds.n_classes());
            p.predicted == ds.label(i)
        })
        .collect();
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| correct[i]).collect();
    if rows.is_empty() {
        return Err(Error::EditingRemovedAll);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;

    fn line(points: &[(f64, u32)]) -> Dataset<f64> {
        Dataset::new(
            points.iter().map(|p| p.0).collect(),
            1,
            points.iter().map(|p| Label(p.1)).collect(),
        )
        .unwrap()
    }

    fn clusters() -> Vec<(f64, u32)> {
        let mut pts: Vec<(f64, u32)> = (0..4).map(|i| (i as f64, 0)).collect();
        pts.extend((10..14).map(|i| (i as f64, 1)));
        pts
    }

    #[test]
    fn clean_clusters_survive() {
        let ds = line(&clusters());
        assert_eq!(wilson_edit(&ds, 3, DistanceKind::Euclidean).unwrap(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn planted_outlier_is_removed() {
        let mut pts = clusters();
        pts.push((1.5, 1));
        let ds = line(&pts);
        assert_eq!(wilson_edit(&ds, 3, DistanceKind::Euclidean).unwrap(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn alternating_labels_are_all_removed() {
        let ds = line(&[(0.0, 0), (1.0, 1), (2.0, 0), (3.0, 1)]);
        assert!(matches!(wilson_edit(&ds, 3, DistanceKind::Euclidean), Err(Error::EditingRemovedAll)));
    }

    #[test]
    fn too_few_instances_for_k() {
        let ds = line(&[(0.0, 0), (1.0, 1), (2.0, 0)]);
        assert!(matches!(wilson_edit(&ds, 3, DistanceKind::Euclidean), Err(Error::KOutOfRange { k: 3, n: 3 })));
    }

    #[test]
    fn result_does_not_depend_on_row_order() {
        let mut pts = clusters();
        pts.push((1.5, 1));
        pts.push((11.2, 0));
        let ds = line(&pts);
        let rev: Vec<usize> = (0..ds.len()).rev().collect();
        let a = wilson_edit(&ds, 3, DistanceKind::Euclidean).unwrap();
        let b = wilson_edit(&ds.select_rows(&rev), 3, DistanceKind::Euclidean).unwrap();
        assert_eq!(a, b);
    }
}
