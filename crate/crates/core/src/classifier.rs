//! k-NN majority vote.

use rayon::prelude::*;

use crate::dataset::{Dataset, InstanceId, Label};
use crate::neighbors::{knn_among, DistanceKind};
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prediction {
    pub predicted: Label,
    /// Neighbor count per class, indexed by label.
    pub votes: Vec<usize>,
}

/// Majority vote over neighbor labels given nearest first. A tie between
/// classes goes to the tied class that owns the nearest neighbor.
pub(crate) fn vote(nearest_first: impl IntoIterator<Item = Label>, n_classes: usize) -> Prediction {
    let mut votes = vec![0usize; n_classes];
    let mut first_seen = vec![usize::MAX; n_classes];
    for (rank, label) in nearest_first.into_iter().enumerate() {
        let c = label.index();
        votes[c] += 1;
        if first_seen[c] == usize::MAX {
            first_seen[c] = rank;
        }
    }
    let best = (0..n_classes)
        .filter(|&c| votes[c] > 0)
        .min_by_key(|&c| (std::cmp::Reverse(votes[c]), first_seen[c]))
        .unwrap_or(0);
    Prediction {
        predicted: Label(best as u32),
        votes,
    }
}

/// Classifies `query` by its `k` nearest rows among `ref_subset` (row
/// positions in `reference`).
///
/// When `query_id` is given and names an instance of the subset, that instance
/// is left out of its own neighbor search (leave-one-out). Exclusion is by id,
/// so duplicate feature rows still count as neighbors.
pub fn classify<T: Scalar>(
    query: &[T],
    query_id: Option<InstanceId>,
    reference: &Dataset<T>,
    ref_subset: &[usize],
    k: usize,
    kind: DistanceKind,
) -> Result<Prediction> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if query.len() != reference.dim() {
        return Err(Error::DimensionMismatch {
            left: query.len(),
            right: reference.dim(),
        });
    }
    if let Some(&bad) = ref_subset.iter().find(|&&r| r >= reference.len()) {
        return Err(Error::InvalidParameter(format!("row {bad} is outside the reference set")));
    }
    let nearest = knn_among(reference, query, ref_subset.iter().copied(), k, query_id, kind);
    if nearest.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    Ok(vote(nearest.iter().map(|nb| reference.label(nb.row)), reference.n_classes()))
}

/// Percentage of `test` instances whose k-NN prediction over `ref_subset`
/// matches their label.
pub fn accuracy<T: Scalar>(
    test: &Dataset<T>,
    reference: &Dataset<T>,
    ref_subset: &[usize],
    k: usize,
    kind: DistanceKind,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidParameter("test set is empty".into()));
    }
    if ref_subset.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let correct: Vec<bool> = (0..test.len())
        .into_par_iter()
        .map(|i| {
            classify(test.row(i), None, reference, ref_subset, k, kind)
                .map(|p| p.predicted == test.label(i))
        })
        .collect::<Result<_>>()?;
    let hits = correct.iter().filter(|&&c| c).count();
    Ok(100.0 * hits as f64 / test.len() as f64)
}

/// Accuracy of k-NN trained on all of `reference`.
pub fn accuracy_full<T: Scalar>(
    test: &Dataset<T>,
    reference: &Dataset<T>,
    k: usize,
    kind: DistanceKind,
) -> Result<f64> {
    let all: Vec<usize> = (0..reference.len()).collect();
    accuracy(test, reference, &all, k, kind)
}
