//! Modified Selective Subset.
//!
//! The neighborhood of `x` is the set of instances strictly closer to `x`
//! than its nearest enemy (`x` itself included; all of them share its class).
//! Instances are visited in ascending order of enemy distance; a visited
//! instance is selected when it belongs to the neighborhood of at least one
//! instance that is not yet covered, and covers all of those.

use std::time::Instant;

use rayon::prelude::*;

use crate::dataset::{Dataset, InstanceId};
use crate::neighbors::{enemies_only, DistanceKind};
use crate::reduction::{ReductionResult, Reducer};
use crate::{Error, Result, Scalar};

pub fn mss_reduce<T: Scalar>(ds: &Dataset<T>, kind: DistanceKind) -> Result<ReductionResult> {
    let start = Instant::now();
    let n = ds.len();
    let enemies = enemies_only(ds, kind);
    enemies.require_enemies()?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        enemies
            .enemy_dist(a)
            .partial_cmp(&enemies.enemy_dist(b))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(ds.id(a).cmp(&ds.id(b)))
    });

    let mut covered = vec![false; n];
    let mut uncovered = n;
    let mut selected: Vec<InstanceId> = Vec::new();
    for (pos, &x) in order.iter().enumerate() {
        if uncovered == 0 {
            break;
        }
        let q = ds.row(x);
        // Everything earlier in the order already covered itself.
        let newly: Vec<usize> = order[pos..]
            .par_iter()
            .copied()
            .filter(|&y| !covered[y] && (y == x || kind.eval(q, ds.row(y)) < enemies.enemy_dist(y)))
            .collect();
        if !newly.is_empty() {
            for y in newly {
                covered[y] = true;
                uncovered -= 1;
            }
            selected.push(ds.id(x));
        }
    }

    Ok(ReductionResult::new(Reducer::Mss, selected, n, start.elapsed()))
}

/// Selective-subset property: every instance of `ds` has a same-class member
/// of `subset` strictly closer than its nearest enemy in `ds`.
pub fn is_selective<T: Scalar>(ds: &Dataset<T>, subset: &[InstanceId], kind: DistanceKind) -> Result<bool> {
    let rows = ds.rows_of(subset)?;
    if ds.distinct_labels() < 2 {
        return Err(Error::NoEnemies);
    }
    let enemies = enemies_only(ds, kind);
    Ok((0..ds.len()).into_par_iter().all(|i| {
        rows.iter().any(|&s| {
            ds.label(s) == ds.label(i)
                && (s == i || kind.eval(ds.row(i), ds.row(s)) < enemies.enemy_dist(i))
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Label;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(pts: &[(f64, u32)]) -> Dataset<f64> {
        Dataset::new(pts.iter().map(|p| p.0).collect(), 1, pts.iter().map(|p| Label(p.1)).collect()).unwrap()
    }

    #[test]
    fn pair_selects_both() {
        let ds = line(&[(0.0, 0), (1.0, 1)]);
        assert_eq!(mss_reduce(&ds, DistanceKind::Euclidean).unwrap().retained, vec![0, 1]);
    }

    #[test]
    fn collinear_points_pick_the_one_nearest_the_enemy() {
        let ds = line(&[(0.0, 0), (1.0, 0), (2.0, 0), (10.0, 1)]);
        let r = mss_reduce(&ds, DistanceKind::Euclidean).unwrap();
        assert_eq!(r.retained, vec![2, 3]);
        assert!(is_selective(&ds, &r.retained, DistanceKind::Euclidean).unwrap());
    }

    #[test]
    fn output_is_selective_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.gen_range(10..150);
            let ds = Dataset::new(
                (0..3 * n).map(|_| rng.gen::<f64>()).collect(),
                3,
                (0..n).map(|i| Label((i % 3) as u32)).collect(),
            )
            .unwrap();
            let r = mss_reduce(&ds, DistanceKind::Euclidean).unwrap();
            assert!(is_selective(&ds, &r.retained, DistanceKind::Euclidean).unwrap());
            assert!(crate::baselines::is_consistent(&ds, &r.retained, DistanceKind::Euclidean).unwrap());
        }
    }

    #[test]
    fn single_class_has_no_enemies() {
        let ds = line(&[(0.0, 0), (1.0, 0)]);
        assert!(matches!(mss_reduce(&ds, DistanceKind::Euclidean), Err(Error::NoEnemies)));
    }
}
