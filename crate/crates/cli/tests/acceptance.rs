//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line (written
//! straight to stderr so it shows even when output is captured) and fails its
//! test on violation. Criteria run one at a time so the timing criterion is
//! not disturbed by the others.

use std::collections::BTreeSet;
use std::io::Write;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use pif::baselines::{cnn_reduce, icf_reduce_with_stats, mss_reduce};
use pif::harness::{generate_synthetic, run_experiment_on, ExperimentSpec};
use pif::parallel::hardware_threads;
use pif::pif::{reduce_traced, PifTrace};
use pif::{
    build_table, run_reducer, stratified_reduce, wilson_edit, Dataset, DistanceKind, Error, Label, PifConfig,
    ReduceOptions, Reducer, Threads,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn report(criterion: u32, title: &str, outcome: &Result<String, String>, elapsed: Duration) {
    let (status, detail) = match outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!("criterion {criterion:>2} {status}  {title}: {detail} [{:.1}s]\n", elapsed.as_secs_f64());
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn criterion(n: u32, title: &str, body: impl FnOnce() -> Result<String, String>) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = body();
    report(n, title, &outcome, start.elapsed());
    if let Err(detail) = outcome {
        panic!("criterion {n} failed: {detail}");
    }
}

// ---------------------------------------------------------------------------
// fixtures
// ---------------------------------------------------------------------------

/// Random dataset with shuffled, gapped ids. On a coarse integer grid exact
/// distance ties are common, which exercises the id tie-break.
fn fuzz_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: u32, grid: bool) -> Dataset<f64> {
    let features: Vec<f64> = (0..n * d)
        .map(|_| if grid { f64::from(rng.gen_range(0..5)) } else { rng.gen::<f64>() })
        .collect();
    let mut labels: Vec<Label> = (0..n).map(|i| Label((i as u32) % classes)).collect();
    labels.shuffle(rng);
    let mut ids: Vec<usize> = (0..n).map(|i| 3 * i + 7).collect();
    ids.shuffle(rng);
    Dataset::with_ids(features, d, labels, ids).unwrap()
}

/// Two overlapping Gaussian-ish blobs per class so reductions have work to do.
fn blob_dataset(rng: &mut ChaCha8Rng, n: usize, d: usize, classes: u32) -> Dataset<f64> {
    let centers: Vec<Vec<f64>> = (0..classes).map(|_| (0..d).map(|_| rng.gen::<f64>() * 2.0).collect()).collect();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let c = (i as u32) % classes;
        for &center in &centers[c as usize] {
            let noise: f64 = (0..3).map(|_| rng.gen::<f64>() - 0.5).sum();
            features.push(center + noise);
        }
        labels.push(Label(c));
    }
    Dataset::new(features, d, labels).unwrap()
}

// ---------------------------------------------------------------------------
// naive references
// ---------------------------------------------------------------------------

fn naive_dist(a: &[f64], b: &[f64], kind: DistanceKind) -> f64 {
    match kind {
        DistanceKind::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
        DistanceKind::SquaredEuclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
        DistanceKind::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}

/// Every other row sorted by (distance, id).
fn naive_sorted(ds: &Dataset<f64>, i: usize, kind: DistanceKind) -> Vec<(f64, usize, usize)> {
    let mut all: Vec<(f64, usize, usize)> = (0..ds.len())
        .filter(|&j| j != i)
        .map(|j| (naive_dist(ds.row(i), ds.row(j), kind), ds.id(j), j))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    all
}

fn naive_enemy(ds: &Dataset<f64>, i: usize, kind: DistanceKind) -> Option<(f64, usize)> {
    naive_sorted(ds, i, kind)
        .into_iter()
        .find(|&(_, _, j)| ds.label(j) != ds.label(i))
        .map(|(d, _, j)| (d, j))
}

fn naive_vote(labels: &[Label]) -> Label {
    let mut counts = std::collections::HashMap::new();
    for l in labels {
        *counts.entry(*l).or_insert(0) += 1;
    }
    let best = *counts.values().max().unwrap();
    // tie: the tied class met first, i.e. owning the nearest neighbor
    *labels.iter().find(|l| counts[l] == best).unwrap()
}

fn naive_wilson(ds: &Dataset<f64>, k: usize, kind: DistanceKind) -> Vec<usize> {
    let mut kept: Vec<usize> = (0..ds.len())
        .filter(|&i| {
            let labels: Vec<Label> = naive_sorted(ds, i, kind).iter().take(k).map(|&(_, _, j)| ds.label(j)).collect();
            naive_vote(&labels) == ds.label(i)
        })
        .map(|i| ds.id(i))
        .collect();
    kept.sort_unstable();
    kept
}

fn pif_cfg(threads: Threads) -> PifConfig {
    PifConfig {
        threads,
        ..PifConfig::default()
    }
}

/// Rows of `ds` for a sorted id list.
fn rows(ds: &Dataset<f64>, ids: &[usize]) -> Vec<usize> {
    ds.rows_of(ids).unwrap()
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_neighbor_table_matches_naive_sort() {
    criterion(1, "neighbor table vs naive full sort", || {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let mut mismatches = Vec::new();
        for case in 0..200 {
            let n = rng.gen_range(2..=500);
            let d = rng.gen_range(1..=10);
            let classes = rng.gen_range(1..=4);
            let ds = fuzz_dataset(&mut rng, n, d, classes, case % 2 == 0);
            let k = rng.gen_range(1..=(n - 1).min(10));
            let kind = [DistanceKind::Euclidean, DistanceKind::SquaredEuclidean, DistanceKind::Manhattan][case % 3];
            let table = build_table(&ds, k, kind).map_err(|e| e.to_string())?;
            for i in 0..n {
                let sorted = naive_sorted(&ds, i, kind);
                let want: Vec<usize> = sorted.iter().take(k).map(|t| t.1).collect();
                let got: Vec<usize> = table.neighbors(i).iter().map(|&r| ds.id(r)).collect();
                let want_enemy = naive_enemy(&ds, i, kind).map(|(_, j)| ds.id(j));
                let got_enemy = table.enemy(i).map(|r| ds.id(r));
                if want != got || want_enemy != got_enemy {
                    mismatches.push(format!("case {case} row {i}: {got:?}/{got_enemy:?} vs {want:?}/{want_enemy:?}"));
                }
            }
        }
        if mismatches.is_empty() {
            Ok("200 datasets, exact id-level agreement".into())
        } else {
            Err(format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]))
        }
    });
}

/// PIF runs shared by criteria 2-4: (dataset, 1-thread trace, max-thread trace).
fn pif_fuzz_runs(count: usize, seed: u64, max_n: usize) -> Vec<(Dataset<f64>, PifTrace, PifTrace)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::new();
    while runs.len() < count {
        let n = rng.gen_range(20..=max_n);
        let d = rng.gen_range(1..=20);
        let classes = rng.gen_range(2..=4);
        let ds = if runs.len() % 3 == 0 {
            fuzz_dataset(&mut rng, n, d, classes, d <= 3)
        } else {
            blob_dataset(&mut rng, n, d, classes)
        };
        let one = reduce_traced(&ds, &pif_cfg(Threads::Fixed(1)));
        let many = reduce_traced(&ds, &pif_cfg(Threads::max()));
        match (one, many) {
            (Ok(a), Ok(b)) => runs.push((ds, a, b)),
            // degenerate draws (editing leaves one class) are skipped
            (Err(Error::NoEnemies | Error::EditingRemovedAll), _) => continue,
            (a, b) => panic!("unexpected PIF outcome: {:?} / {:?}", a.err(), b.err()),
        }
    }
    runs
}

#[test]
fn criterion_02_pif_parallel_determinism() {
    criterion(2, "PIF 1 thread vs max threads", || {
        let runs = pif_fuzz_runs(100, 202, 2000);
        let differing = runs.iter().filter(|(_, a, b)| a.result.retained != b.result.retained).count();
        if differing == 0 {
            Ok(format!("100 datasets identical (max threads = {})", hardware_threads()))
        } else {
            Err(format!("{differing} of 100 datasets differ"))
        }
    });
}

#[test]
fn criterion_03_partition_law() {
    criterion(3, "enemy partition law", || {
        let runs = pif_fuzz_runs(100, 303, 800);
        let mut violations = Vec::new();
        for (case, (ds, trace, _)) in runs.iter().enumerate() {
            let edited = ds.select_ids(&trace.edited).unwrap();
            let mut seen = BTreeSet::new();
            for (&enemy, members) in trace.partition.groups() {
                for &m in members {
                    if !seen.insert(m) {
                        violations.push(format!("case {case}: {m} in two groups"));
                    }
                    // every member's nearest enemy (within the edited set) is the group key
                    let row = edited.row_of(m).unwrap();
                    let want = naive_enemy(&edited, row, DistanceKind::Euclidean).map(|(_, j)| edited.id(j));
                    if want != Some(enemy) {
                        violations.push(format!("case {case}: {m} grouped under {enemy}, enemy is {want:?}"));
                    }
                }
            }
            let edited_set: BTreeSet<usize> = trace.edited.iter().copied().collect();
            if seen != edited_set {
                violations.push(format!("case {case}: union of groups differs from the edited set"));
            }
        }
        if violations.is_empty() {
            Ok(format!("{} runs, groups disjoint and covering the edited set", runs.len()))
        } else {
            Err(format!("{} violations, first: {}", violations.len(), violations[0]))
        }
    });
}

#[test]
fn criterion_04_removal_justification() {
    criterion(4, "filter removals justified", || {
        let runs = pif_fuzz_runs(100, 404, 800);
        let m = PifConfig::default().m;
        let mut violations = Vec::new();
        let mut removed_total = 0;
        let mut tie_exceptions = 0;
        for (case, (ds, trace, _)) in runs.iter().enumerate() {
            let filtered: BTreeSet<usize> = trace.filtered.iter().copied().collect();
            for (&enemy, members) in trace.partition.groups() {
                let ne = ds.row(ds.row_of(enemy).unwrap());
                let enemy_d = |id: usize| naive_dist(ds.row(ds.row_of(id).unwrap()), ne, DistanceKind::Euclidean);
                let witnesses = |y: usize| -> Vec<usize> {
                    let dy = enemy_d(y);
                    let yr = ds.row(ds.row_of(y).unwrap());
                    members
                        .iter()
                        .copied()
                        .filter(|&x| x != y)
                        .filter(|&x| {
                            let dyx = naive_dist(yr, ds.row(ds.row_of(x).unwrap()), DistanceKind::Euclidean);
                            dy >= dyx.max(enemy_d(x))
                        })
                        .collect()
                };
                for &y in members {
                    let w = witnesses(y);
                    if members.len() < m {
                        if filtered.contains(&y) {
                            violations.push(format!("case {case}: {y} removed from a group below m"));
                        }
                        continue;
                    }
                    if filtered.contains(&y) {
                        removed_total += 1;
                        if w.is_empty() {
                            violations.push(format!("case {case}: {y} removed without a witness"));
                        }
                    } else if !w.is_empty() {
                        // allowed only when each witness is a mutual one with a higher id
                        let mutual_higher = w.iter().all(|&x| x > y && witnesses(x).contains(&y));
                        if mutual_higher {
                            tie_exceptions += 1;
                        } else {
                            violations.push(format!("case {case}: {y} kept despite witnesses {w:?}"));
                        }
                    }
                }
            }
            let retained: BTreeSet<usize> = trace.result.retained.iter().copied().collect();
            let expect: BTreeSet<usize> = trace.edited.iter().copied().filter(|id| !filtered.contains(id)).collect();
            if retained != expect {
                violations.push(format!("case {case}: retained != edited minus filtered"));
            }
        }
        if violations.is_empty() {
            Ok(format!(
                "{} runs, {removed_total} removals verified, {tie_exceptions} symmetric-tie keeps",
                runs.len()
            ))
        } else {
            Err(format!("{} violations, first: {}", violations.len(), violations[0]))
        }
    });
}

#[test]
fn criterion_05_editing_matches_naive_reference() {
    criterion(5, "Wilson editing vs naive leave-one-out 3-NN", || {
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let mut mismatches = Vec::new();
        for case in 0..200 {
            let n = rng.gen_range(4..=300);
            let d = rng.gen_range(1..=8);
            let classes = rng.gen_range(1..=4);
            let ds = fuzz_dataset(&mut rng, n, d, classes, case % 2 == 0);
            let want = naive_wilson(&ds, 3, DistanceKind::Euclidean);
            match wilson_edit(&ds, 3, DistanceKind::Euclidean) {
                Ok(got) if got == want => {}
                Err(Error::EditingRemovedAll) if want.is_empty() => {}
                Ok(got) => mismatches.push(format!("case {case}: {} kept vs {} expected", got.len(), want.len())),
                Err(e) => mismatches.push(format!("case {case}: {e}")),
            }
        }
        if mismatches.is_empty() {
            Ok("200 datasets, exact agreement".into())
        } else {
            Err(format!("{} mismatches, first: {}", mismatches.len(), mismatches[0]))
        }
    });
}

#[test]
fn criterion_06_baseline_postconditions() {
    criterion(6, "CNN consistent, MSS selective, ICF terminates", || {
        let kind = DistanceKind::Euclidean;
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let mut violations = Vec::new();
        let mut max_iter_ratio: f64 = 0.0;
        for case in 0..50 {
            let n = rng.gen_range(10..=400);
            let d = rng.gen_range(1..=6);
            let classes = rng.gen_range(2..=4);
            let ds = if case % 2 == 0 {
                fuzz_dataset(&mut rng, n, d, classes, false)
            } else {
                blob_dataset(&mut rng, n, d, classes)
            };

            // CNN: the nearest subset member of every instance shares its label
            let cnn = cnn_reduce(&ds, kind, case).map_err(|e| e.to_string())?;
            let subset = rows(&ds, &cnn.retained);
            let in_subset: BTreeSet<usize> = subset.iter().copied().collect();
            for i in (0..n).filter(|i| !in_subset.contains(i)) {
                let nearest = subset
                    .iter()
                    .map(|&s| (naive_dist(ds.row(i), ds.row(s), kind), ds.id(s), s))
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
                    .unwrap();
                if ds.label(nearest.2) != ds.label(i) {
                    violations.push(format!("CNN case {case}: id {} misclassified", ds.id(i)));
                }
            }

            // MSS: a same-class subset member strictly closer than the nearest enemy
            let mss = mss_reduce(&ds, kind).map_err(|e| e.to_string())?;
            let subset = rows(&ds, &mss.retained);
            for i in 0..n {
                let (ed, _) = naive_enemy(&ds, i, kind).unwrap();
                let ok = subset
                    .iter()
                    .any(|&s| ds.label(s) == ds.label(i) && (s == i || naive_dist(ds.row(i), ds.row(s), kind) < ed));
                if !ok {
                    violations.push(format!("MSS case {case}: id {} not covered", ds.id(i)));
                }
            }

            // ICF: terminates within n rounds
            match icf_reduce_with_stats(&ds, 3, kind) {
                Ok(out) => {
                    max_iter_ratio = max_iter_ratio.max(out.iterations as f64 / n as f64);
                    if out.iterations > n {
                        violations.push(format!("ICF case {case}: {} rounds for n={n}", out.iterations));
                    }
                }
                Err(Error::NoEnemies | Error::EditingRemovedAll) => {}
                Err(e) => violations.push(format!("ICF case {case}: {e}")),
            }
        }
        if violations.is_empty() {
            Ok(format!("50 datasets each, max ICF rounds/n = {max_iter_ratio:.3}"))
        } else {
            Err(format!("{} violations, first: {}", violations.len(), violations[0]))
        }
    });
}

#[derive(Default, Clone, Copy)]
struct Cell {
    acc: f64,
    storage: f64,
}

#[test]
fn criterion_07_trend_on_synthetic_data() {
    criterion(7, "trend on synthetic two-Gaussian data", || {
        let sizes = [2_000usize, 5_000, 10_000, 20_000];
        let seeds = 10u64;
        let algorithms = vec![Reducer::None, Reducer::pif(), Reducer::Icf { k: 3 }];
        // [size][algorithm] sums over seeds
        let mut sums = vec![[Cell::default(); 3]; sizes.len()];
        for (si, &n) in sizes.iter().enumerate() {
            for seed in 0..seeds {
                let ds: Dataset<f64> = generate_synthetic(n, 10, 3.0, 0.05, seed).map_err(|e| e.to_string())?;
                let spec = ExperimentSpec {
                    repetitions: 1,
                    seed,
                    ..ExperimentSpec::new("synthetic", algorithms.clone())
                };
                let report = run_experiment_on(&ds, &spec, "synthetic").map_err(|e| e.to_string())?;
                for (ai, alg) in report.algorithms.iter().enumerate() {
                    let (Some(acc), Some(storage)) = (alg.mean_accuracy, alg.mean_storage) else {
                        return Err(format!("{} failed at n={n}, seed={seed}: {:?}", alg.name, alg.runs[0].error));
                    };
                    sums[si][ai].acc += acc;
                    sums[si][ai].storage += storage;
                }
            }
        }
        let mean = |si: usize, ai: usize| Cell {
            acc: sums[si][ai].acc / seeds as f64,
            storage: sums[si][ai].storage / seeds as f64,
        };
        let mut table = String::new();
        let mut failures = Vec::new();
        for (si, &n) in sizes.iter().enumerate() {
            let (knn, pif, icf) = (mean(si, 0), mean(si, 1), mean(si, 2));
            let (pif_ratio, icf_ratio) = (pif.acc / pif.storage, icf.acc / icf.storage);
            table.push_str(&format!(
                "\n    n={n:>5}  KNN {:.2}  PIF {:.2}/{:.2} (ratio {:.2})  ICF {:.2}/{:.2} (ratio {:.2})",
                knn.acc, pif.acc, pif.storage, pif_ratio, icf.acc, icf.storage, icf_ratio
            ));
            if (pif.acc - knn.acc).abs() > 3.0 {
                failures.push(format!("(b) n={n}: PIF acc {:.2} vs KNN {:.2}", pif.acc, knn.acc));
            }
            if pif_ratio <= icf_ratio {
                failures.push(format!("(c) n={n}: PIF ratio {pif_ratio:.2} <= ICF {icf_ratio:.2}"));
            }
        }
        let drop = mean(0, 1).storage - mean(sizes.len() - 1, 1).storage;
        if drop < 3.0 {
            failures.push(format!("(a) PIF storage fell only {drop:.2} points from 2K to 20K"));
        }
        if failures.is_empty() {
            Ok(format!("PIF storage drop {drop:.2} points{table}"))
        } else {
            Err(format!("{}{table}", failures.join("; ")))
        }
    });
}

#[test]
fn criterion_08_stratification_identity() {
    criterion(8, "stratified reduce with one subset equals direct", || {
        let ds: Dataset<f64> = generate_synthetic(2000, 5, 2.0, 0.05, 8).unwrap();
        let opts = ReduceOptions {
            seed: 11,
            ..ReduceOptions::default()
        };
        let mut different = Vec::new();
        for reducer in [Reducer::pif(), Reducer::Cnn, Reducer::Drop3 { k: 3 }, Reducer::Icf { k: 3 }, Reducer::Mss] {
            let direct = run_reducer(&ds, &reducer, &opts).map_err(|e| e.to_string())?;
            let strat = stratified_reduce(&ds, &reducer, &opts, ds.len(), 99).map_err(|e| e.to_string())?;
            if direct.retained != strat.retained {
                different.push(reducer.display_name());
            }
        }
        if different.is_empty() {
            Ok("PIF, CNN, DROP3, ICF, MSS identical on n=2000".into())
        } else {
            Err(format!("differs for {different:?}"))
        }
    });
}

#[test]
fn criterion_09_performance_envelope() {
    criterion(9, "PIF on n=20000, d=75: time and speedup", || {
        let ds: Dataset<f64> = generate_synthetic(20_000, 75, 3.0, 0.05, 9).unwrap();
        let time = |threads: Threads| {
            let start = Instant::now();
            let r = reduce_traced(&ds, &pif_cfg(threads)).map(|t| t.result.retained);
            (start.elapsed(), r)
        };
        let (t1, r1) = time(Threads::Fixed(1));
        let (tn, rn) = time(Threads::max());
        let (r1, rn) = (r1.map_err(|e| e.to_string())?, rn.map_err(|e| e.to_string())?);
        let hw = hardware_threads();
        let speedup = t1.as_secs_f64() / tn.as_secs_f64();
        let detail = format!(
            "1 thread {:.1}s, {hw} threads {:.1}s, speedup {speedup:.2}x",
            t1.as_secs_f64(),
            tn.as_secs_f64()
        );
        let mut failures = Vec::new();
        if r1 != rn {
            failures.push("results differ between thread counts".to_string());
        }
        if tn > Duration::from_secs(600) {
            failures.push("over 10 minutes".to_string());
        }
        if hw < 8 {
            failures.push(format!("only {hw} hardware thread(s), 8 required"));
        }
        if speedup < 2.0 {
            failures.push("speedup below 2x".to_string());
        }
        if failures.is_empty() {
            Ok(detail)
        } else {
            Err(format!("{detail}; {}", failures.join("; ")))
        }
    });
}

#[test]
fn criterion_10_experiment_reports_are_byte_identical() {
    criterion(10, "experiment command reproducible", || {
        let dir = tempfile::tempdir().unwrap();
        let data: Dataset<f64> = generate_synthetic(1500, 4, 2.0, 0.05, 10).unwrap();
        pif::dataset::save_csv(&data, dir.path().join("data.csv")).unwrap();
        std::fs::write(
            dir.path().join("spec.json"),
            r#"{"dataset":"data.csv","repetitions":3,"seed":42,"stratify":500,
                "algorithms":[{"algo":"none"},{"algo":"pif"},{"algo":"cnn"},{"algo":"drop3"},{"algo":"icf"},{"algo":"mss"}]}"#,
        )
        .unwrap();
        let run = |out: &str| {
            let o = Command::new(env!("CARGO_BIN_EXE_pif"))
                .args(["experiment", "--spec"])
                .arg(dir.path().join("spec.json"))
                .arg("--out-dir")
                .arg(dir.path().join(out))
                .output()
                .unwrap();
            if o.status.success() {
                Ok(())
            } else {
                Err(String::from_utf8_lossy(&o.stderr).into_owned())
            }
        };
        run("a")?;
        run("b")?;
        let mut differing = Vec::new();
        for f in ["report.json", "report.csv", "report_runs.csv"] {
            let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
            let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
            if a != b {
                differing.push(f);
            }
        }
        if differing.is_empty() {
            Ok("report.json, report.csv, report_runs.csv identical".into())
        } else {
            Err(format!("{differing:?} differ"))
        }
    });
}
