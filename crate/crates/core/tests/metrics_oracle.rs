//! Brute-force oracles for the metrics, plus invariants as properties.

use kgadapt::eval::{
    accuracy, average_ranks, f1_binary, matthews_corr, matthews_corr_multiclass, spearman_corr,
    ConfusionMatrix,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// MCC as the Pearson correlation between the one-hot encodings of golds
/// and predictions, flattened over all (example, class) cells.
fn mcc_oracle(preds: &[usize], golds: &[usize], k: usize) -> f64 {
    let n = preds.len();
    let hot = |v: &[usize]| -> Vec<Vec<f64>> {
        v.iter().map(|&c| (0..k).map(|j| (j == c) as u8 as f64).collect()).collect()
    };
    let (x, y) = (hot(golds), hot(preds));
    let mean = |m: &Vec<Vec<f64>>, j: usize| m.iter().map(|r| r[j]).sum::<f64>() / n as f64;
    let (mut cov, mut vx, mut vy) = (0.0, 0.0, 0.0);
    for j in 0..k {
        let (mx, my) = (mean(&x, j), mean(&y, j));
        for i in 0..n {
            cov += (x[i][j] - mx) * (y[i][j] - my);
            vx += (x[i][j] - mx).powi(2);
            vy += (y[i][j] - my).powi(2);
        }
    }
    if vx == 0.0 || vy == 0.0 {
        0.0
    } else {
        cov / (vx * vy).sqrt()
    }
}

fn f1_oracle(preds: &[usize], golds: &[usize]) -> f64 {
    let tp = preds.iter().zip(golds).filter(|(&p, &g)| p == 1 && g == 1).count() as f64;
    let pp = preds.iter().filter(|&&p| p == 1).count() as f64;
    let gp = golds.iter().filter(|&&g| g == 1).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let (p, r) = (tp / pp, tp / gp);
    2.0 * p * r / (p + r)
}

fn ranks_oracle(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let below = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        0.0
    } else {
        cov / (va * vb).sqrt()
    }
}

fn labels(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..k)).collect()
}

#[test]
fn confusion_counts_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let k = rng.random_range(2..=4);
        let (p, g) = (labels(&mut rng, n, k), labels(&mut rng, n, k));
        let cm = ConfusionMatrix::from_labels(&p, &g, k).unwrap();
        for gi in 0..k {
            for pi in 0..k {
                let brute = p.iter().zip(&g).filter(|(&a, &b)| a == pi && b == gi).count() as u64;
                assert_eq!(cm.get(gi, pi), brute);
            }
        }
        assert_eq!(cm.total(), n as u64);
    }
}

#[test]
fn binary_metrics_match_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let (p, g) = (labels(&mut rng, n, 2), labels(&mut rng, n, 2));
        assert!((matthews_corr(&p, &g).unwrap() - mcc_oracle(&p, &g, 2)).abs() <= 1e-12);
        assert!((f1_binary(&p, &g).unwrap() - f1_oracle(&p, &g)).abs() <= 1e-12);
        let acc = p.iter().zip(&g).filter(|(a, b)| a == b).count() as f64 / n as f64;
        assert!((accuracy(&p, &g).unwrap() - acc).abs() <= 1e-12);
    }
}

#[test]
fn multiclass_mcc_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        let k = rng.random_range(3..=5);
        let (p, g) = (labels(&mut rng, n, k), labels(&mut rng, n, k));
        let got = matthews_corr_multiclass(&p, &g, k).unwrap();
        assert!((got - mcc_oracle(&p, &g, k)).abs() <= 1e-12, "{got}");
    }
}

#[test]
fn spearman_matches_brute_force_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let n = rng.random_range(2..=200);
        // few distinct values so ties are common
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        assert_eq!(average_ranks(&x), ranks_oracle(&x));
        let s = spearman_corr(&x, &y).unwrap();
        let want = pearson(&ranks_oracle(&x), &ranks_oracle(&y));
        assert!((s.rho - want).abs() <= 1e-12);
    }
}

#[test]
fn worked_values() {
    // TP=3, TN=4, FP=1, FN=2
    let p = [1, 1, 1, 0, 0, 0, 0, 1, 0, 0];
    let g = [1, 1, 1, 0, 0, 0, 0, 0, 1, 1];
    assert!((matthews_corr(&p, &g).unwrap() - 10.0 / 600f64.sqrt()).abs() <= 1e-12);
    let s = spearman_corr(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    let want = pearson(&[1.0, 2.5, 2.5, 4.0], &[1.0, 2.0, 3.0, 4.0]);
    assert!((s.rho - want).abs() <= 1e-12);
    assert!((s.rho - 0.9486832980505138).abs() <= 1e-12);
}

fn paired(k: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..60).prop_flat_map(move |n| (prop::collection::vec(0..k, n), prop::collection::vec(0..k, n)))
}

proptest! {
    #[test]
    fn mcc_is_bounded_symmetric_and_order_free((p, g) in paired(3), shift in 0usize..60) {
        let m = matthews_corr_multiclass(&p, &g, 3).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&m));
        prop_assert!((m - matthews_corr_multiclass(&g, &p, 3).unwrap()).abs() <= 1e-12);
        let mut rp = p.clone();
        let mut rg = g.clone();
        let s = shift % p.len();
        rp.rotate_left(s);
        rg.rotate_left(s);
        prop_assert!((m - matthews_corr_multiclass(&rp, &rg, 3).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn perfect_predictions_score_one(g in prop::collection::vec(0usize..2, 2..80)) {
        prop_assume!(g.contains(&0) && g.contains(&1));
        prop_assert!((matthews_corr(&g, &g).unwrap() - 1.0).abs() <= 1e-12);
        prop_assert!((f1_binary(&g, &g).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn confusion_is_additive_over_partitions((p, g) in paired(2), cut in 0usize..60) {
        let c = cut.min(p.len());
        let mut a = ConfusionMatrix::from_labels(&p[..c], &g[..c], 2).unwrap();
        let b = ConfusionMatrix::from_labels(&p[c..], &g[c..], 2).unwrap();
        a.add(&b);
        prop_assert_eq!(a, ConfusionMatrix::from_labels(&p, &g, 2).unwrap());
    }

    #[test]
    fn spearman_ignores_monotone_transforms(
        x in prop::collection::vec(-50i32..50, 2..60),
        y_seed in any::<u64>(),
    ) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(y_seed);
        let y: Vec<f64> = x.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let base = spearman_corr(&x, &y).unwrap();
        let warped: Vec<f64> = x.iter().map(|v| (v / 10.0).exp() + 3.0 * v).collect();
        let moved = spearman_corr(&warped, &y).unwrap();
        prop_assert!((base.rho - moved.rho).abs() <= 1e-12);
        prop_assert_eq!(base.zero_variance, moved.zero_variance);
    }

    #[test]
    fn ranks_sum_to_triangular(x in prop::collection::vec(-5i32..5, 1..80)) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let n = x.len() as f64;
        let total: f64 = average_ranks(&x).iter().sum();
        prop_assert!((total - n * (n + 1.0) / 2.0).abs() <= 1e-9);
    }
}
