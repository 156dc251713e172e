//! Oracle checks for the P construction: the Euclidean reduction to
//! straight-line Gaussian SNE, diffusion-time scale covariance, and
//! sparse/dense agreement.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use riesne_core::affinity::{build_p, calibrate_row, PMode};
use riesne_core::{DatasetTable, Manifold, Point};

fn random_cloud(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        })
        .collect()
}

fn euclid_table(rows: &[Vec<f64>]) -> DatasetTable {
    let m = Manifold::Euclidean(rows[0].len());
    let pts = rows.iter().map(|r| Point::new(m, DVector::from_row_slice(r)).unwrap()).collect();
    DatasetTable::new(m, pts, None, None).unwrap()
}

/// Straight-line Gaussian SNE oracle: per-row binary search over σ² on the
/// plain Gaussian similarity, direct arithmetic, no volume ratios, no
/// log-space tricks. Independent of the heat-kernel code path.
fn gaussian_sne_p(rows: &[Vec<f64>], perplexity: f64) -> DMatrix<f64> {
    let n = rows.len();
    let d2 = |a: &[f64], b: &[f64]| -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let target_bits = perplexity.log2();
    let mut cond = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut sigma2 = 1.0_f64;
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        let mut probs = vec![0.0; n];
        for _ in 0..100 {
            let mut sum = 0.0;
            for j in 0..n {
                probs[j] = if j == i {
                    0.0
                } else {
                    (-d2(&rows[i], &rows[j]) / (2.0 * sigma2)).exp()
                };
                sum += probs[j];
            }
            let mut entropy = 0.0;
            for p in probs.iter_mut() {
                *p /= sum;
                if *p > 0.0 {
                    entropy -= *p * p.log2();
                }
            }
            let diff = entropy - target_bits;
            if diff.abs() <= 1e-5 {
                break;
            }
            if diff < 0.0 {
                lo = sigma2;
                sigma2 = if hi.is_infinite() { sigma2 * 2.0 } else { 0.5 * (sigma2 + hi) };
            } else {
                hi = sigma2;
                sigma2 = if lo.is_infinite() { sigma2 * 0.5 } else { 0.5 * (sigma2 + lo) };
            }
        }
        for j in 0..n {
            cond[(i, j)] = probs[j];
        }
    }
    (&cond + cond.transpose()) / (2.0 * n as f64)
}

#[test]
fn dense_p_on_euclidean_data_equals_gaussian_sne() {
    let rows = random_cloud(120, 6, 2024);
    let data = euclid_table(&rows);
    let (p, report) = build_p(&data, 12.0, PMode::Dense).unwrap();
    assert!(report.all_converged());
    let oracle = gaussian_sne_p(&rows, 12.0);
    let n = rows.len();
    for i in 0..n {
        for j in 0..n {
            assert!(
                (p.get(i, j) - oracle[(i, j)]).abs() < 1e-8,
                "P[{i},{j}] = {} vs oracle {}",
                p.get(i, j),
                oracle[(i, j)]
            );
        }
    }
}

/// Tight bisection (1e-12 bracket) over t for one row with fixed volume
/// ratios; the converged model solution, independent of the Alg-style
/// stepping.
fn tight_fit(dists: &[f64], log_h0: &[f64], target: f64) -> (f64, Vec<f64>) {
    let bits = target.log2();
    let row = |t: f64| -> (Vec<f64>, f64) {
        let ws: Vec<f64> =
            dists.iter().zip(log_h0).map(|(&d, &lh)| (lh - d * d / (2.0 * t)).exp()).collect();
        let z: f64 = ws.iter().sum();
        let probs: Vec<f64> = ws.iter().map(|w| w / z).collect();
        let h = -probs.iter().filter(|p| **p > 0.0).map(|p| p * p.log2()).sum::<f64>();
        (probs, h)
    };
    let mut lo = 1.0;
    while row(lo).1 > bits {
        lo *= 0.5;
    }
    let mut hi = 1.0;
    while row(hi).1 < bits {
        hi *= 2.0;
    }
    while (hi - lo) / hi > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if row(mid).1 < bits {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    (t, row(t).0)
}

#[test]
fn diffusion_time_scales_with_squared_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(5150);
    for case in 0..20 {
        let m = 20;
        let dists: Vec<f64> = (0..m)
            .map(|_| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng).abs()
                    + 0.1
            })
            .collect();
        let log_h0: Vec<f64> = (0..m)
            .map(|_| 0.3 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
            .collect();
        let s = 0.25 + (case as f64) * 0.35;
        let scaled: Vec<f64> = dists.iter().map(|d| d * s).collect();

        // Model-level covariance at the converged solution: t scales by s²
        // and the probability rows are unchanged.
        let (t1, p1) = tight_fit(&dists, &log_h0, 7.0);
        let (t2, p2) = tight_fit(&scaled, &log_h0, 7.0);
        assert!(
            (t2 / t1 - s * s).abs() < 1e-6 * s * s,
            "t ratio {} vs s² {}",
            t2 / t1,
            s * s
        );
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-7, "row changed under scaling: {a} vs {b}");
        }

        // The 100-step search stops anywhere inside the entropy tolerance
        // band, so it tracks the same law more loosely.
        let r1 = calibrate_row(&dists, &log_h0, 3, 7.0).unwrap();
        let r2 = calibrate_row(&scaled, &log_h0, 3, 7.0).unwrap();
        assert!(r1.converged && r2.converged);
        assert!((r2.t / r1.t / (s * s) - 1.0).abs() < 1e-2);
        for (a, b) in r1.probs.iter().zip(&r2.probs) {
            assert!((a - b).abs() < 2e-4);
        }
    }
}

#[test]
fn sparse_with_full_neighborhood_equals_dense() {
    let rows = random_cloud(200, 4, 77);
    let data = euclid_table(&rows);
    let (dense, _) = build_p(&data, 10.0, PMode::Dense).unwrap();
    let (sparse, _) =
        build_p(&data, 10.0, PMode::Sparse { neighbors: Some(199), seed: 3 }).unwrap();
    assert!(sparse.is_sparse());
    for i in 0..200 {
        for j in 0..200 {
            assert!(
                (dense.get(i, j) - sparse.get(i, j)).abs() < 1e-10,
                "sparse/dense mismatch at ({i},{j})"
            );
        }
    }
}

#[test]
fn sparse_path_on_spd_data() {
    // Rolling-style SPD(2) points along a smooth curve.
    let m = Manifold::Spd(2);
    let pts: Vec<Point> = (0..40)
        .map(|i| {
            let a = 1.0 + 0.05 * i as f64;
            let b = 0.2 * (i as f64 * 0.3).sin();
            Point::new(m, DVector::from_row_slice(&[a, b, b, 1.0 / a + 0.5])).unwrap()
        })
        .collect();
    let data = DatasetTable::new(m, pts, None, None).unwrap();
    let (p, report) = build_p(&data, 5.0, PMode::Sparse { neighbors: None, seed: 1 }).unwrap();
    assert!(report.all_converged());
    let total = p.sum();
    assert!((total - 1.0).abs() < 1e-8, "sparse SPD P sums to {total}");
}
