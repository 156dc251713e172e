//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! Timed criteria share a lock so wall-clock bounds are not skewed by the
//! harness running tests in parallel.

use std::sync::Mutex;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use riesne::{fixtures, ingest, metrics};
use riesne_core::affinity::{build_p, PMode, PERPLEXITY_TOLERANCE};
use riesne_core::embedding::{
    build_q, init_embedding, kl_cost, kl_gradient, kl_gradient_barnes_hut, optimize,
    EmbeddingState, OptimizerConfig, SimilarityFamily, TargetSpace,
};
use riesne_core::geometry::{self, dist, exp_map, log_map, Point};
use riesne_core::neighbors::{brute_knn, VpTree};
use riesne_core::tangent_pca::fit_tangent_pca;
use riesne_core::{DatasetTable, Manifold};

static SERIAL: Mutex<()> = Mutex::new(());

fn pass(n: usize, what: &str) {
    println!("[acceptance] criterion {n} ({what}): PASS");
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

fn random_table(manifold: Manifold, n: usize, seed: u64) -> DatasetTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point> = (0..n)
        .map(|_| match manifold {
            Manifold::Euclidean(d) => {
                Point::new(manifold, DVector::from_fn(d, |_, _| normal(&mut rng))).unwrap()
            }
            Manifold::Sphere(d) => {
                Point::project(manifold, &DVector::from_fn(d, |_, _| normal(&mut rng))).unwrap()
            }
            Manifold::Spd(side) => {
                let a = DMatrix::from_fn(side, side, |_, _| 0.5 * normal(&mut rng));
                let m = &a * a.transpose() + DMatrix::identity(side, side) * 0.2;
                let flat = DVector::from_fn(side * side, |k, _| m[(k / side, k % side)]);
                Point::new(manifold, flat).unwrap()
            }
        })
        .collect();
    DatasetTable::new(manifold, points, None, None).unwrap()
}

// ── 1. perplexity calibration ───────────────────────────────────────────

#[test]
fn criterion_1_perplexity_calibration() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let start = Instant::now();
    let target_bits = 30.0_f64.log2();
    for (manifold, seed) in [
        (Manifold::Euclidean(10), 101u64),
        (Manifold::Sphere(10), 102),
        (Manifold::Spd(4), 103),
    ] {
        let data = random_table(manifold, 500, seed);
        let (_, report) = build_p(&data, 30.0, PMode::Dense).unwrap();
        assert!(
            report.all_converged(),
            "{manifold:?}: rows {:?} missed the tolerance",
            report.unconverged
        );
        for (i, p) in report.perplexity.iter().enumerate() {
            let gap = (p.log2() - target_bits).abs();
            assert!(
                gap <= PERPLEXITY_TOLERANCE,
                "{manifold:?} row {i}: |H - log2(30)| = {gap:.2e}"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "calibration took {elapsed:?}");
    pass(1, "perplexity calibration on R10/S9/SPD(4), 500 points each");
}

// ── 2. Euclidean reduction oracle ───────────────────────────────────────

/// Independent straight-line Gaussian-SNE P: per-row binary search over σ²
/// on the plain Gaussian similarity, direct arithmetic.
fn gaussian_sne_p(rows: &[Vec<f64>], perplexity: f64) -> DMatrix<f64> {
    let n = rows.len();
    let d2 =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };
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
                probs[j] =
                    if j == i { 0.0 } else { (-d2(&rows[i], &rows[j]) / (2.0 * sigma2)).exp() };
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
fn criterion_2_euclidean_reduction_oracle() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let rows: Vec<Vec<f64>> =
        (0..200).map(|_| (0..8).map(|_| normal(&mut rng)).collect()).collect();
    let m = Manifold::Euclidean(8);
    let pts: Vec<Point> =
        rows.iter().map(|r| Point::new(m, DVector::from_row_slice(r)).unwrap()).collect();
    let data = DatasetTable::new(m, pts, None, None).unwrap();
    let (p, report) = build_p(&data, 30.0, PMode::Dense).unwrap();
    assert!(report.all_converged());
    let oracle = gaussian_sne_p(&rows, 30.0);
    let mut worst = 0.0_f64;
    for i in 0..200 {
        for j in 0..200 {
            worst = worst.max((p.get(i, j) - oracle[(i, j)]).abs());
        }
    }
    assert!(worst < 1e-8, "worst entrywise gap {worst:.2e}");
    pass(2, "dense P equals the Gaussian-SNE oracle entrywise within 1e-8");
}

// ── 3. VP-tree exactness ────────────────────────────────────────────────

#[test]
fn criterion_3_vp_tree_exactness() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    for (manifold, seed) in [
        (Manifold::Euclidean(6), 301u64),
        (Manifold::Sphere(5), 302),
        (Manifold::Spd(3), 303),
    ] {
        let data = random_table(manifold, 1000, seed);
        let tree = VpTree::build(&data, 7).unwrap();
        tree.validate().unwrap();
        for k in [1usize, 10, 90] {
            let brute = brute_knn(&data, k).unwrap();
            for q in 0..1000 {
                let fast = tree.knn(q, k).unwrap();
                let fast_idx: Vec<usize> = fast.iter().map(|nb| nb.index).collect();
                let brute_idx: Vec<usize> = brute[q].iter().map(|nb| nb.index).collect();
                assert_eq!(fast_idx, brute_idx, "{manifold:?} q={q} k={k}");
            }
        }
    }
    pass(3, "vp_query equals brute_knn on 1000-point fixtures, k in {1,10,90}");
}

// ── 4. gradient correctness ─────────────────────────────────────────────

fn fd_check(target: &TargetSpace, seed: u64) {
    let manifold = target.manifold();
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = manifold.coord_len();
    let pts: Vec<DVector<f64>> = (0..n)
        .map(|_| {
            let v = DVector::from_fn(dim, |_, _| normal(&mut rng));
            match manifold {
                Manifold::Sphere(_) => v.normalize(),
                _ => v * 0.7,
            }
        })
        .collect();
    let state = EmbeddingState::new(manifold, pts).unwrap();
    let p = {
        let other: Vec<DVector<f64>> = (0..n)
            .map(|_| {
                let v = DVector::from_fn(dim, |_, _| normal(&mut rng));
                match manifold {
                    Manifold::Sphere(_) => v.normalize(),
                    _ => v * 0.7,
                }
            })
            .collect();
        build_q(&EmbeddingState::new(manifold, other).unwrap(), target).unwrap()
    };

    let grads = kl_gradient(&p, &state, target).unwrap();
    let cost = |pts: Vec<DVector<f64>>| -> f64 {
        let s = EmbeddingState::new(manifold, pts).unwrap();
        kl_cost(&p, &build_q(&s, target).unwrap()).unwrap()
    };
    let h = 1e-5;
    let mut pairs = Vec::new();
    for i in 0..n {
        match manifold {
            Manifold::Euclidean(d) => {
                for c in 0..d {
                    let mut plus = state.coords().to_vec();
                    plus[i][c] += h;
                    let mut minus = state.coords().to_vec();
                    minus[i][c] -= h;
                    pairs.push((grads[i][c], (cost(plus) - cost(minus)) / (2.0 * h)));
                }
            }
            Manifold::Sphere(_) => {
                let base = Point::new(manifold, state.coords()[i].clone()).unwrap();
                for b in geometry::tangent_basis(&base) {
                    let dir = b.coords();
                    let mut plus = state.coords().to_vec();
                    plus[i] = (&plus[i] + dir * h).normalize();
                    let mut minus = state.coords().to_vec();
                    minus[i] = (&minus[i] - dir * h).normalize();
                    pairs.push((grads[i].dot(dir), (cost(plus) - cost(minus)) / (2.0 * h)));
                }
            }
            Manifold::Spd(_) => unreachable!(),
        }
    }
    let scale = pairs.iter().map(|(_, fd)| fd.abs()).fold(0.0_f64, f64::max);
    for (a, fd) in pairs {
        let rel = (a - fd).abs() / fd.abs().max(1e-6 * scale);
        assert!(rel < 1e-5, "{:?}: {a} vs fd {fd} (rel {rel:.2e})", target.family());
    }
}

#[test]
fn criterion_4_gradient_matches_finite_differences() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    fd_check(&TargetSpace::new(Manifold::Euclidean(2), SimilarityFamily::StudentT).unwrap(), 41);
    fd_check(&TargetSpace::new(Manifold::Sphere(3), SimilarityFamily::VonMisesFisher).unwrap(), 42);
    fd_check(&TargetSpace::new(Manifold::Euclidean(2), SimilarityFamily::Brownian).unwrap(), 43);
    fd_check(&TargetSpace::new(Manifold::Sphere(3), SimilarityFamily::Brownian).unwrap(), 44);
    pass(4, "exact gradients match central differences (rel < 1e-5, all families)");
}

// ── 5. Barnes-Hut fidelity ──────────────────────────────────────────────

fn two_blob_table(n: usize, dim: usize, seed: u64) -> DatasetTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = Manifold::Euclidean(dim);
    let pts: Vec<Point> = (0..n)
        .map(|i| {
            let offset = if i % 2 == 0 { 4.0 } else { -4.0 };
            let mut v = DVector::from_fn(dim, |_, _| normal(&mut rng));
            v[0] += offset;
            Point::new(m, v).unwrap()
        })
        .collect();
    DatasetTable::new(m, pts, None, None).unwrap()
}

#[test]
fn criterion_5_barnes_hut_fidelity_and_speed() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let target = TargetSpace::new(Manifold::Euclidean(2), SimilarityFamily::StudentT).unwrap();

    // (a) theta = 0 reproduces the exact gradient within 1e-10.
    let data = two_blob_table(2000, 10, 501);
    let (p, _) = build_p(&data, 30.0, PMode::Sparse { neighbors: None, seed: 5 }).unwrap();
    let mid = optimize(
        &p,
        &target,
        &OptimizerConfig { iters: 30, exaggeration_iters: 30, ..OptimizerConfig::default() },
    )
    .unwrap()
    .state;
    let exact = kl_gradient(&p, &mid, &target).unwrap();
    let bh0 = kl_gradient_barnes_hut(&p, &mid, 0.0).unwrap();
    for (a, b) in exact.iter().zip(&bh0) {
        let rel = (a - b).norm() / a.norm().max(1e-30);
        assert!(rel < 1e-10, "theta=0 deviation {rel:.2e}");
    }

    // (b) theta = 0.5 per-point relative error < 1e-2. The denominator is
    // floored at the instance RMS gradient: a few 2-D gradients cancel to
    // near zero by chance and would amplify noise; points at or above the
    // RMS are additionally held to the plain ratio.
    let bh5 = kl_gradient_barnes_hut(&p, &mid, 0.5).unwrap();
    let rms = (exact.iter().map(|g| g.norm_squared()).sum::<f64>() / exact.len() as f64).sqrt();
    let mut worst = 0.0_f64;
    for (a, b) in exact.iter().zip(&bh5) {
        worst = worst.max((a - b).norm() / a.norm().max(rms));
        if a.norm() >= rms {
            assert!((a - b).norm() / a.norm() < 1e-2);
        }
    }
    assert!(worst < 1e-2, "worst theta=0.5 per-point error {worst:.2e}");

    // (c) BH at n=5000 is at least 5x faster than the exact gradient.
    let big = two_blob_table(5000, 10, 502);
    let (p_big, _) = build_p(&big, 30.0, PMode::Sparse { neighbors: None, seed: 6 }).unwrap();
    let state = optimize(
        &p_big,
        &target,
        &OptimizerConfig { iters: 20, exaggeration_iters: 20, ..OptimizerConfig::default() },
    )
    .unwrap()
    .state;
    let time = |f: &dyn Fn() -> Vec<DVector<f64>>| {
        let _ = f(); // warm-up
        let start = Instant::now();
        let _ = f();
        let _ = f();
        start.elapsed().as_secs_f64() / 2.0
    };
    let t_exact = time(&|| kl_gradient(&p_big, &state, &target).unwrap());
    let t_bh = time(&|| kl_gradient_barnes_hut(&p_big, &state, 0.5).unwrap());
    assert!(
        t_exact >= 5.0 * t_bh,
        "exact {t_exact:.4}s vs Barnes-Hut {t_bh:.4}s (ratio {:.1})",
        t_exact / t_bh
    );
    pass(5, "Barnes-Hut: exact at theta=0, <1e-2 at theta=0.5, >=5x speedup at n=5000");
}

// ── 6. desk-scale spherical digits ──────────────────────────────────────

#[test]
fn criterion_6_spherical_digits_beat_tangent_pca() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let start = Instant::now();
    // 600 synthetic 24x24 "images" of 6 classes projected to the sphere.
    // The noise level leaves classes cleanly separable under the full
    // spherical geometry while overlapping them in any linear 2-D view.
    let data = fixtures::spherical_digits(100, 6, 576, 0.15, 601).unwrap();
    let labels = data.labels().unwrap().to_vec();

    let (p, report) = build_p(&data, 30.0, PMode::Dense).unwrap();
    assert!(report.all_converged());
    let target = TargetSpace::new(Manifold::Euclidean(2), SimilarityFamily::StudentT).unwrap();
    let config = OptimizerConfig { seed: 6, ..OptimizerConfig::default() };
    let result = optimize(&p, &target, &config).unwrap();

    // (a) the optimizer actually reduced the cost.
    let init = init_embedding(data.len(), &target, config.seed).unwrap();
    let initial_kl = kl_cost(&p, &build_q(&init, &target).unwrap()).unwrap();
    let final_kl = kl_cost(&p, &build_q(&result.state, &target).unwrap()).unwrap();
    assert!(final_kl < initial_kl, "KL {initial_kl} -> {final_kl}");

    // (b) 10-NN label accuracy of the embedding >= 0.80.
    let embedded = DatasetTable::from_rows(
        Manifold::Euclidean(2),
        result.state.coords(),
        false,
        Some(labels.clone()),
        None,
    )
    .unwrap();
    let acc = metrics::knn_label_accuracy(&embedded, 10).unwrap();
    assert!(acc >= 0.80, "embedding 10-NN accuracy {acc}");

    // (c) strictly better than tangent PCA to the plane on the same data.
    let pca = fit_tangent_pca(&data, 2).unwrap();
    let projected = pca.transform(&data).unwrap();
    let pca_rows: Vec<DVector<f64>> =
        (0..projected.nrows()).map(|i| projected.row(i).transpose()).collect();
    let pca_table =
        DatasetTable::from_rows(Manifold::Euclidean(2), &pca_rows, false, Some(labels), None)
            .unwrap();
    let pca_acc = metrics::knn_label_accuracy(&pca_table, 10).unwrap();
    assert!(
        acc > pca_acc,
        "embedding accuracy {acc} must exceed tangent PCA accuracy {pca_acc}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "pipeline took {elapsed:?}");
    println!(
        "[acceptance]   digits: embedding accuracy {acc:.3}, tangent PCA {pca_acc:.3}, \
         KL {initial_kl:.3} -> {final_kl:.3}, {elapsed:?}"
    );
    pass(6, "spherical digits: accuracy >= 0.80 and above tangent PCA");
}

// ── 7. SPD rolling-covariance pipeline ──────────────────────────────────

#[test]
fn criterion_7_spd_pipeline_preserves_temporal_structure() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let (prices, ids) = fixtures::synthetic_prices(600, 10, 701);
    let data = ingest::rolling_covariance(&prices, &ids, 20).unwrap();
    assert_eq!(data.len(), 581);
    assert_eq!(data.manifold(), Manifold::Spd(10));

    let (p, report) = build_p(&data, 20.0, PMode::Dense).unwrap();
    assert!(report.all_converged());

    // Planar embedding.
    let plane = TargetSpace::new(Manifold::Euclidean(2), SimilarityFamily::StudentT).unwrap();
    let config = OptimizerConfig { iters: 1000, seed: 7, ..OptimizerConfig::default() };
    let planar = optimize(&p, &plane, &config).unwrap();
    let emb2 =
        DatasetTable::from_rows(Manifold::Euclidean(2), planar.state.coords(), false, None, None)
            .unwrap();
    let trust = metrics::trustworthiness(&data, &emb2, 10).unwrap();
    assert!(trust >= 0.90, "trustworthiness {trust}");

    // Spherical embedding completes: on-manifold, finite, improving.
    let sphere = TargetSpace::new(Manifold::Sphere(3), SimilarityFamily::VonMisesFisher).unwrap();
    let spherical = optimize(&p, &sphere, &config).unwrap();
    for y in spherical.state.coords() {
        assert!((y.norm() - 1.0).abs() < 1e-9);
        assert!(y.iter().all(|c| c.is_finite()));
    }
    let s_init = init_embedding(data.len(), &sphere, config.seed).unwrap();
    let s_initial_kl = kl_cost(&p, &build_q(&s_init, &sphere).unwrap()).unwrap();
    let s_final_kl = kl_cost(&p, &build_q(&spherical.state, &sphere).unwrap()).unwrap();
    assert!(s_final_kl < s_initial_kl);

    // Consecutive-in-time points are embedding neighbors more often than a
    // shuffled control.
    let neighbor_rate = |order: &[usize]| -> f64 {
        let cache = emb2.distance_cache();
        let k = 10;
        let mut hits = 0;
        for w in order.windows(2) {
            let (i, j) = (w[0], w[1]);
            let mut dists: Vec<(f64, usize)> =
                (0..emb2.len()).filter(|&x| x != i).map(|x| (cache.dist(i, x), x)).collect();
            dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            if dists.iter().take(k).any(|&(_, x)| x == j) {
                hits += 1;
            }
        }
        hits as f64 / (order.len() - 1) as f64
    };
    let temporal: Vec<usize> = (0..emb2.len()).collect();
    let rate_real = neighbor_rate(&temporal);
    let mut shuffled = temporal.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(777);
    for i in (1..shuffled.len()).rev() {
        let j = (rng.next_u64() % (i as u64 + 1)) as usize;
        shuffled.swap(i, j);
    }
    let rate_control = neighbor_rate(&shuffled);
    assert!(
        rate_real > rate_control,
        "temporal neighbor rate {rate_real:.3} vs shuffled {rate_control:.3}"
    );
    println!(
        "[acceptance]   covariances: trustworthiness {trust:.3}, temporal {rate_real:.3} vs \
         control {rate_control:.3}"
    );
    pass(7, "SPD pipeline: trustworthiness >= 0.90 and temporal structure recovered");
}

// ── 8. geometry suite ───────────────────────────────────────────────────

#[test]
fn criterion_8_geometry_suite() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let start = Instant::now();
    let manifolds = [Manifold::Euclidean(3), Manifold::Sphere(4), Manifold::Spd(3)];

    for manifold in manifolds {
        let mut rng = ChaCha8Rng::seed_from_u64(801);
        let table = random_table(manifold, 600, 801);
        let pts = table.points();
        // Metric axioms on 200 random triples.
        for _ in 0..200 {
            let i = (rng.next_u64() % 600) as usize;
            let j = (rng.next_u64() % 600) as usize;
            let k = (rng.next_u64() % 600) as usize;
            let dij = dist(&pts[i], &pts[j]).unwrap();
            let dji = dist(&pts[j], &pts[i]).unwrap();
            assert!((dij - dji).abs() < 1e-9, "symmetry on {manifold:?}");
            assert_eq!(dist(&pts[i], &pts[i]).unwrap(), 0.0);
            let dik = dist(&pts[i], &pts[k]).unwrap();
            let djk = dist(&pts[j], &pts[k]).unwrap();
            assert!(dik <= dij + djk + 1e-9, "triangle inequality on {manifold:?}");
        }
        // exp∘log inverse on 200 random pairs.
        for _ in 0..200 {
            let i = (rng.next_u64() % 600) as usize;
            let j = (rng.next_u64() % 600) as usize;
            let v = log_map(&pts[i], &pts[j]).unwrap();
            let back = exp_map(&v).unwrap();
            assert!(
                dist(&back, &pts[j]).unwrap() < 1e-8,
                "exp(log) identity on {manifold:?}"
            );
        }
    }

    // SPD affine invariance.
    let spd = random_table(Manifold::Spd(3), 80, 802);
    let mut rng = ChaCha8Rng::seed_from_u64(803);
    for w in spd.points().windows(2) {
        let a = DMatrix::from_fn(3, 3, |r, c| {
            let g = normal(&mut rng);
            if r == c {
                g + 3.0
            } else {
                0.5 * g
            }
        });
        let congruent = |p: &Point| {
            let m = p.as_matrix().unwrap();
            let t = &a * m * a.transpose();
            let flat = DVector::from_fn(9, |k, _| 0.5 * (t[(k / 3, k % 3)] + t[(k % 3, k / 3)]));
            Point::new(Manifold::Spd(3), flat).unwrap()
        };
        let d0 = dist(&w[0], &w[1]).unwrap();
        let d1 = dist(&congruent(&w[0]), &congruent(&w[1])).unwrap();
        assert!((d0 - d1).abs() < 1e-8, "affine invariance: {d0} vs {d1}");
    }

    // Sphere rotation invariance.
    let sph = random_table(Manifold::Sphere(4), 80, 804);
    for w in sph.points().windows(2) {
        let g = DMatrix::from_fn(4, 4, |_, _| normal(&mut rng));
        let rot = g.qr().q();
        let rotate = |p: &Point| Point::project(Manifold::Sphere(4), &(&rot * p.coords())).unwrap();
        let d0 = dist(&w[0], &w[1]).unwrap();
        let d1 = dist(&rotate(&w[0]), &rotate(&w[1])).unwrap();
        assert!((d0 - d1).abs() < 1e-10, "rotation invariance: {d0} vs {d1}");
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "geometry suite took {elapsed:?}");
    pass(8, "geometry suite: metric axioms, exp/log, isometry invariances");
}

// ── 9. CLI determinism ──────────────────────────────────────────────────

#[test]
fn criterion_9_cli_runs_are_byte_identical() {
    let _guard = SERIAL.lock().unwrap_or_else(|p| p.into_inner());
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    let data = fixtures::spherical_digits(40, 3, 24, 0.1, 901).unwrap();
    fixtures::write_vector_csv(&input, &data).unwrap();

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_riesne"))
            .args(["embed", "--input"])
            .arg(&input)
            .args(["--manifold", "sphere", "--sparse", "--perplexity", "8"])
            .args(["--iters", "300", "--seed", "42", "--output"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    run(&a);
    run(&b);
    let bytes_a = std::fs::read(&a).unwrap();
    assert!(!bytes_a.is_empty());
    assert_eq!(bytes_a, std::fs::read(&b).unwrap(), "same seed must give identical bytes");

    // Baseline runs are deterministic too (no RNG at all).
    let run_baseline = |out: &std::path::Path| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_riesne"))
            .args(["baseline", "--input"])
            .arg(&input)
            .args(["--manifold", "sphere", "--dim", "2", "--output"])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (c, d) = (dir.path().join("c.csv"), dir.path().join("d.csv"));
    run_baseline(&c);
    run_baseline(&d);
    assert_eq!(std::fs::read(&c).unwrap(), std::fs::read(&d).unwrap());

    // Outputs also survive an eval round trip on the same ids.
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_riesne"))
        .args(["eval", "--input"])
        .arg(&input)
        .args(["--manifold", "sphere", "--embedding"])
        .arg(&a)
        .args(["--k", "5", "--perplexity", "8"])
        .output()
        .unwrap();
    assert!(out.status.success());
    pass(9, "CLI runs with a fixed seed emit byte-identical coordinates");
}
