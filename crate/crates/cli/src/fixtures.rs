//! Deterministic synthetic datasets for tests, demos and benchmarks.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use riesne_core::{DatasetTable, Manifold, Point};

use crate::error::Result;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// Image-vector stand-in for digit data: `classes` prototype directions in
/// ℝ^dim (orthogonalized, so no 2-plane can separate them linearly), plus
/// per-sample Gaussian noise, projected onto the unit sphere. Labeled by
/// class.
pub fn spherical_digits(
    per_class: usize,
    classes: usize,
    dim: usize,
    noise: f64,
    seed: u64,
) -> Result<DatasetTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Random prototypes, Gram-Schmidt orthogonalized.
    let mut prototypes: Vec<DVector<f64>> = Vec::with_capacity(classes);
    while prototypes.len() < classes {
        let mut v = DVector::from_fn(dim, |_, _| normal(&mut rng));
        for p in &prototypes {
            let dot = v.dot(p);
            v -= p * dot;
        }
        let norm = v.norm();
        if norm > 1e-9 {
            prototypes.push(v / norm);
        }
    }
    let manifold = Manifold::sphere(dim)?;
    let mut points = Vec::with_capacity(per_class * classes);
    let mut labels = Vec::with_capacity(per_class * classes);
    for c in 0..classes {
        for _ in 0..per_class {
            let jitter = DVector::from_fn(dim, |_, _| noise * normal(&mut rng));
            let raw = &prototypes[c] + jitter;
            points.push(Point::project(manifold, &raw)?);
            labels.push(c as i64);
        }
    }
    Ok(DatasetTable::new(manifold, points, Some(labels), None)?)
}

/// Synthetic multi-asset price table: mean-reverting log prices whose
/// innovation covariance drifts smoothly through a regime cycle, so rolling
/// covariances trace a one-dimensional path in the SPD cone. Returns
/// (price rows, day ids).
pub fn synthetic_prices(days: usize, assets: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Two mixing matrices; the active mix interpolates over time. The
    // second is rescaled to the determinant of the first, so the regime
    // cycle reshapes the covariance without swinging its volume.
    let mat = |rng: &mut ChaCha8Rng, diag: &dyn Fn(usize) -> f64, off: f64| -> DMatrix<f64> {
        DMatrix::from_fn(assets, assets, |i, j| {
            if i == j {
                diag(i)
            } else {
                off * normal(rng)
            }
        })
    };
    let a0 = mat(&mut rng, &|_| 1.0, 0.2);
    let mut a1 = mat(&mut rng, &|i| 0.6 + 0.8 * (i as f64 / assets as f64), 0.3);
    let ld0 = (&a0 * a0.transpose()).determinant().ln();
    let ld1 = (&a1 * a1.transpose()).determinant().ln();
    a1 *= ((ld0 - ld1) / (2.0 * assets as f64)).exp();

    // Quasi-periodic drivers: incommensurate frequencies keep every 20-day
    // window of the drivers well-conditioned, so the window covariances
    // evolve smoothly instead of jumping with sampling noise.
    let freqs: Vec<f64> = (0..assets)
        .map(|j| 0.05 + 0.4 * (j as f64 + 0.3 * normal(&mut rng).abs()) / assets as f64)
        .collect();
    let phases: Vec<f64> =
        (0..assets).map(|_| std::f64::consts::TAU * normal(&mut rng).abs().fract()).collect();

    let mut rows = Vec::with_capacity(days);
    let mut ids = Vec::with_capacity(days);
    for day in 0..days {
        let phase = day as f64 / days as f64;
        let w = 0.5 - 0.5 * (2.0 * std::f64::consts::PI * phase).cos();
        let osc: Vec<f64> = (0..assets)
            .map(|j| (std::f64::consts::TAU * freqs[j] * day as f64 + phases[j]).cos())
            .collect();
        let mut row = Vec::with_capacity(assets);
        for i in 0..assets {
            let mut s = 0.1 * normal(&mut rng);
            for j in 0..assets {
                s += ((1.0 - w) * a0[(i, j)] + w * a1[(i, j)]) * osc[j];
            }
            row.push(100.0 * (1.0 + 0.2 * i as f64) * (0.05 * s).exp());
        }
        rows.push(row);
        ids.push(format!("day{day:04}"));
    }
    (rows, ids)
}

/// Writes a labeled vector table as a feature CSV (id, label, f0..fd).
pub fn write_vector_csv(path: &std::path::Path, data: &DatasetTable) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| crate::error::CliError::Io(format!("{}: {e}", path.display())))?;
    let dim = data.manifold().coord_len();
    let mut header = vec!["id".to_string()];
    if data.labels().is_some() {
        header.push("label".to_string());
    }
    for k in 0..dim {
        header.push(format!("f{k}"));
    }
    writer.write_record(&header).map_err(crate::error::CliError::from)?;
    for (i, p) in data.points().iter().enumerate() {
        let mut record = vec![data.ids()[i].clone()];
        if let Some(labels) = data.labels() {
            record.push(labels[i].to_string());
        }
        record.extend(p.coords().iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(crate::error::CliError::from)?;
    }
    writer.flush().map_err(crate::error::CliError::from)?;
    Ok(())
}

/// Writes a plain time-series CSV (date column plus one column per asset).
pub fn write_series_csv(
    path: &std::path::Path,
    rows: &[Vec<f64>],
    ids: &[String],
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| crate::error::CliError::Io(format!("{}: {e}", path.display())))?;
    let assets = rows[0].len();
    let mut header = vec!["date".to_string()];
    for a in 0..assets {
        header.push(format!("asset{a}"));
    }
    writer.write_record(&header).map_err(crate::error::CliError::from)?;
    for (i, row) in rows.iter().enumerate() {
        let mut record = vec![ids[i].clone()];
        record.extend(row.iter().map(|v| format!("{v}")));
        writer.write_record(&record).map_err(crate::error::CliError::from)?;
    }
    writer.flush().map_err(crate::error::CliError::from)?;
    Ok(())
}
