//! CSV ingestion: vector tables, upper-triangle SPD tables, and the rolling
//! covariance builder for time series.

use std::path::Path;

use nalgebra::DVector;
use riesne_core::geometry::SPD_EIGEN_FLOOR;
use riesne_core::{DatasetTable, Manifold, Point};

use crate::error::{CliError, Result};

/// Data manifold selector for the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ManifoldChoice {
    Euclidean,
    Sphere,
    Spd,
}

/// Resolves the manifold from the number of feature columns. SPD tables
/// store the upper triangle row-major, so the column count must be a
/// triangular number.
pub fn manifold_for(choice: ManifoldChoice, feature_cols: usize) -> Result<Manifold> {
    match choice {
        ManifoldChoice::Euclidean => {
            Manifold::euclidean(feature_cols).map_err(CliError::from)
        }
        ManifoldChoice::Sphere => Manifold::sphere(feature_cols).map_err(CliError::from),
        ManifoldChoice::Spd => {
            let side = spd_side_for(feature_cols).ok_or_else(|| {
                CliError::Data(format!(
                    "{feature_cols} feature columns is not a triangular number n(n+1)/2"
                ))
            })?;
            Manifold::spd(side).map_err(CliError::from)
        }
    }
}

fn spd_side_for(k: usize) -> Option<usize> {
    let n = ((-1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).round() as usize;
    (n * (n + 1) / 2 == k).then_some(n)
}

/// Expands upper-triangle values (row-major: (0,0), (0,1), ..., (1,1), ...)
/// into full row-major symmetric matrix coordinates.
fn expand_upper_triangle(upper: &[f64], side: usize) -> DVector<f64> {
    let mut full = DVector::zeros(side * side);
    let mut k = 0;
    for i in 0..side {
        for j in i..side {
            full[i * side + j] = upper[k];
            full[j * side + i] = upper[k];
            k += 1;
        }
    }
    full
}

/// Collapses symmetric matrix coordinates back to the upper triangle.
pub fn upper_triangle_of(point: &Point) -> Vec<f64> {
    let side = point.manifold().ambient_dim();
    let coords = point.coords();
    let mut out = Vec::with_capacity(side * (side + 1) / 2);
    for i in 0..side {
        for j in i..side {
            out.push(coords[i * side + j]);
        }
    }
    out
}

struct ParsedCsv {
    feature_names: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
    labels: Option<Vec<i64>>,
    ids: Vec<String>,
}

fn parse_csv(path: &Path) -> Result<ParsedCsv> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let mut id_col = None;
    let mut label_col = None;
    let mut feature_cols = Vec::new();
    let mut feature_names = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if name.eq_ignore_ascii_case("id") || name.eq_ignore_ascii_case("date") {
            id_col = Some(i);
        } else if name.eq_ignore_ascii_case("label") {
            label_col = Some(i);
        } else {
            feature_cols.push(i);
            feature_names.push(name.to_string());
        }
    }
    if feature_cols.is_empty() {
        return Err(CliError::Data(format!("{}: no feature columns", path.display())));
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut ids = Vec::new();
    for (row_index, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(row_index as u64 + 2);
        let mut features = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| {
                CliError::Data(format!("line {line}: cannot parse '{raw}' as a number"))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!("line {line}: non-finite value {v}")));
            }
            features.push(v);
        }
        if let Some(c) = label_col {
            let raw = record.get(c).unwrap_or("");
            if !raw.is_empty() {
                let l: i64 = raw.parse().map_err(|_| {
                    CliError::Data(format!("line {line}: cannot parse label '{raw}'"))
                })?;
                labels.push(l);
            }
        }
        ids.push(match id_col {
            Some(c) => record.get(c).unwrap_or("").to_string(),
            None => row_index.to_string(),
        });
        rows.push((line, features));
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no data rows", path.display())));
    }
    let labels = if labels.is_empty() {
        None
    } else if labels.len() == rows.len() {
        Some(labels)
    } else {
        return Err(CliError::Data(format!(
            "{}: {} labels for {} rows (labels must be all-or-none)",
            path.display(),
            labels.len(),
            rows.len()
        )));
    };
    Ok(ParsedCsv { feature_names, rows, labels, ids })
}

/// Reads a CSV table of observations onto the chosen manifold.
///
/// The header row is required; a column named `id`/`date` provides row ids
/// and a column named `label` provides integer labels. All other columns
/// are features: plain coordinates for Euclidean/sphere manifolds, the
/// upper triangle of a symmetric matrix for SPD. With `project` the rows
/// are projected onto the manifold, otherwise rows violating the manifold
/// invariants are rejected with their line number.
pub fn ingest_csv(path: &Path, choice: ManifoldChoice, project: bool) -> Result<DatasetTable> {
    let parsed = parse_csv(path)?;
    let manifold = manifold_for(choice, parsed.feature_names.len())?;
    let mut points = Vec::with_capacity(parsed.rows.len());
    for (line, features) in &parsed.rows {
        let raw = match manifold {
            Manifold::Spd(side) => expand_upper_triangle(features, side),
            _ => DVector::from_row_slice(features),
        };
        let point = if project {
            Point::project(manifold, &raw)
        } else {
            Point::new(manifold, raw)
        }
        .map_err(|e| CliError::Data(format!("line {line}: {e}")))?;
        points.push(point);
    }
    DatasetTable::new(manifold, points, parsed.labels, Some(parsed.ids))
        .map_err(CliError::from)
}

/// Reads a plain numeric time-series table: one row per time step, one
/// column per variable, optional `id`/`date` column kept as timestamps.
pub fn read_series_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<String>)> {
    let parsed = parse_csv(path)?;
    let series = parsed.rows.into_iter().map(|(_, f)| f).collect();
    Ok((series, parsed.ids))
}

/// Sliding-window sample covariances of a T×m series: T-window+1 SPD(m)
/// points with 1/(window-1) normalization, each regularized by adding
/// `SPD_EIGEN_FLOOR`·I. Ids are the timestamps of each window's last row.
pub fn rolling_covariance(
    series: &[Vec<f64>],
    ids: &[String],
    window: usize,
) -> Result<DatasetTable> {
    if window < 2 {
        return Err(CliError::Usage(format!("window must be >= 2, got {window}")));
    }
    let t = series.len();
    if t < window {
        return Err(CliError::Usage(format!(
            "series has {t} rows, shorter than the window {window}"
        )));
    }
    let m = series[0].len();
    if series.iter().any(|r| r.len() != m) {
        return Err(CliError::Data("ragged series rows".into()));
    }
    let manifold = Manifold::spd(m)?;
    let mut points = Vec::with_capacity(t - window + 1);
    let mut out_ids = Vec::with_capacity(t - window + 1);
    for end in (window - 1)..t {
        let rows = &series[end + 1 - window..=end];
        let mut mean = vec![0.0; m];
        for r in rows {
            for (a, b) in mean.iter_mut().zip(r) {
                *a += b;
            }
        }
        for a in mean.iter_mut() {
            *a /= window as f64;
        }
        let mut cov = DVector::zeros(m * m);
        for r in rows {
            for i in 0..m {
                for j in 0..m {
                    cov[i * m + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
                }
            }
        }
        cov /= (window - 1) as f64;
        for i in 0..m {
            cov[i * m + i] += SPD_EIGEN_FLOOR;
        }
        let point = Point::new(manifold, cov)
            .map_err(|e| CliError::Data(format!("window ending at row {end}: {e}")))?;
        points.push(point);
        out_ids.push(ids.get(end).cloned().unwrap_or_else(|| end.to_string()));
    }
    DatasetTable::new(manifold, points, None, Some(out_ids)).map_err(CliError::from)
}

/// Writes an SPD dataset as an upper-triangle CSV readable by
/// `ingest_csv(..., Spd, ..)`.
pub fn write_spd_csv(path: &Path, data: &DatasetTable) -> Result<()> {
    let side = match data.manifold() {
        Manifold::Spd(n) => n,
        other => {
            return Err(CliError::Usage(format!("dataset is on {other:?}, not an SPD cone")));
        }
    };
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut header = vec!["id".to_string()];
    for i in 0..side {
        for j in i..side {
            header.push(format!("cov_{i}_{j}"));
        }
    }
    writer.write_record(&header)?;
    for (idx, point) in data.points().iter().enumerate() {
        let mut record = vec![data.ids()[idx].clone()];
        record.extend(upper_triangle_of(point).iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Result rows of [`read_embedding_csv`]: ids, optional labels, coordinates.
pub type EmbeddingRows = (Vec<String>, Option<Vec<i64>>, Vec<DVector<f64>>);

/// Reads an embedding written by the `embed`/`baseline` subcommands:
/// `id,label,y1..yd` with an optionally empty label column.
pub fn read_embedding_csv(path: &Path) -> Result<EmbeddingRows> {
    let parsed = parse_csv(path)?;
    let coords = parsed.rows.into_iter().map(|(_, f)| DVector::from_row_slice(&f)).collect();
    Ok((parsed.ids, parsed.labels, coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn sphere_projection_example() {
        let f = write_temp("x,y,z\n3,4,0\n");
        let table = ingest_csv(f.path(), ManifoldChoice::Sphere, true).unwrap();
        let c = table.point(0).coords();
        assert_relative_eq!(c[0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(c[1], 0.8, epsilon = 1e-12);
        assert_relative_eq!(c[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn euclidean_passthrough_keeps_coordinates() {
        let f = write_temp("a,b,label\n1.5,-2.5,3\n0,7,1\n");
        let table = ingest_csv(f.path(), ManifoldChoice::Euclidean, false).unwrap();
        assert_eq!(table.point(0).coords().as_slice(), &[1.5, -2.5]);
        assert_eq!(table.labels().unwrap(), &[3, 1]);
    }

    #[test]
    fn unprojected_sphere_rows_are_validated() {
        let ok = write_temp("x,y,z\n1,0,0\n");
        assert!(ingest_csv(ok.path(), ManifoldChoice::Sphere, false).is_ok());

        let bad = write_temp("x,y,z\n1,0,0\n1,1,0\n");
        match ingest_csv(bad.path(), ManifoldChoice::Sphere, false) {
            Err(CliError::Data(msg)) => assert!(msg.contains("line 3"), "message: {msg}"),
            other => panic!("expected a data error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let f = write_temp("x,y\n1,2\nbogus,4\n");
        match ingest_csv(f.path(), ManifoldChoice::Euclidean, false) {
            Err(CliError::Data(msg)) => assert!(msg.contains("line 3"), "message: {msg}"),
            other => panic!("expected a data error, got {other:?}"),
        }

        let zero = write_temp("x,y\n0,0\n");
        match ingest_csv(zero.path(), ManifoldChoice::Sphere, true) {
            Err(CliError::Data(msg)) => assert!(msg.contains("line 2"), "message: {msg}"),
            other => panic!("expected a data error, got {other:?}"),
        }
    }

    #[test]
    fn spd_round_trip_via_upper_triangle() {
        let f = write_temp("id,c00,c01,c11\nt0,2.0,0.3,1.0\nt1,1.5,-0.2,2.5\n");
        let table = ingest_csv(f.path(), ManifoldChoice::Spd, false).unwrap();
        assert_eq!(table.manifold(), Manifold::Spd(2));
        assert_eq!(table.ids(), &["t0", "t1"]);
        let m = table.point(0).as_matrix().unwrap();
        assert_eq!(m[(0, 1)], 0.3);
        assert_eq!(m[(1, 0)], 0.3);

        let out = tempfile::NamedTempFile::new().unwrap();
        write_spd_csv(out.path(), &table).unwrap();
        let again = ingest_csv(out.path(), ManifoldChoice::Spd, false).unwrap();
        for (a, b) in table.points().iter().zip(again.points()) {
            assert_eq!(a.coords(), b.coords());
        }
        assert_eq!(again.ids(), table.ids());
    }

    #[test]
    fn rolling_covariance_examples() {
        // Constant series: zero sample covariance, clamped to the floor.
        let series: Vec<Vec<f64>> = (0..25).map(|_| vec![3.0, -1.0]).collect();
        let ids: Vec<String> = (0..25).map(|i| format!("d{i}")).collect();
        let table = rolling_covariance(&series, &ids, 20).unwrap();
        assert_eq!(table.len(), 6);
        assert_eq!(table.ids()[0], "d19");
        let m = table.point(0).as_matrix().unwrap();
        assert_relative_eq!(m[(0, 0)], SPD_EIGEN_FLOOR, epsilon = 1e-20);
        assert_relative_eq!(m[(0, 1)], 0.0, epsilon = 1e-20);

        // m = 1: each point is the window sample variance plus the floor.
        let vals = [1.0, 2.0, 4.0, 0.0, 3.0];
        let series: Vec<Vec<f64>> = vals.iter().map(|&v| vec![v]).collect();
        let ids: Vec<String> = (0..5).map(|i| i.to_string()).collect();
        let table = rolling_covariance(&series, &ids, 3).unwrap();
        for (w, point) in table.points().iter().enumerate() {
            let win = &vals[w..w + 3];
            let mean = win.iter().sum::<f64>() / 3.0;
            let var = win.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 2.0;
            assert_relative_eq!(point.coords()[0], var + SPD_EIGEN_FLOOR, epsilon = 1e-12);
        }

        // window == T gives a single covariance matrix.
        let table = rolling_covariance(&series, &ids, 5).unwrap();
        assert_eq!(table.len(), 1);

        assert!(matches!(
            rolling_covariance(&series, &ids, 6),
            Err(CliError::Usage(_))
        ));
    }
}
