//! Output emission: coordinate CSV, KL-history CSV, and SVG scatter plots.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use riesne_core::Manifold;

use crate::error::{CliError, Result};

/// Writes `id,label,y1..yd` rows in input order with full (shortest
/// round-trip) float precision. The label column is left empty when the
/// dataset has no labels.
pub fn write_coords_csv(
    path: &Path,
    ids: &[String],
    labels: Option<&[i64]>,
    coords: &[DVector<f64>],
) -> Result<()> {
    if coords.is_empty() {
        return Err(CliError::Usage("nothing to write: no embedded points".into()));
    }
    let dim = coords[0].len();
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut header = vec!["id".to_string(), "label".to_string()];
    for k in 0..dim {
        header.push(format!("y{}", k + 1));
    }
    writer.write_record(&header)?;
    for (i, y) in coords.iter().enumerate() {
        let mut record = vec![
            ids.get(i).cloned().unwrap_or_else(|| i.to_string()),
            labels.map(|l| l[i].to_string()).unwrap_or_default(),
        ];
        record.extend(y.iter().map(|v| format!("{v}")));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes the per-iteration KL values as `iteration,kl`.
pub fn write_kl_history_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    writer.write_record(["iteration", "kl"])?;
    for (i, kl) in history.iter().enumerate() {
        writer.write_record([i.to_string(), format!("{kl}")])?;
    }
    writer.flush()?;
    Ok(())
}

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

fn color_for(label: Option<i64>) -> &'static str {
    match label {
        Some(l) => PALETTE[l.rem_euclid(PALETTE.len() as i64) as usize],
        None => PALETTE[0],
    }
}

/// Writes a scatter SVG of a 2-D embedding, or two orthographic hemisphere
/// panels for points on S². Emits exactly one `<circle>` element per point.
pub fn write_svg(
    path: &Path,
    manifold: Manifold,
    coords: &[DVector<f64>],
    labels: Option<&[i64]>,
) -> Result<()> {
    let svg = match manifold {
        Manifold::Euclidean(2) => planar_svg(coords, labels),
        Manifold::Sphere(3) => sphere_svg(coords, labels),
        other => {
            return Err(CliError::Usage(format!(
                "SVG output supports planar (R^2) and S^2 embeddings, not {other:?}"
            )));
        }
    };
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    file.write_all(svg.as_bytes())?;
    Ok(())
}

fn planar_svg(coords: &[DVector<f64>], labels: Option<&[i64]>) -> String {
    let (w, h, margin) = (600.0, 600.0, 30.0);
    let (mut lo_x, mut hi_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for y in coords {
        lo_x = lo_x.min(y[0]);
        hi_x = hi_x.max(y[0]);
        lo_y = lo_y.min(y[1]);
        hi_y = hi_y.max(y[1]);
    }
    let span_x = (hi_x - lo_x).max(1e-12);
    let span_y = (hi_y - lo_y).max(1e-12);
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\">\n"
    ));
    for (i, y) in coords.iter().enumerate() {
        let px = margin + (y[0] - lo_x) / span_x * (w - 2.0 * margin);
        let py = h - margin - (y[1] - lo_y) / span_y * (h - 2.0 * margin);
        out.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{}\"/>\n",
            color_for(labels.map(|l| l[i]))
        ));
    }
    out.push_str("</svg>\n");
    out
}

fn sphere_svg(coords: &[DVector<f64>], labels: Option<&[i64]>) -> String {
    // Orthographic projection: front hemisphere (z >= 0) on the left panel,
    // back hemisphere on the right.
    let (panel, margin) = (600.0, 30.0);
    let radius = panel / 2.0 - margin;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {panel}\">\n",
        2.0 * panel
    ));
    for (i, y) in coords.iter().enumerate() {
        let offset = if y[2] >= 0.0 { 0.0 } else { panel };
        let px = offset + panel / 2.0 + y[0] * radius;
        let py = panel / 2.0 - y[1] * radius;
        out.push_str(&format!(
            "<circle cx=\"{px:.2}\" cy=\"{py:.2}\" r=\"3\" fill=\"{}\"/>\n",
            color_for(labels.map(|l| l[i]))
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_csv_shape_and_precision() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let coords = vec![
            DVector::from_row_slice(&[0.1234567890123456, -1.0]),
            DVector::from_row_slice(&[2.0, 3.5]),
        ];
        write_coords_csv(f.path(), &["a".into(), "b".into()], Some(&[1, 2]), &coords).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "id,label,y1,y2");
        assert!(lines[1].starts_with("a,1,0.1234567890123456,"));
        // Round-trip: parse back the full-precision value.
        let v: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, 0.1234567890123456);
    }

    #[test]
    fn svg_has_one_circle_per_point() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let coords: Vec<DVector<f64>> =
            (0..17).map(|i| DVector::from_row_slice(&[i as f64, (i * i) as f64])).collect();
        write_svg(f.path(), Manifold::Euclidean(2), &coords, None).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text.matches("<circle").count(), 17);
    }

    #[test]
    fn sphere_svg_places_hemispheres() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let coords = vec![
            DVector::from_row_slice(&[0.0, 0.0, 1.0]),
            DVector::from_row_slice(&[0.0, 0.0, -1.0]),
        ];
        write_svg(f.path(), Manifold::Sphere(3), &coords, Some(&[0, 1])).unwrap();
        let text = std::fs::read_to_string(f.path()).unwrap();
        assert_eq!(text.matches("<circle").count(), 2);
        assert!(text.contains("cx=\"300.00\""));
        assert!(text.contains("cx=\"900.00\""));
    }
}
