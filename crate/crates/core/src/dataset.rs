//! Observation tables: points on a shared manifold plus optional labels.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{self, Manifold, Point};

/// A set of observations on one manifold, with optional integer labels and
/// per-row string ids (row indices by default).
#[derive(Debug, Clone)]
pub struct DatasetTable {
    manifold: Manifold,
    points: Vec<Point>,
    labels: Option<Vec<i64>>,
    ids: Vec<String>,
}

impl DatasetTable {
    pub fn new(
        manifold: Manifold,
        points: Vec<Point>,
        labels: Option<Vec<i64>>,
        ids: Option<Vec<String>>,
    ) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if p.manifold() != manifold {
                return Err(Error::ManifoldMismatch(format!(
                    "point {i} is on {:?}, expected {:?}",
                    p.manifold(),
                    manifold
                )));
            }
        }
        if let Some(ref l) = labels {
            if l.len() != points.len() {
                return Err(Error::InvalidArgument(format!(
                    "{} labels for {} points",
                    l.len(),
                    points.len()
                )));
            }
        }
        let ids = match ids {
            Some(ids) => {
                if ids.len() != points.len() {
                    return Err(Error::InvalidArgument(format!(
                        "{} ids for {} points",
                        ids.len(),
                        points.len()
                    )));
                }
                ids
            }
            None => (0..points.len()).map(|i| i.to_string()).collect(),
        };
        Ok(DatasetTable { manifold, points, labels, ids })
    }

    /// Builds a table from raw coordinate rows, either validating them or
    /// projecting them onto the manifold first.
    pub fn from_rows(
        manifold: Manifold,
        rows: &[DVector<f64>],
        project: bool,
        labels: Option<Vec<i64>>,
        ids: Option<Vec<String>>,
    ) -> Result<Self> {
        let points = rows
            .iter()
            .map(|r| {
                if project {
                    Point::project(manifold, r)
                } else {
                    Point::new(manifold, r.clone())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        DatasetTable::new(manifold, points, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Precomputes per-point factors so repeated distance evaluations stay
    /// cheap (SPD needs one eigendecomposition per point, not per pair).
    pub fn distance_cache(&self) -> DistanceCache {
        DistanceCache::new(self)
    }

    /// The full n×n geodesic distance matrix.
    pub fn pairwise_distances(&self) -> DMatrix<f64> {
        self.distance_cache().pairwise()
    }
}

/// Distance evaluations over one dataset with cached per-point factors.
pub struct DistanceCache {
    manifold: Manifold,
    coords: Vec<DVector<f64>>,
    // SPD only: matrix view and inverse square root per point.
    spd: Option<Vec<(DMatrix<f64>, DMatrix<f64>)>>,
}

impl DistanceCache {
    fn new(data: &DatasetTable) -> Self {
        let coords: Vec<DVector<f64>> = data.points.iter().map(|p| p.coords().clone()).collect();
        let spd = match data.manifold {
            Manifold::Spd(n) => Some(
                coords
                    .par_iter()
                    .map(|c| {
                        let m = geometry::sym_from_flat(c, n);
                        let inv_sqrt = geometry::spd_factors(&m).inv_sqrt;
                        (m, inv_sqrt)
                    })
                    .collect(),
            ),
            _ => None,
        };
        DistanceCache { manifold: data.manifold, coords, spd }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    /// Geodesic distance between observations `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.spd {
            Some(f) => geometry::spd_dist_from_inv_sqrt(&f[i].1, &f[j].0),
            None => self.manifold.dist_raw(&self.coords[i], &self.coords[j]),
        }
    }

    /// One row of the distance matrix.
    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|j| if i == j { 0.0 } else { self.dist(i, j) }).collect()
    }

    /// The full symmetric distance matrix, rows computed in parallel.
    pub fn pairwise(&self) -> DMatrix<f64> {
        let n = self.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if j > i { self.dist(i, j) } else { 0.0 }).collect())
            .collect();
        let mut out = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            for j in (i + 1)..n {
                out[(i, j)] = row[j];
                out[(j, i)] = row[j];
            }
        }
        out
    }
}
