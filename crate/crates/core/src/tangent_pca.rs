//! Tangent-space PCA, the linear comparison method.
//!
//! Compute the intrinsic mean, map every observation into the tangent space
//! at the mean, and run ordinary PCA on those coordinates.

use nalgebra::{DMatrix, DVector};

use crate::dataset::DatasetTable;
use crate::error::{Error, Result};
use crate::geometry::{self, Point};

const MEAN_TOL: f64 = 1e-9;
const MEAN_MAX_ITER: usize = 200;

/// A fitted tangent-space PCA model.
#[derive(Debug, Clone)]
pub struct TangentPca {
    base: Point,
    center: DVector<f64>,
    /// One orthonormal component per row, in tangent coordinates.
    components: DMatrix<f64>,
    explained_variance: Vec<f64>,
    mean_converged: bool,
}

impl TangentPca {
    /// The intrinsic mean the tangent space is anchored at.
    pub fn base_point(&self) -> &Point {
        &self.base
    }

    /// d × intrinsic_dim matrix of orthonormal principal directions.
    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    /// Sample variance along each component, non-increasing.
    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    /// Whether the intrinsic-mean iteration converged.
    pub fn mean_converged(&self) -> bool {
        self.mean_converged
    }

    /// Projects a dataset into the model's principal subspace (n × d).
    pub fn transform(&self, data: &DatasetTable) -> Result<DMatrix<f64>> {
        if data.manifold() != self.base.manifold() {
            return Err(Error::ManifoldMismatch(
                "dataset is not on the model's manifold".into(),
            ));
        }
        let coords = geometry::tangent_coords(&self.base, data.points())?;
        let mut centered = coords;
        for mut row in centered.row_iter_mut() {
            row -= self.center.transpose();
        }
        Ok(&centered * self.components.transpose())
    }

    /// Maps projected rows back to (centered-removed) tangent coordinates;
    /// exact when d equals the intrinsic dimension.
    pub fn reconstruct_tangent(&self, projected: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = projected * &self.components;
        for mut row in out.row_iter_mut() {
            row += self.center.transpose();
        }
        out
    }
}

/// Fits tangent-space PCA with `d` components.
pub fn fit_tangent_pca(data: &DatasetTable, d: usize) -> Result<TangentPca> {
    let intrinsic = data.manifold().intrinsic_dim();
    if d == 0 || d > intrinsic {
        return Err(Error::InvalidArgument(format!(
            "component count must be in 1..={intrinsic}, got {d}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot fit PCA on an empty dataset".into()));
    }
    let mean = geometry::intrinsic_mean(data.points(), MEAN_TOL, MEAN_MAX_ITER)?;
    let coords = geometry::tangent_coords(&mean.mean, data.points())?;
    let n = coords.nrows();

    let center = DVector::from_fn(intrinsic, |c, _| coords.column(c).sum() / n as f64);
    let mut centered = coords;
    for mut row in centered.row_iter_mut() {
        row -= center.transpose();
    }
    // Covariance with 1/(n-1); a single observation gets zero variance.
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let cov = centered.transpose() * &centered / denom;
    let eig = cov.symmetric_eigen();

    let mut order: Vec<usize> = (0..intrinsic).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut components = DMatrix::zeros(d, intrinsic);
    let mut explained = Vec::with_capacity(d);
    for (r, &col) in order.iter().take(d).enumerate() {
        let mut v: Vec<f64> = eig.eigenvectors.column(col).iter().cloned().collect();
        // Deterministic sign: largest-magnitude entry positive.
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        for (c, x) in v.iter().enumerate() {
            components[(r, c)] = *x;
        }
        explained.push(eig.eigenvalues[col].max(0.0));
    }

    Ok(TangentPca {
        base: mean.mean,
        center,
        components,
        explained_variance: explained,
        mean_converged: mean.converged,
    })
}
