//! Geometric primitives for the three supported manifolds.
//!
//! Points are stored in ambient coordinates: plain vectors for Euclidean
//! space, unit vectors for the sphere S^{d-1}, and row-major n×n entries for
//! the cone of symmetric positive definite (SPD) matrices under the
//! affine-invariant metric ⟨U, V⟩_P = tr(P⁻¹U P⁻¹V).
//!
//! All operations are pure functions over immutable inputs and safe to call
//! concurrently.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalue floor used when projecting near-singular matrices onto the SPD
/// cone (keeps rolling covariances of degenerate windows on-manifold).
pub const SPD_EIGEN_FLOOR: f64 = 1e-8;

/// Tolerance for point invariants (unit norm, symmetry).
const POINT_TOL: f64 = 1e-9;

/// A sphere pair with 1 + x·y below this is treated as antipodal.
const ANTIPODAL_TOL: f64 = 1e-12;

/// One of the supported manifold families, with its size parameters.
///
/// `Euclidean(d)` is ℝ^d, `Sphere(d)` is S^{d-1} embedded in ℝ^d, and
/// `Spd(n)` is the cone of n×n symmetric positive definite matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Manifold {
    Euclidean(usize),
    Sphere(usize),
    Spd(usize),
}

impl Manifold {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("euclidean dimension must be >= 1".into()));
        }
        Ok(Manifold::Euclidean(dim))
    }

    pub fn sphere(ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::InvalidArgument("sphere ambient dimension must be >= 2".into()));
        }
        Ok(Manifold::Sphere(ambient_dim))
    }

    pub fn spd(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidArgument("SPD matrix side must be >= 1".into()));
        }
        Ok(Manifold::Spd(side))
    }

    /// Length of the coordinate vector that stores one point.
    pub fn coord_len(&self) -> usize {
        match *self {
            Manifold::Euclidean(d) | Manifold::Sphere(d) => d,
            Manifold::Spd(n) => n * n,
        }
    }

    /// Ambient size parameter: vector length for Euclidean/Sphere, matrix
    /// side for SPD.
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean(d) | Manifold::Sphere(d) => d,
            Manifold::Spd(n) => n,
        }
    }

    /// Dimension of the manifold itself (and of its tangent spaces).
    pub fn intrinsic_dim(&self) -> usize {
        match *self {
            Manifold::Euclidean(d) => d,
            Manifold::Sphere(d) => d - 1,
            Manifold::Spd(n) => n * (n + 1) / 2,
        }
    }

    /// Checks the point invariants for this manifold.
    pub fn check_point(&self, coords: &DVector<f64>) -> Result<()> {
        if coords.len() != self.coord_len() {
            return Err(Error::InvalidPoint(format!(
                "expected {} coordinates for {:?}, got {}",
                self.coord_len(),
                self,
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint("non-finite coordinate".into()));
        }
        match *self {
            Manifold::Euclidean(_) => Ok(()),
            Manifold::Sphere(_) => {
                let norm = coords.norm();
                if (norm - 1.0).abs() > POINT_TOL {
                    return Err(Error::InvalidPoint(format!(
                        "sphere point has norm {norm}, expected 1 within {POINT_TOL}"
                    )));
                }
                Ok(())
            }
            Manifold::Spd(n) => {
                let m = sym_from_flat(coords, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (m[(i, j)] - m[(j, i)]).abs() > POINT_TOL {
                            return Err(Error::InvalidPoint(format!(
                                "matrix is not symmetric at ({i},{j})"
                            )));
                        }
                    }
                }
                let eigenvalues = m.symmetric_eigen().eigenvalues;
                let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                if !(min > 0.0) {
                    return Err(Error::InvalidPoint(format!(
                        "matrix is not positive definite (min eigenvalue {min})"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Geodesic distance on raw coordinates. Inputs are assumed valid.
    pub(crate) fn dist_raw(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match *self {
            Manifold::Euclidean(_) => (a - b).norm(),
            // 2·atan2(‖x−y‖, ‖x+y‖) is the arccos of the dot product but
            // stays exact at 0 and well-conditioned near both poles.
            Manifold::Sphere(_) => 2.0 * (a - b).norm().atan2((a + b).norm()),
            Manifold::Spd(n) => {
                if a == b {
                    return 0.0;
                }
                let pa = sym_from_flat(a, n);
                let pb = sym_from_flat(b, n);
                let factors = spd_factors(&pa);
                spd_dist_from_inv_sqrt(&factors.inv_sqrt, &pb)
            }
        }
    }

    /// Logarithm map on raw coordinates: initial velocity of the geodesic
    /// from `x` to `y`, in the ambient representation.
    pub(crate) fn log_raw(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
        match *self {
            Manifold::Euclidean(_) => Ok(y - x),
            Manifold::Sphere(_) => {
                let c = x.dot(y).clamp(-1.0, 1.0);
                if 1.0 + c <= ANTIPODAL_TOL {
                    return Err(Error::Antipodal { index: None });
                }
                let theta = 2.0 * (x - y).norm().atan2((x + y).norm());
                if theta == 0.0 {
                    return Ok(DVector::zeros(x.len()));
                }
                let sin_theta = theta.sin();
                Ok((y - x * c) * (theta / sin_theta))
            }
            Manifold::Spd(n) => {
                let px = sym_from_flat(x, n);
                let py = sym_from_flat(y, n);
                let f = spd_factors(&px);
                let inner = &f.inv_sqrt * &py * &f.inv_sqrt;
                let w = sym_matrix_fn(&symmetrize(&inner), |lambda| {
                    if lambda <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "matrix log of non-positive eigenvalue {lambda}"
                        )));
                    }
                    Ok(lambda.ln())
                })?;
                Ok(flat_from_sym(&symmetrize(&(&f.sqrt * &w * &f.sqrt))))
            }
        }
    }

    /// Exponential map on raw coordinates: point reached from `x` with
    /// initial velocity `v`.
    pub(crate) fn exp_raw(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
        match *self {
            Manifold::Euclidean(_) => Ok(x + v),
            Manifold::Sphere(_) => {
                let theta = v.norm();
                if theta == 0.0 {
                    return Ok(x.clone());
                }
                let out = x * theta.cos() + v * (theta.sin() / theta);
                // cos/sin keeps the norm at 1 up to roundoff; pin it exactly.
                Ok(&out / out.norm())
            }
            Manifold::Spd(n) => {
                let px = sym_from_flat(x, n);
                let vm = sym_from_flat(v, n);
                let f = spd_factors(&px);
                let inner = symmetrize(&(&f.inv_sqrt * &vm * &f.inv_sqrt));
                let e = sym_matrix_fn(&inner, |lambda| Ok(lambda.exp()))?;
                Ok(flat_from_sym(&symmetrize(&(&f.sqrt * &e * &f.sqrt))))
            }
        }
    }

    /// Projects raw ambient coordinates onto the manifold.
    pub(crate) fn project_raw(&self, raw: &DVector<f64>) -> Result<DVector<f64>> {
        if raw.len() != self.coord_len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates for {:?}, got {}",
                self.coord_len(),
                self,
                raw.len()
            )));
        }
        if raw.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        match *self {
            Manifold::Euclidean(_) => Ok(raw.clone()),
            Manifold::Sphere(_) => {
                let norm = raw.norm();
                if norm == 0.0 {
                    return Err(Error::InvalidArgument(
                        "cannot project the zero vector onto the sphere".into(),
                    ));
                }
                Ok(raw / norm)
            }
            Manifold::Spd(n) => {
                let sym = symmetrize(&sym_from_flat(raw, n));
                let clamped = sym_matrix_fn(&sym, |lambda| Ok(lambda.max(SPD_EIGEN_FLOOR)))?;
                Ok(flat_from_sym(&symmetrize(&clamped)))
            }
        }
    }

    /// ½·log det G at a point, up to a per-manifold additive constant.
    ///
    /// Euclidean space and the sphere are homogeneous, so their densities are
    /// constant and set to 0; only density *ratios* are ever consumed. SPD
    /// uses the matrix-entries chart, where the affine-invariant metric has
    /// det G ∝ det(P)^{-(n+1)}.
    pub(crate) fn log_volume_density_raw(&self, x: &DVector<f64>) -> Result<f64> {
        match *self {
            Manifold::Euclidean(_) | Manifold::Sphere(_) => Ok(0.0),
            Manifold::Spd(n) => {
                let m = sym_from_flat(x, n);
                let eigenvalues = m.symmetric_eigen().eigenvalues;
                let mut log_det = 0.0;
                for lambda in eigenvalues.iter() {
                    if *lambda <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "log det of matrix with non-positive eigenvalue {lambda}"
                        )));
                    }
                    log_det += lambda.ln();
                }
                Ok(-0.5 * (n as f64 + 1.0) * log_det)
            }
        }
    }

    /// Riemannian inner product of two ambient tangent vectors at `at`.
    pub(crate) fn inner_raw(&self, at: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        match *self {
            Manifold::Euclidean(_) | Manifold::Sphere(_) => u.dot(v),
            Manifold::Spd(n) => {
                let p = sym_from_flat(at, n);
                let f = spd_factors(&p);
                let a = &f.inv_sqrt * sym_from_flat(u, n) * &f.inv_sqrt;
                let b = &f.inv_sqrt * sym_from_flat(v, n) * &f.inv_sqrt;
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto the tangent space.
    pub(crate) fn tangent_project_raw(&self, at: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            Manifold::Euclidean(_) => v.clone(),
            Manifold::Sphere(_) => v - at * at.dot(v),
            Manifold::Spd(n) => flat_from_sym(&symmetrize(&sym_from_flat(v, n))),
        }
    }

    /// An orthonormal basis of the tangent space at `at` under the metric,
    /// each vector in the ambient representation.
    pub(crate) fn tangent_basis_raw(&self, at: &DVector<f64>) -> Vec<DVector<f64>> {
        match *self {
            Manifold::Euclidean(d) => (0..d)
                .map(|j| {
                    let mut e = DVector::zeros(d);
                    e[j] = 1.0;
                    e
                })
                .collect(),
            Manifold::Sphere(d) => {
                // Columns 1..d of the Householder reflector sending e0 to
                // ∓at; they are orthonormal and orthogonal to at.
                let sign = if at[0] >= 0.0 { 1.0 } else { -1.0 };
                let mut u = at.clone();
                u[0] += sign;
                let scale = 2.0 / u.dot(&u);
                (1..d)
                    .map(|j| {
                        let mut b = &u * (-scale * u[j]);
                        b[j] += 1.0;
                        b
                    })
                    .collect()
            }
            Manifold::Spd(n) => {
                let p = sym_from_flat(at, n);
                let f = spd_factors(&p);
                let mut basis = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    for j in i..n {
                        let mut b = DMatrix::zeros(n, n);
                        if i == j {
                            b[(i, i)] = 1.0;
                        } else {
                            let s = std::f64::consts::FRAC_1_SQRT_2;
                            b[(i, j)] = s;
                            b[(j, i)] = s;
                        }
                        basis.push(flat_from_sym(&symmetrize(&(&f.sqrt * b * &f.sqrt))));
                    }
                }
                basis
            }
        }
    }
}

/// A point on a [`Manifold`], validated on construction.
#[derive(Debug, Clone)]
pub struct Point {
    manifold: Manifold,
    coords: DVector<f64>,
}

impl Point {
    /// Wraps coordinates after checking the manifold invariants.
    pub fn new(manifold: Manifold, coords: DVector<f64>) -> Result<Self> {
        manifold.check_point(&coords)?;
        Ok(Point { manifold, coords })
    }

    /// Projects arbitrary ambient coordinates onto the manifold: identity
    /// for Euclidean space, normalization for the sphere, symmetrization
    /// plus an eigenvalue clamp at [`SPD_EIGEN_FLOOR`] for SPD.
    pub fn project(manifold: Manifold, raw: &DVector<f64>) -> Result<Self> {
        let coords = manifold.project_raw(raw)?;
        Ok(Point { manifold, coords })
    }

    pub(crate) fn from_coords_unchecked(manifold: Manifold, coords: DVector<f64>) -> Self {
        Point { manifold, coords }
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// SPD points viewed as a matrix; errors for other families.
    pub fn as_matrix(&self) -> Result<DMatrix<f64>> {
        match self.manifold {
            Manifold::Spd(n) => Ok(sym_from_flat(&self.coords, n)),
            _ => Err(Error::InvalidArgument("point is not an SPD matrix".into())),
        }
    }
}

/// A tangent vector, stored in the ambient representation together with its
/// base point.
#[derive(Debug, Clone)]
pub struct Tangent {
    base: Point,
    coords: DVector<f64>,
}

impl Tangent {
    /// Wraps an ambient vector after checking it is tangent at `base`
    /// (orthogonal to the base point on the sphere, symmetric for SPD).
    pub fn new(base: Point, coords: DVector<f64>) -> Result<Self> {
        if coords.len() != base.manifold.coord_len() {
            return Err(Error::InvalidArgument("tangent vector has wrong length".into()));
        }
        match base.manifold {
            Manifold::Euclidean(_) => {}
            Manifold::Sphere(_) => {
                if base.coords.dot(&coords).abs() > POINT_TOL {
                    return Err(Error::InvalidPoint(
                        "sphere tangent vector is not orthogonal to its base point".into(),
                    ));
                }
            }
            Manifold::Spd(n) => {
                let m = sym_from_flat(&coords, n);
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (m[(i, j)] - m[(j, i)]).abs() > POINT_TOL {
                            return Err(Error::InvalidPoint(
                                "SPD tangent vector is not symmetric".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Tangent { base, coords })
    }

    pub(crate) fn from_coords_unchecked(base: Point, coords: DVector<f64>) -> Self {
        Tangent { base, coords }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    /// Norm in the Riemannian metric at the base point.
    pub fn norm(&self) -> f64 {
        self.base
            .manifold
            .inner_raw(&self.base.coords, &self.coords, &self.coords)
            .max(0.0)
            .sqrt()
    }
}

fn check_same_manifold(x: &Point, y: &Point) -> Result<()> {
    if x.manifold != y.manifold {
        return Err(Error::ManifoldMismatch(format!(
            "{:?} vs {:?}",
            x.manifold, y.manifold
        )));
    }
    Ok(())
}

/// Geodesic distance between two points on the same manifold.
pub fn dist(x: &Point, y: &Point) -> Result<f64> {
    check_same_manifold(x, y)?;
    Ok(x.manifold.dist_raw(&x.coords, &y.coords))
}

/// Riemannian logarithm map: the initial velocity of the geodesic from `x`
/// to `y`. Undefined (error) for antipodal sphere pairs.
pub fn log_map(x: &Point, y: &Point) -> Result<Tangent> {
    check_same_manifold(x, y)?;
    let v = x.manifold.log_raw(&x.coords, &y.coords)?;
    Ok(Tangent::from_coords_unchecked(x.clone(), v))
}

/// Riemannian exponential map: shoots the geodesic from the tangent's base
/// point with the tangent as initial velocity.
pub fn exp_map(v: &Tangent) -> Result<Point> {
    let base = v.base();
    let coords = base.manifold.exp_raw(&base.coords, &v.coords)?;
    Ok(Point::from_coords_unchecked(base.manifold, coords))
}

/// ½·log det G at `x`, up to a per-manifold additive constant (constants
/// cancel in the volume ratios this feeds).
pub fn log_volume_density(x: &Point) -> Result<f64> {
    x.manifold.log_volume_density_raw(&x.coords)
}

/// Outcome of the intrinsic (Karcher) mean iteration.
#[derive(Debug, Clone)]
pub struct MeanOutcome {
    pub mean: Point,
    pub converged: bool,
    pub iterations: usize,
}

/// Intrinsic mean by fixed-point iteration μ ← exp_μ(mean of log_μ(x_i)),
/// initialized at the projected Euclidean average of the coordinates.
///
/// Stops when the mean tangent norm drops below `tol`; after `max_iter`
/// steps the best iterate is returned with `converged = false`.
pub fn intrinsic_mean(points: &[Point], tol: f64, max_iter: usize) -> Result<MeanOutcome> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("intrinsic mean of an empty set".into()));
    }
    let manifold = points[0].manifold;
    for p in points {
        if p.manifold != manifold {
            return Err(Error::ManifoldMismatch(
                "intrinsic mean over mixed manifolds".into(),
            ));
        }
    }
    let n = points.len() as f64;
    let mut avg = DVector::zeros(manifold.coord_len());
    for p in points {
        avg += &p.coords;
    }
    avg /= n;
    let mut mu = manifold
        .project_raw(&avg)
        .map_err(|_| Error::Numerical("degenerate coordinate average for mean init".into()))?;

    for it in 0..max_iter {
        let mut step = DVector::zeros(manifold.coord_len());
        for (i, p) in points.iter().enumerate() {
            let log = manifold.log_raw(&mu, &p.coords).map_err(|e| match e {
                Error::Antipodal { .. } => Error::Antipodal { index: Some(i) },
                other => other,
            })?;
            step += log;
        }
        step /= n;
        let step_norm = manifold.inner_raw(&mu, &step, &step).max(0.0).sqrt();
        if step_norm < tol {
            return Ok(MeanOutcome {
                mean: Point::from_coords_unchecked(manifold, mu),
                converged: true,
                iterations: it,
            });
        }
        mu = manifold.exp_raw(&mu, &step)?;
    }
    Ok(MeanOutcome {
        mean: Point::from_coords_unchecked(manifold, mu),
        converged: false,
        iterations: max_iter,
    })
}

/// An orthonormal basis of the tangent space at `base`, as tangent vectors.
pub fn tangent_basis(base: &Point) -> Vec<Tangent> {
    base.manifold
        .tangent_basis_raw(&base.coords)
        .into_iter()
        .map(|b| Tangent::from_coords_unchecked(base.clone(), b))
        .collect()
}

/// Maps points into the tangent space at `base`, one row per point, in an
/// orthonormal basis. Row norms equal the geodesic distance to `base`.
pub fn tangent_coords(base: &Point, points: &[Point]) -> Result<DMatrix<f64>> {
    let manifold = base.manifold;
    for p in points {
        if p.manifold != manifold {
            return Err(Error::ManifoldMismatch(
                "tangent coordinates over mixed manifolds".into(),
            ));
        }
    }
    let dim = manifold.intrinsic_dim();
    let mut out = DMatrix::zeros(points.len(), dim);
    match manifold {
        Manifold::Euclidean(_) => {
            for (r, p) in points.iter().enumerate() {
                for c in 0..dim {
                    out[(r, c)] = p.coords[c] - base.coords[c];
                }
            }
        }
        Manifold::Sphere(_) => {
            let basis = manifold.tangent_basis_raw(&base.coords);
            for (r, p) in points.iter().enumerate() {
                let log = manifold.log_raw(&base.coords, &p.coords).map_err(|e| match e {
                    Error::Antipodal { .. } => Error::Antipodal { index: Some(r) },
                    other => other,
                })?;
                for (c, b) in basis.iter().enumerate() {
                    out[(r, c)] = b.dot(&log);
                }
            }
        }
        Manifold::Spd(n) => {
            // Coordinates of log_P(X) in the basis E_a = P^{1/2} B_a P^{1/2}
            // are read directly off W = logm(P^{-1/2} X P^{-1/2}).
            let p = sym_from_flat(&base.coords, n);
            let f = spd_factors(&p);
            for (r, x) in points.iter().enumerate() {
                let inner = symmetrize(&(&f.inv_sqrt * sym_from_flat(&x.coords, n) * &f.inv_sqrt));
                let w = sym_matrix_fn(&inner, |lambda| {
                    if lambda <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "matrix log of non-positive eigenvalue {lambda} (index {r})"
                        )));
                    }
                    Ok(lambda.ln())
                })?;
                let mut c = 0;
                for i in 0..n {
                    for j in i..n {
                        out[(r, c)] = if i == j {
                            w[(i, i)]
                        } else {
                            std::f64::consts::SQRT_2 * w[(i, j)]
                        };
                        c += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Length of the piecewise-geodesic path through `points`: the sum of
/// geodesic distances over consecutive pairs.
pub fn polyline_length(points: &[Point]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "polyline length needs at least two points".into(),
        ));
    }
    let manifold = points[0].manifold;
    for p in points {
        if p.manifold != manifold {
            return Err(Error::ManifoldMismatch("polyline over mixed manifolds".into()));
        }
    }
    Ok(points
        .windows(2)
        .map(|w| manifold.dist_raw(&w[0].coords, &w[1].coords))
        .sum())
}

// ─── symmetric-matrix helpers ────────────────────────────────────────────

/// Reads a flat row-major coordinate vector as an n×n matrix.
pub(crate) fn sym_from_flat(coords: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, coords.as_slice())
}

/// Flattens a (symmetric) matrix back to row-major coordinates.
pub(crate) fn flat_from_sym(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    DVector::from_fn(n * n, |k, _| m[(k / n, k % n)])
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Applies a scalar function to the eigenvalues of a symmetric matrix.
pub(crate) fn sym_matrix_fn(
    m: &DMatrix<f64>,
    f: impl Fn(f64) -> Result<f64>,
) -> Result<DMatrix<f64>> {
    let eig = m.clone().symmetric_eigen();
    let mut scaled = eig.eigenvectors.clone();
    for (c, lambda) in eig.eigenvalues.iter().enumerate() {
        let v = f(*lambda)?;
        for r in 0..scaled.nrows() {
            scaled[(r, c)] *= v;
        }
    }
    Ok(&scaled * eig.eigenvectors.transpose())
}

/// Square root and inverse square root of an SPD matrix.
pub(crate) struct SpdFactors {
    pub sqrt: DMatrix<f64>,
    pub inv_sqrt: DMatrix<f64>,
}

pub(crate) fn spd_factors(m: &DMatrix<f64>) -> SpdFactors {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut sqrt_scaled = eig.eigenvectors.clone();
    let mut inv_scaled = eig.eigenvectors.clone();
    for c in 0..n {
        // Valid SPD points have strictly positive eigenvalues; the floor
        // only guards against roundoff on nearly singular inputs.
        let lambda = eig.eigenvalues[c].max(f64::MIN_POSITIVE);
        let s = lambda.sqrt();
        for r in 0..n {
            sqrt_scaled[(r, c)] *= s;
            inv_scaled[(r, c)] /= s;
        }
    }
    SpdFactors {
        sqrt: &sqrt_scaled * eig.eigenvectors.transpose(),
        inv_sqrt: &inv_scaled * eig.eigenvectors.transpose(),
    }
}

/// Affine-invariant distance given the inverse square root of the first
/// argument: ‖logm(X^{-1/2} Y X^{-1/2})‖_F.
pub(crate) fn spd_dist_from_inv_sqrt(inv_sqrt_x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    let inner = symmetrize(&(inv_sqrt_x * y * inv_sqrt_x));
    let eigenvalues = inner.symmetric_eigen().eigenvalues;
    eigenvalues
        .iter()
        .map(|lambda| lambda.max(f64::MIN_POSITIVE).ln().powi(2))
        .sum::<f64>()
        .sqrt()
}
