//! High-dimensional joint distribution P.
//!
//! Pairwise similarities come from the heat-kernel approximation of a
//! Brownian motion on the data manifold,
//!
//! ```text
//! s(x_j | x_i) = (2πt_i)^(-D/2) · H[i,j] · exp(-dist²(x_i, x_j) / (2 t_i)),
//! ```
//!
//! where `H[i,j] = exp(λ_i - λ_j)` is the ratio of Riemannian volume
//! densities (λ = ½·log det G) and the diffusion time `t_i` plays the role
//! of a per-point Gaussian variance. Each row is calibrated by binary search
//! so that its conditional distribution hits a target perplexity, then the
//! conditionals are symmetrized into `p_ij = (p_{j|i} + p_{i|j}) / 2n`.
//!
//! Unlike Gaussian SNE, the volume factor `H[i,k]` varies inside a row and
//! must stay inside the normalizing sums; only the `(2πt)^(-D/2)` prefactor
//! cancels. Rows are evaluated in log space with per-row max subtraction, so
//! small diffusion times cannot underflow a whole row.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dataset::DatasetTable;
use crate::error::{Error, Result};
use crate::geometry;
use crate::neighbors::VpTree;

/// Maximum binary-search steps per row calibration.
pub const BINARY_SEARCH_STEPS: usize = 100;

/// Convergence tolerance on |H(P_i) - log₂(perplexity)| in bits.
pub const PERPLEXITY_TOLERANCE: f64 = 1e-5;

/// Floor applied to P entries where they feed log/ratio terms of the KL
/// cost (never during row normalization).
pub const P_FLOOR: f64 = 1e-12;

/// Parameters of the Brownian-motion similarity.
#[derive(Debug, Clone, Copy)]
pub struct BrownianParams {
    /// Diffusion time; corresponds to variance in Euclidean space.
    pub t: f64,
    /// Dimension of the data manifold.
    pub dim: usize,
}

impl BrownianParams {
    pub fn new(t: f64, dim: usize) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "diffusion time must be positive, got {t}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("manifold dimension must be >= 1".into()));
        }
        Ok(BrownianParams { t, dim })
    }
}

/// Heat-kernel transition density between two points at geodesic distance
/// `distance`, with volume ratio `volume_ratio` between start and end point.
///
/// Evaluated in log space and exponentiated; extreme inputs underflow to 0.
/// With `volume_ratio = 1` and a Euclidean distance this is exactly the
/// isotropic Gaussian density with σ² = t.
pub fn brownian_similarity(distance: f64, volume_ratio: f64, params: &BrownianParams) -> f64 {
    (volume_ratio.ln() + log_brownian(distance, 0.0, params.t, params.dim)).exp()
}

/// Log heat kernel with the volume ratio already in log form.
#[inline]
pub(crate) fn log_brownian(distance: f64, log_volume_ratio: f64, t: f64, dim: usize) -> f64 {
    -(dim as f64) / 2.0 * (2.0 * std::f64::consts::PI * t).ln() + log_volume_ratio
        - distance * distance / (2.0 * t)
}

/// Per-point log volume densities λ_i = ½·log det G(x_i) (up to a constant).
pub fn log_volume_densities(data: &DatasetTable) -> Result<Vec<f64>> {
    data.points().iter().map(geometry::log_volume_density).collect()
}

/// The n×n matrix of volume ratios H[i,j] = exp(λ_i - λ_j).
///
/// All-ones for homogeneous manifolds (Euclidean, sphere); satisfies
/// H[i,j]·H[j,i] = 1 and a unit diagonal.
pub fn volume_ratio_matrix(data: &DatasetTable) -> Result<DMatrix<f64>> {
    let lambda = log_volume_densities(data)?;
    let n = lambda.len();
    Ok(DMatrix::from_fn(n, n, |i, j| (lambda[i] - lambda[j]).exp()))
}

/// Conditional probabilities of one row at a fixed diffusion time, plus the
/// row's Shannon entropy in bits.
///
/// `dists[j]` and `log_h0[j]` describe the j-th candidate neighbor (the row
/// point itself is excluded by the caller).
pub fn conditional_row(
    dists: &[f64],
    log_h0: &[f64],
    dim: usize,
    t: f64,
) -> Result<(Vec<f64>, f64)> {
    if dists.is_empty() || dists.len() != log_h0.len() {
        return Err(Error::InvalidArgument(format!(
            "row needs matching non-empty distances ({}) and volume ratios ({})",
            dists.len(),
            log_h0.len()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "diffusion time must be positive, got {t}"
        )));
    }
    let logits: Vec<f64> =
        dists.iter().zip(log_h0).map(|(&d, &lh)| log_brownian(d, lh, t, dim)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(
            "similarity row vanished entirely; data is degenerate at this scale".into(),
        ));
    }
    let mut probs: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = probs.iter().sum();
    let mut entropy_bits = 0.0;
    for p in probs.iter_mut() {
        *p /= sum;
        if *p > 0.0 {
            entropy_bits -= *p * p.log2();
        }
    }
    Ok((probs, entropy_bits))
}

/// One calibrated conditional row.
#[derive(Debug, Clone)]
pub struct CalibratedRow {
    /// Probabilities over the candidate neighbors, summing to 1.
    pub probs: Vec<f64>,
    /// Fitted diffusion time.
    pub t: f64,
    /// Achieved perplexity 2^H.
    pub perplexity: f64,
    /// Whether |H - log₂(target)| ≤ [`PERPLEXITY_TOLERANCE`] was reached.
    pub converged: bool,
    /// Binary-search steps taken.
    pub steps: usize,
}

/// Fits the diffusion time of one row to a target perplexity.
///
/// Binary search starting from t = 1 with open bounds: doubling (or halving)
/// until the target is bracketed, then bisection, for at most
/// [`BINARY_SEARCH_STEPS`] evaluations. On exhaustion the last iterate is
/// returned with `converged = false`.
pub fn calibrate_row(
    dists: &[f64],
    log_h0: &[f64],
    dim: usize,
    target_perplexity: f64,
) -> Result<CalibratedRow> {
    if !(target_perplexity >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "target perplexity must be >= 1, got {target_perplexity}"
        )));
    }
    let target_bits = target_perplexity.log2();
    let mut t = 1.0_f64;
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    let mut last: Option<(Vec<f64>, f64, f64)> = None;

    for step in 1..=BINARY_SEARCH_STEPS {
        let (probs, entropy_bits) = conditional_row(dists, log_h0, dim, t)?;
        let diff = entropy_bits - target_bits;
        last = Some((probs, entropy_bits, t));
        if diff.abs() <= PERPLEXITY_TOLERANCE {
            let (probs, h, t) = last.unwrap();
            return Ok(CalibratedRow { probs, t, perplexity: h.exp2(), converged: true, steps: step });
        }
        if diff < 0.0 {
            // Too few effective neighbors: spread the kernel.
            t_min = t;
            t = if t_max.is_infinite() { 2.0 * t } else { 0.5 * (t + t_max) };
        } else {
            t_max = t;
            t = if t_min.is_infinite() { 0.5 * t } else { 0.5 * (t + t_min) };
        }
    }
    let (probs, h, t) = last.expect("at least one evaluation");
    Ok(CalibratedRow {
        probs,
        t,
        perplexity: h.exp2(),
        converged: false,
        steps: BINARY_SEARCH_STEPS,
    })
}

/// Whether joint affinities describe the data (P) or the embedding (Q).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AffinityKind {
    JointP,
    JointQ,
}

/// Symmetric sparse matrix in CSR form with both (i,j) and (j,i) stored.
#[derive(Debug, Clone)]
struct SparseSym {
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseSym {
    /// Builds from deduplicated upper-triangle entries (i < j).
    fn from_upper(n: usize, upper: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n];
        for &(i, j, _) in upper {
            counts[i] += 1;
            counts[j] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + counts[i];
        }
        let nnz = row_ptr[n];
        let mut col = vec![0usize; nnz];
        let mut val = vec![0.0; nnz];
        let mut fill = row_ptr.clone();
        for &(i, j, v) in upper {
            col[fill[i]] = j;
            val[fill[i]] = v;
            fill[i] += 1;
            col[fill[j]] = i;
            val[fill[j]] = v;
            fill[j] += 1;
        }
        let mut s = SparseSym { row_ptr, col, val };
        for i in 0..n {
            let (a, b) = (s.row_ptr[i], s.row_ptr[i + 1]);
            let mut pairs: Vec<(usize, f64)> =
                s.col[a..b].iter().cloned().zip(s.val[a..b].iter().cloned()).collect();
            pairs.sort_by_key(|&(c, _)| c);
            for (k, (c, v)) in pairs.into_iter().enumerate() {
                s.col[a + k] = c;
                s.val[a + k] = v;
            }
        }
        s
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col[a..b].binary_search(&j) {
            Ok(k) => self.val[a + k],
            Err(_) => 0.0,
        }
    }
}

/// A symmetric joint distribution over point pairs, dense or sparse.
#[derive(Debug, Clone)]
pub struct AffinityMatrix {
    kind: AffinityKind,
    n: usize,
    storage: Storage,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(DMatrix<f64>),
    Sparse(SparseSym),
}

impl AffinityMatrix {
    pub(crate) fn dense(kind: AffinityKind, m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        AffinityMatrix { kind, n: m.nrows(), storage: Storage::Dense(m) }
    }

    pub(crate) fn sparse_from_upper(
        kind: AffinityKind,
        n: usize,
        upper: &[(usize, usize, f64)],
    ) -> Self {
        AffinityMatrix { kind, n, storage: Storage::Sparse(SparseSym::from_upper(n, upper)) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> AffinityKind {
        self.kind
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        match &self.storage {
            Storage::Dense(m) => m[(i, j)],
            Storage::Sparse(s) => s.get(i, j),
        }
    }

    /// Sum over all ordered pairs i ≠ j.
    pub fn sum(&self) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m.iter().sum(),
            Storage::Sparse(s) => s.val.iter().sum(),
        }
    }

    /// Multiplies every entry in place (early exaggeration).
    pub fn scale_in_place(&mut self, factor: f64) {
        match &mut self.storage {
            Storage::Dense(m) => m.iter_mut().for_each(|v| *v *= factor),
            Storage::Sparse(s) => s.val.iter_mut().for_each(|v| *v *= factor),
        }
    }

    /// Visits the nonzero entries (j, value) of row `i`.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(m) => {
                for j in 0..self.n {
                    let v = m[(i, j)];
                    if j != i && v != 0.0 {
                        f(j, v);
                    }
                }
            }
            Storage::Sparse(s) => {
                for k in s.row_ptr[i]..s.row_ptr[i + 1] {
                    if s.val[k] != 0.0 {
                        f(s.col[k], s.val[k]);
                    }
                }
            }
        }
    }

    /// Visits all nonzero ordered pairs (i, j, value), i ≠ j.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        for i in 0..self.n {
            self.for_each_in_row(i, |j, v| f(i, j, v));
        }
    }
}

/// Dense or sparse construction of P.
#[derive(Debug, Clone, Copy)]
pub enum PMode {
    /// All pairwise distances, every row calibrated over all others.
    Dense,
    /// Distances only to each point's nearest neighbors found by a VP tree;
    /// conditionals are normalized over those neighbors and non-neighbors
    /// get probability exactly 0 before symmetrization.
    Sparse {
        /// Neighbor count τ; defaults to ⌊3·perplexity⌋ when `None`.
        neighbors: Option<usize>,
        /// Seed for the VP tree's vantage selection.
        seed: u64,
    },
}

/// Per-row calibration diagnostics from [`build_p`].
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    /// Fitted diffusion time per row.
    pub t: Vec<f64>,
    /// Achieved perplexity per row.
    pub perplexity: Vec<f64>,
    /// Rows whose binary search exhausted its step budget.
    pub unconverged: Vec<usize>,
}

impl CalibrationReport {
    pub fn all_converged(&self) -> bool {
        self.unconverged.is_empty()
    }
}

/// Builds the joint distribution P over `data` at the given perplexity.
pub fn build_p(
    data: &DatasetTable,
    perplexity: f64,
    mode: PMode,
) -> Result<(AffinityMatrix, CalibrationReport)> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("P needs at least 2 points, got {n}")));
    }
    if !(perplexity >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "perplexity must be >= 1, got {perplexity}"
        )));
    }
    let dim = data.manifold().intrinsic_dim();
    let lambda = log_volume_densities(data)?;

    match mode {
        PMode::Dense => {
            let dists = data.pairwise_distances();
            let rows: Vec<CalibratedRow> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut d = Vec::with_capacity(n - 1);
                    let mut lh = Vec::with_capacity(n - 1);
                    for j in 0..n {
                        if j != i {
                            d.push(dists[(i, j)]);
                            lh.push(lambda[i] - lambda[j]);
                        }
                    }
                    calibrate_row(&d, &lh, dim, perplexity)
                        .map_err(|e| Error::Numerical(format!("row {i}: {e}")))
                })
                .collect::<Result<_>>()?;

            let mut joint = DMatrix::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let mut k = 0;
                for j in 0..n {
                    if j != i {
                        joint[(i, j)] = row.probs[k];
                        k += 1;
                    }
                }
            }
            // p_ij = (p_{j|i} + p_{i|j}) / 2n
            let sym = (&joint + joint.transpose()) / (2.0 * n as f64);
            Ok((AffinityMatrix::dense(AffinityKind::JointP, sym), report_from(&rows)))
        }
        PMode::Sparse { neighbors, seed } => {
            let tau = neighbors.unwrap_or((3.0 * perplexity).floor() as usize);
            if tau == 0 || tau > n - 1 {
                return Err(Error::InvalidArgument(format!(
                    "neighbor count {tau} must be in 1..={}",
                    n - 1
                )));
            }
            let tree = VpTree::build(data, seed)?;
            let lists: Vec<_> =
                (0..n).into_par_iter().map(|i| tree.knn(i, tau)).collect::<Result<_>>()?;
            let rows: Vec<CalibratedRow> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let d: Vec<f64> = lists[i].iter().map(|nb| nb.distance).collect();
                    let lh: Vec<f64> =
                        lists[i].iter().map(|nb| lambda[i] - lambda[nb.index]).collect();
                    calibrate_row(&d, &lh, dim, perplexity)
                        .map_err(|e| Error::Numerical(format!("row {i}: {e}")))
                })
                .collect::<Result<_>>()?;

            let mut tri: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n * tau);
            for i in 0..n {
                for (nb, &c) in lists[i].iter().zip(rows[i].probs.iter()) {
                    let (a, b) = if i < nb.index { (i, nb.index) } else { (nb.index, i) };
                    tri.push((a, b, c));
                }
            }
            tri.sort_by_key(|&(a, b, _)| (a, b));
            let scale = 1.0 / (2.0 * n as f64);
            let mut upper: Vec<(usize, usize, f64)> = Vec::with_capacity(tri.len());
            for (a, b, c) in tri {
                match upper.last_mut() {
                    Some(last) if last.0 == a && last.1 == b => last.2 += c * scale,
                    _ => upper.push((a, b, c * scale)),
                }
            }
            Ok((
                AffinityMatrix::sparse_from_upper(AffinityKind::JointP, n, &upper),
                report_from(&rows),
            ))
        }
    }
}

fn report_from(rows: &[CalibratedRow]) -> CalibrationReport {
    CalibrationReport {
        t: rows.iter().map(|r| r.t).collect(),
        perplexity: rows.iter().map(|r| r.perplexity).collect(),
        unconverged: rows
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.converged)
            .map(|(i, _)| i)
            .collect(),
    }
}
