//! Low-dimensional similarity families, Q construction, KL cost/gradient,
//! and the constrained gradient-descent optimizer.
//!
//! Q is built exactly like P: row-normalized conditionals that are then
//! symmetrized, q_ij = (q_{j|i} + q_{i|j}) / 2n. This is NOT the jointly
//! normalized Q of reference t-SNE implementations, so the classic
//! closed-form gradient does not apply; the gradient here is derived from
//! the row-normalized construction and checked against finite differences.
//!
//! For a symmetric kernel s and S_i = Σ_{k≠i} s_ik the cost gradient at
//! point m works out to
//!
//! ```text
//! ∇_m C = -2 Σ_j (p_mj / s_mj) ∂s_mj
//!         + 2 (ρ_m / S_m²) Σ_k ∂s_mk
//!         + 2 Σ_i (ρ_i / S_i²) ∂s_mi,      ρ_i = Σ_j p_ij S_i S_j / (S_i + S_j)
//! ```
//!
//! with ∂s_mj the partial of s(y_m, y_j) with respect to y_m. The first sum
//! runs over P's support only; the other two are the n-body field that the
//! Barnes-Hut variant approximates.

mod barnes_hut;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::affinity::{AffinityKind, AffinityMatrix, P_FLOOR};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, Point};

pub use barnes_hut::BhTree;

/// Similarity model over the low-dimensional representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityFamily {
    /// t-distribution with one degree of freedom: s = (1 + ‖Δ‖²)⁻¹.
    /// Requires a Euclidean target.
    StudentT,
    /// Unnormalized von Mises–Fisher with κ = 1: s = exp(y_i·y_j).
    /// Requires a sphere target.
    VonMisesFisher,
    /// Brownian heat kernel with t = 1 on the target manifold.
    Brownian,
}

/// Target manifold plus the similarity family used over it.
#[derive(Debug, Clone, Copy)]
pub struct TargetSpace {
    manifold: Manifold,
    family: SimilarityFamily,
}

impl TargetSpace {
    pub fn new(manifold: Manifold, family: SimilarityFamily) -> Result<Self> {
        match (family, manifold) {
            (SimilarityFamily::StudentT, Manifold::Euclidean(_)) => {}
            (SimilarityFamily::StudentT, _) => {
                return Err(Error::InvalidArgument(
                    "student-t similarities require a Euclidean target".into(),
                ));
            }
            (SimilarityFamily::VonMisesFisher, Manifold::Sphere(_)) => {}
            (SimilarityFamily::VonMisesFisher, _) => {
                return Err(Error::InvalidArgument(
                    "von Mises-Fisher similarities require a sphere target".into(),
                ));
            }
            (SimilarityFamily::Brownian, _) => {}
        }
        Ok(TargetSpace { manifold, family })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn family(&self) -> SimilarityFamily {
        self.family
    }
}

/// The similarity s_low(y_j | y_i) between two points on the target
/// manifold.
///
/// Constants that cancel in row normalization are dropped for StudentT and
/// VonMisesFisher; the Brownian family is the genuine heat-kernel density
/// with t = 1.
pub fn s_low(yi: &Point, yj: &Point, target: &TargetSpace) -> Result<f64> {
    if yi.manifold() != target.manifold || yj.manifold() != target.manifold {
        return Err(Error::ManifoldMismatch("points are not on the target manifold".into()));
    }
    pair_similarity(target, yi.coords(), yj.coords())
}

/// s(y_j | y_i) on raw coordinates.
fn pair_similarity(target: &TargetSpace, yi: &DVector<f64>, yj: &DVector<f64>) -> Result<f64> {
    match target.family {
        SimilarityFamily::StudentT => {
            let u = (yi - yj).norm_squared();
            Ok(1.0 / (1.0 + u))
        }
        SimilarityFamily::VonMisesFisher => Ok(yi.dot(yj).exp()),
        SimilarityFamily::Brownian => {
            let d = target.manifold.dist_raw(yi, yj);
            let log_ratio = target.manifold.log_volume_density_raw(yi)?
                - target.manifold.log_volume_density_raw(yj)?;
            let dim = target.manifold.intrinsic_dim() as f64;
            Ok((log_ratio - dim / 2.0 * (2.0 * std::f64::consts::PI).ln() - d * d / 2.0).exp())
        }
    }
}

/// Kernel evaluation for the gradient: s(y_i, y_j) plus ∂s/∂y_i in ambient
/// coordinates. Only defined for the symmetric-kernel targets the optimizer
/// supports (Euclidean and sphere manifolds).
fn pair_similarity_grad(
    target: &TargetSpace,
    yi: &DVector<f64>,
    yj: &DVector<f64>,
) -> (f64, DVector<f64>) {
    match (target.family, target.manifold) {
        (SimilarityFamily::StudentT, _) => {
            let diff = yi - yj;
            let s = 1.0 / (1.0 + diff.norm_squared());
            (s, diff * (-2.0 * s * s))
        }
        (SimilarityFamily::VonMisesFisher, _) => {
            let s = yi.dot(yj).exp();
            (s, yj * s)
        }
        (SimilarityFamily::Brownian, Manifold::Euclidean(d)) => {
            let diff = yi - yj;
            let s = (-(d as f64) / 2.0 * (2.0 * std::f64::consts::PI).ln()
                - diff.norm_squared() / 2.0)
                .exp();
            (s, diff * (-s))
        }
        (SimilarityFamily::Brownian, Manifold::Sphere(d)) => {
            let dim = (d - 1) as f64;
            let c = yi.dot(yj).clamp(-1.0, 1.0);
            let theta = c.acos();
            let s = (-dim / 2.0 * (2.0 * std::f64::consts::PI).ln() - theta * theta / 2.0).exp();
            // d(-θ²/2)/dy_i = (θ/sin θ)·y_j; the factor tends to 1 at θ→0
            // and is clamped near the cut locus.
            let factor = if theta < 1e-7 {
                1.0
            } else {
                theta / theta.sin().max(1e-9)
            };
            (s, yj * (s * factor))
        }
        (SimilarityFamily::Brownian, Manifold::Spd(_)) => {
            unreachable!("gradient targets are validated before kernel use")
        }
    }
}

fn gradient_target_supported(target: &TargetSpace) -> Result<()> {
    match target.manifold {
        Manifold::Euclidean(_) | Manifold::Sphere(_) => Ok(()),
        Manifold::Spd(_) => Err(Error::InvalidArgument(
            "gradient-based optimization supports Euclidean and sphere targets only".into(),
        )),
    }
}

/// The low-dimensional representation being optimized.
#[derive(Debug, Clone)]
pub struct EmbeddingState {
    manifold: Manifold,
    points: Vec<DVector<f64>>,
    velocity: Vec<DVector<f64>>,
    pub iteration: usize,
    pub exaggeration_active: bool,
}

impl EmbeddingState {
    /// Wraps explicit coordinates after validating them against the target
    /// manifold.
    pub fn new(manifold: Manifold, points: Vec<DVector<f64>>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            manifold
                .check_point(p)
                .map_err(|e| Error::InvalidPoint(format!("embedding point {i}: {e}")))?;
        }
        let velocity = points.iter().map(|p| DVector::zeros(p.len())).collect();
        Ok(EmbeddingState { manifold, points, velocity, iteration: 0, exaggeration_active: false })
    }

    pub fn manifold(&self) -> Manifold {
        self.manifold
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> &[DVector<f64>] {
        &self.points
    }

    /// The embedded points as validated manifold points.
    pub fn to_points(&self) -> Result<Vec<Point>> {
        self.points.iter().map(|c| Point::new(self.manifold, c.clone())).collect()
    }
}

/// Gradient-descent settings. The defaults follow common t-SNE practice:
/// learning rate 200, momentum 0.5 switching to 0.8 when the ×12 early
/// exaggeration ends after 250 iterations.
#[derive(Debug, Clone)]
pub struct OptimizerConfig {
    pub iters: usize,
    pub learning_rate: f64,
    pub momentum_early: f64,
    pub momentum_late: f64,
    pub exaggeration_factor: f64,
    pub exaggeration_iters: usize,
    /// Barnes-Hut cell criterion; 0 disables the approximation. Only used
    /// for student-t similarities over ℝ² or ℝ³.
    pub bh_theta: f64,
    /// Update sphere targets with the exact exponential map instead of the
    /// project-then-renormalize retraction.
    pub sphere_exact_exp: bool,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            iters: 1000,
            learning_rate: 200.0,
            momentum_early: 0.5,
            momentum_late: 0.8,
            exaggeration_factor: 12.0,
            exaggeration_iters: 250,
            bh_theta: 0.5,
            sphere_exact_exp: false,
            seed: 42,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        for (name, m) in [("early", self.momentum_early), ("late", self.momentum_late)] {
            if !(0.0..1.0).contains(&m) {
                return Err(Error::InvalidArgument(format!(
                    "{name} momentum must be in [0, 1), got {m}"
                )));
            }
        }
        if !(self.exaggeration_factor > 0.0) {
            return Err(Error::InvalidArgument("exaggeration factor must be positive".into()));
        }
        if self.exaggeration_iters > self.iters {
            return Err(Error::InvalidArgument(format!(
                "exaggeration_iters ({}) exceeds iters ({})",
                self.exaggeration_iters, self.iters
            )));
        }
        if !(self.bh_theta >= 0.0) || !self.bh_theta.is_finite() {
            return Err(Error::InvalidArgument("bh_theta must be a finite value >= 0".into()));
        }
        Ok(())
    }
}

/// Seeded random initialization: for Euclidean targets iid normals with
/// standard deviation 1e-4 per coordinate; for sphere targets normalized
/// iid normals (uniform on the sphere).
pub fn init_embedding(n: usize, target: &TargetSpace, seed: u64) -> Result<EmbeddingState> {
    let manifold = target.manifold;
    let dim = manifold.coord_len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    match manifold {
        Manifold::Euclidean(_) => {
            for _ in 0..n {
                points.push(DVector::from_fn(dim, |_, _| {
                    1e-4 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                }));
            }
        }
        Manifold::Sphere(_) => {
            for _ in 0..n {
                loop {
                    let v = DVector::from_fn(dim, |_, _| {
                        <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                    });
                    let norm = v.norm();
                    if norm > 1e-12 {
                        points.push(v / norm);
                        break;
                    }
                }
            }
        }
        Manifold::Spd(_) => {
            return Err(Error::InvalidArgument(
                "embedding initialization supports Euclidean and sphere targets only".into(),
            ));
        }
    }
    let velocity = points.iter().map(|p| DVector::zeros(p.len())).collect();
    Ok(EmbeddingState { manifold, points, velocity, iteration: 0, exaggeration_active: false })
}

/// The joint distribution Q of the current embedding: row-normalized
/// conditionals over k ≠ i, symmetrized as q_ij = (q_{j|i} + q_{i|j}) / 2n.
pub fn build_q(state: &EmbeddingState, target: &TargetSpace) -> Result<AffinityMatrix> {
    if state.manifold != target.manifold {
        return Err(Error::ManifoldMismatch("state manifold differs from target".into()));
    }
    let n = state.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!("Q needs at least 2 points, got {n}")));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let mut s_row = vec![0.0; n];
            let mut sum = 0.0;
            for j in 0..n {
                if j != i {
                    // Row i holds q_{j|i}, built from s(y_j | y_i).
                    let s = pair_similarity(target, &state.points[i], &state.points[j])?;
                    s_row[j] = s;
                    sum += s;
                }
            }
            for v in s_row.iter_mut() {
                *v /= sum;
            }
            Ok(s_row)
        })
        .collect::<Result<_>>()?;
    let mut q = nalgebra::DMatrix::zeros(n, n);
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[(i, j)] = (rows[i][j] + rows[j][i]) * scale;
            }
        }
    }
    Ok(AffinityMatrix::dense(AffinityKind::JointQ, q))
}

/// KL divergence Σ p_ij·log(p_ij / q_ij) over pairs with p_ij > 0, guarded
/// by the [`P_FLOOR`] of the affinity module.
pub fn kl_cost(p: &AffinityMatrix, q: &AffinityMatrix) -> Result<f64> {
    if p.n() != q.n() {
        return Err(Error::InvalidArgument(format!(
            "P has {} points but Q has {}",
            p.n(),
            q.n()
        )));
    }
    let mut cost = 0.0;
    p.for_each(|i, j, pij| {
        let qij = q.get(i, j).max(P_FLOOR);
        cost += pij * (pij.max(P_FLOOR).ln() - qij.ln());
    });
    Ok(cost)
}

/// Gradient pass output: per-point gradients plus the pieces of the KL cost
/// (`kl_terms` = Σ p(ln p − ln q), `p_mass` = Σ p) so callers can undo an
/// exaggeration factor analytically.
pub(crate) struct GradientOutcome {
    pub grads: Vec<DVector<f64>>,
    pub kl_terms: f64,
    pub p_mass: f64,
}

/// Exact gradient of the KL cost through the row-normalize-then-symmetrize
/// Q construction. For sphere targets the ambient gradient is projected
/// onto each point's tangent space.
pub fn kl_gradient(
    p: &AffinityMatrix,
    state: &EmbeddingState,
    target: &TargetSpace,
) -> Result<Vec<DVector<f64>>> {
    Ok(kl_gradient_with_cost(p, state, target)?.grads)
}

pub(crate) fn kl_gradient_with_cost(
    p: &AffinityMatrix,
    state: &EmbeddingState,
    target: &TargetSpace,
) -> Result<GradientOutcome> {
    gradient_target_supported(target)?;
    if state.manifold != target.manifold {
        return Err(Error::ManifoldMismatch("state manifold differs from target".into()));
    }
    let n = state.len();
    if p.n() != n {
        return Err(Error::InvalidArgument(format!(
            "P has {} points but the state has {n}",
            p.n()
        )));
    }
    let pts = &state.points;
    let ambient = state.manifold.coord_len();

    // Row sums S_i and field sums T_i = Σ_k ∂s_ik.
    let st: Vec<(f64, DVector<f64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s_sum = 0.0;
            let mut t = DVector::zeros(ambient);
            for k in 0..n {
                if k != i {
                    let (s, a) = pair_similarity_grad(target, &pts[i], &pts[k]);
                    s_sum += s;
                    t += a;
                }
            }
            (s_sum, t)
        })
        .collect();

    let rho: Vec<f64> = (0..n)
        .map(|i| {
            let mut r = 0.0;
            p.for_each_in_row(i, |j, pij| {
                let (si, sj) = (st[i].0, st[j].0);
                r += pij * si * sj / (si + sj);
            });
            r
        })
        .collect();

    let two_n = 2.0 * n as f64;
    let per_point: Vec<(DVector<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|m| {
            let mut g = DVector::zeros(ambient);
            // Normalizer field: Σ_i (ρ_i/S_i²)·∂s_mi (the i=m term is the
            // T_m line below).
            for i in 0..n {
                if i != m {
                    let (_, a) = pair_similarity_grad(target, &pts[m], &pts[i]);
                    g += a * (2.0 * rho[i] / (st[i].0 * st[i].0));
                }
            }
            g += &st[m].1 * (2.0 * rho[m] / (st[m].0 * st[m].0));
            // Attractive part and the KL terms run over P's support only.
            let mut kl = 0.0;
            let mut mass = 0.0;
            p.for_each_in_row(m, |j, pmj| {
                let (s, a) = pair_similarity_grad(target, &pts[m], &pts[j]);
                g -= a * (2.0 * pmj / s);
                let q = (s * (1.0 / st[m].0 + 1.0 / st[j].0) / two_n).max(P_FLOOR);
                kl += pmj * (pmj.max(P_FLOOR).ln() - q.ln());
                mass += pmj;
            });
            if let Manifold::Sphere(_) = state.manifold {
                g = state.manifold.tangent_project_raw(&pts[m], &g);
            }
            (g, kl, mass)
        })
        .collect();

    let kl_terms = per_point.iter().map(|x| x.1).sum();
    let p_mass = per_point.iter().map(|x| x.2).sum();
    Ok(GradientOutcome { grads: per_point.into_iter().map(|x| x.0).collect(), kl_terms, p_mass })
}

/// Barnes-Hut approximation of [`kl_gradient`] for student-t similarities
/// over ℝ² or ℝ³.
///
/// A cell of diameter r at distance D from the query point is summarized by
/// its centroid and count when r/D < theta; theta = 0 recovers the exact
/// gradient. Attractive terms always iterate only P's support.
pub fn kl_gradient_barnes_hut(
    p: &AffinityMatrix,
    state: &EmbeddingState,
    theta: f64,
) -> Result<Vec<DVector<f64>>> {
    Ok(kl_gradient_bh_with_cost(p, state, theta)?.grads)
}

pub(crate) fn kl_gradient_bh_with_cost(
    p: &AffinityMatrix,
    state: &EmbeddingState,
    theta: f64,
) -> Result<GradientOutcome> {
    let dim = match state.manifold {
        Manifold::Euclidean(d) if d == 2 || d == 3 => d,
        other => {
            return Err(Error::InvalidArgument(format!(
                "Barnes-Hut gradients support student-t over ℝ² or ℝ³, not {other:?}"
            )));
        }
    };
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidArgument("theta must be a finite value >= 0".into()));
    }
    let n = state.len();
    if p.n() != n {
        return Err(Error::InvalidArgument(format!(
            "P has {} points but the state has {n}",
            p.n()
        )));
    }
    let pts = &state.points;
    let tree = BhTree::build(pts, dim);

    // Field pass: the tree sums include the query point itself (s = 1,
    // zero vector contribution), so S_i subtracts it back out.
    let st: Vec<(f64, [f64; 3])> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (s_with_self, t) = tree.field(&pts[i], theta);
            (s_with_self - 1.0, t)
        })
        .collect();

    let rho: Vec<f64> = (0..n)
        .map(|i| {
            let mut r = 0.0;
            p.for_each_in_row(i, |j, pij| {
                let (si, sj) = (st[i].0, st[j].0);
                r += pij * si * sj / (si + sj);
            });
            r
        })
        .collect();

    let weights: Vec<f64> = (0..n).map(|i| rho[i] / (st[i].0 * st[i].0)).collect();
    let weighted = tree.with_weights(&weights);

    let two_n = 2.0 * n as f64;
    let per_point: Vec<(DVector<f64>, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|m| {
            let w_field = weighted.weighted_field(&pts[m], theta);
            let mut g = DVector::zeros(dim);
            for c in 0..dim {
                g[c] = 2.0 * (w_field[c] + weights[m] * st[m].1[c]);
            }
            let mut kl = 0.0;
            let mut mass = 0.0;
            p.for_each_in_row(m, |j, pmj| {
                let diff = &pts[m] - &pts[j];
                let s = 1.0 / (1.0 + diff.norm_squared());
                // ∂s = -2s²·diff, so -2(p/s)·∂s = +4·p·s·diff.
                g += diff * (4.0 * pmj * s);
                let q = (s * (1.0 / st[m].0 + 1.0 / st[j].0) / two_n).max(P_FLOOR);
                kl += pmj * (pmj.max(P_FLOOR).ln() - q.ln());
                mass += pmj;
            });
            (g, kl, mass)
        })
        .collect();

    let kl_terms = per_point.iter().map(|x| x.1).sum();
    let p_mass = per_point.iter().map(|x| x.2).sum();
    Ok(GradientOutcome { grads: per_point.into_iter().map(|x| x.0).collect(), kl_terms, p_mass })
}

/// Result of [`optimize`]: the final state plus the KL value recorded
/// before each iteration's update (exaggeration already factored out).
#[derive(Debug, Clone)]
pub struct OptimizeResult {
    pub state: EmbeddingState,
    pub kl_history: Vec<f64>,
}

/// Runs momentum gradient descent on the KL cost from a seeded random
/// initialization. Deterministic for a fixed seed.
pub fn optimize(
    p: &AffinityMatrix,
    target: &TargetSpace,
    config: &OptimizerConfig,
) -> Result<OptimizeResult> {
    config.validate()?;
    gradient_target_supported(target)?;
    let n = p.n();
    let mut state = init_embedding(n, target, config.seed)?;
    if config.iters == 0 {
        return Ok(OptimizeResult { state, kl_history: Vec::new() });
    }

    let exaggerate = config.exaggeration_iters > 0 && config.exaggeration_factor != 1.0;
    let mut p_work = p.clone();
    if exaggerate {
        p_work.scale_in_place(config.exaggeration_factor);
        state.exaggeration_active = true;
    }

    let use_bh = config.bh_theta > 0.0
        && target.family == SimilarityFamily::StudentT
        && matches!(target.manifold, Manifold::Euclidean(d) if d == 2 || d == 3);

    let mut history = Vec::with_capacity(config.iters);
    for it in 0..config.iters {
        if state.exaggeration_active && it == config.exaggeration_iters {
            p_work = p.clone();
            state.exaggeration_active = false;
        }
        let outcome = if use_bh {
            kl_gradient_bh_with_cost(&p_work, &state, config.bh_theta)?
        } else {
            kl_gradient_with_cost(&p_work, &state, target)?
        };
        // Undo the exaggeration scale so the history tracks the true cost:
        // Σ (fp)(ln(fp) − ln q) = f·Σ p(ln p − ln q) + f·ln f·Σ p.
        let f = if state.exaggeration_active { config.exaggeration_factor } else { 1.0 };
        history.push((outcome.kl_terms - outcome.p_mass * f.ln()) / f);

        let momentum = if it < config.exaggeration_iters {
            config.momentum_early
        } else {
            config.momentum_late
        };
        for i in 0..n {
            state.velocity[i] =
                &state.velocity[i] * momentum - &outcome.grads[i] * config.learning_rate;
            match state.manifold {
                Manifold::Sphere(_) if config.sphere_exact_exp => {
                    let step =
                        state.manifold.tangent_project_raw(&state.points[i], &state.velocity[i]);
                    state.points[i] = state.manifold.exp_raw(&state.points[i], &step)?;
                }
                Manifold::Sphere(_) => {
                    let moved = &state.points[i] + &state.velocity[i];
                    let norm = moved.norm();
                    if norm == 0.0 || !norm.is_finite() {
                        return Err(Error::Numerical(format!(
                            "embedding blew up at iteration {it} (point {i})"
                        )));
                    }
                    state.points[i] = moved / norm;
                }
                _ => {
                    state.points[i] += &state.velocity[i];
                }
            }
            if state.points[i].iter().any(|c| !c.is_finite()) {
                return Err(Error::Numerical(format!(
                    "embedding blew up at iteration {it} (point {i})"
                )));
            }
        }
        state.iteration = it + 1;
    }
    Ok(OptimizeResult { state, kl_history: history })
}
