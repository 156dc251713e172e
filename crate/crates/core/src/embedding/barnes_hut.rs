//! Quad/oct-tree over a 2-D or 3-D embedding for Barnes-Hut field sums.
//!
//! The student-t gradient needs, for every point y, the row sum
//! Σ_k s(y, y_k) and the field Σ_k ∂s(y, y_k), plus one weighted variant of
//! the field. A cell whose diameter-to-distance ratio is below theta is
//! summarized by its (weighted) centroid, count and scatter matrix.
//!
//! Because the expansion point is the cell centroid, the first-order Taylor
//! term of the cell sum vanishes; keeping the second-order term via the
//! cell's scatter matrix C = Σ (y_k - ŷ)(y_k - ŷ)ᵀ leaves an O((r/D)⁴)
//! truncation error per cell. For s = (1 + ‖u‖²)⁻¹ with u = y - y_k:
//!
//! ```text
//! Σ s         ≈ n·s + 4s³·uᵀCu − s²·tr C
//! Σ -2s²·u    ≈ -2n·s²·u − 24s⁴·(uᵀCu)·u + 8s³·Cu + 4s³·(tr C)·u
//! ```
//!
//! evaluated at u = y - ŷ.

use nalgebra::DVector;

const LEAF_CAP: usize = 8;
const MAX_DEPTH: usize = 52;

/// Symmetric 3×3 scatter, packed as [xx, yy, zz, xy, xz, yz].
type Scatter = [f64; 6];

fn scatter_quad(c: &Scatter, u: &[f64; 3]) -> f64 {
    c[0] * u[0] * u[0]
        + c[1] * u[1] * u[1]
        + c[2] * u[2] * u[2]
        + 2.0 * (c[3] * u[0] * u[1] + c[4] * u[0] * u[2] + c[5] * u[1] * u[2])
}

fn scatter_mul(c: &Scatter, u: &[f64; 3]) -> [f64; 3] {
    [
        c[0] * u[0] + c[3] * u[1] + c[4] * u[2],
        c[3] * u[0] + c[1] * u[1] + c[5] * u[2],
        c[4] * u[0] + c[5] * u[1] + c[2] * u[2],
    ]
}

fn scatter_trace(c: &Scatter) -> f64 {
    c[0] + c[1] + c[2]
}

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    len: usize,
    children: [i32; 8],
    is_leaf: bool,
    centroid: [f64; 3],
    count: usize,
    scatter: Scatter,
    /// Diameter of the tight bounding box of the points in the cell, the r
    /// of the r/D < theta criterion.
    diameter: f64,
}

/// Space-partitioning tree over embedding points.
pub struct BhTree {
    dim: usize,
    nodes: Vec<Node>,
    perm: Vec<usize>,
    coords: Vec<[f64; 3]>,
}

/// The same tree annotated with per-point weights.
pub struct WeightedBhTree<'a> {
    tree: &'a BhTree,
    node_weight: Vec<f64>,
    node_wcentroid: Vec<[f64; 3]>,
    node_wscatter: Vec<Scatter>,
    point_weight: &'a [f64],
}

fn student_t(diff: &[f64; 3]) -> f64 {
    1.0 / (1.0 + diff[0] * diff[0] + diff[1] * diff[1] + diff[2] * diff[2])
}

impl BhTree {
    /// Builds the tree over `points`, using the first `dim` coordinates of
    /// each (dim must be 2 or 3).
    pub fn build(points: &[DVector<f64>], dim: usize) -> Self {
        assert!(dim == 2 || dim == 3, "Barnes-Hut trees are 2-D or 3-D");
        let n = points.len();
        let coords: Vec<[f64; 3]> = points
            .iter()
            .map(|p| {
                let mut c = [0.0; 3];
                for k in 0..dim {
                    c[k] = p[k];
                }
                c
            })
            .collect();

        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in &coords {
            for k in 0..dim {
                lo[k] = lo[k].min(c[k]);
                hi[k] = hi[k].max(c[k]);
            }
        }
        let mut center = [0.0; 3];
        let mut half: f64 = 0.0;
        for k in 0..dim {
            center[k] = 0.5 * (lo[k] + hi[k]);
            half = half.max(0.5 * (hi[k] - lo[k]));
        }
        half = half.max(1e-12) * (1.0 + 1e-12);

        let mut tree =
            BhTree { dim, nodes: Vec::with_capacity(2 * n), perm: (0..n).collect(), coords };
        if n > 0 {
            tree.build_node(0, n, center, half, 0);
        }
        tree
    }

    fn build_node(
        &mut self,
        start: usize,
        len: usize,
        center: [f64; 3],
        half: f64,
        depth: usize,
    ) -> usize {
        let mut centroid = [0.0; 3];
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for &p in &self.perm[start..start + len] {
            for k in 0..3 {
                centroid[k] += self.coords[p][k];
                lo[k] = lo[k].min(self.coords[p][k]);
                hi[k] = hi[k].max(self.coords[p][k]);
            }
        }
        for c in centroid.iter_mut() {
            *c /= len as f64;
        }
        let mut scatter = [0.0; 6];
        for &p in &self.perm[start..start + len] {
            let d = [
                self.coords[p][0] - centroid[0],
                self.coords[p][1] - centroid[1],
                self.coords[p][2] - centroid[2],
            ];
            scatter[0] += d[0] * d[0];
            scatter[1] += d[1] * d[1];
            scatter[2] += d[2] * d[2];
            scatter[3] += d[0] * d[1];
            scatter[4] += d[0] * d[2];
            scatter[5] += d[1] * d[2];
        }
        let mut diam2 = 0.0;
        for k in 0..3 {
            if hi[k] > lo[k] {
                diam2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            len,
            children: [-1; 8],
            is_leaf: true,
            centroid,
            count: len,
            scatter,
            diameter: diam2.sqrt(),
        });
        if len <= LEAF_CAP || depth >= MAX_DEPTH {
            return id;
        }

        let octants = 1usize << self.dim;
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); octants];
        for &p in &self.perm[start..start + len] {
            let mut o = 0usize;
            for k in 0..self.dim {
                if self.coords[p][k] > center[k] {
                    o |= 1 << k;
                }
            }
            buckets[o].push(p);
        }
        let mut cursor = start;
        let mut ranges = Vec::with_capacity(octants);
        for b in &buckets {
            ranges.push((cursor, b.len()));
            for &p in b {
                self.perm[cursor] = p;
                cursor += 1;
            }
        }
        self.nodes[id].is_leaf = false;
        for (o, &(cstart, clen)) in ranges.iter().enumerate() {
            if clen == 0 {
                continue;
            }
            let mut ccenter = center;
            for k in 0..self.dim {
                ccenter[k] += if o & (1 << k) != 0 { half / 2.0 } else { -half / 2.0 };
            }
            let child = self.build_node(cstart, clen, ccenter, half / 2.0, depth + 1);
            self.nodes[id].children[o] = child as i32;
        }
        id
    }

    /// Σ_k s(y, y_k) (including the query point itself when y is a dataset
    /// point) and Σ_k -2·s²·(y - y_k).
    pub fn field(&self, y: &DVector<f64>, theta: f64) -> (f64, [f64; 3]) {
        let yq = self.query_coords(y);
        let mut s_acc = 0.0;
        let mut t_acc = [0.0; 3];
        if !self.nodes.is_empty() {
            self.field_rec(0, &yq, theta, &mut s_acc, &mut t_acc);
        }
        (s_acc, t_acc)
    }

    fn field_rec(
        &self,
        id: usize,
        y: &[f64; 3],
        theta: f64,
        s_acc: &mut f64,
        t_acc: &mut [f64; 3],
    ) {
        let node = &self.nodes[id];
        let u = [y[0] - node.centroid[0], y[1] - node.centroid[1], y[2] - node.centroid[2]];
        let d2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        if node.diameter * node.diameter < theta * theta * d2 {
            let s = 1.0 / (1.0 + d2);
            let s2 = s * s;
            let s3 = s2 * s;
            let s4 = s2 * s2;
            let n = node.count as f64;
            let quad = scatter_quad(&node.scatter, &u);
            let cu = scatter_mul(&node.scatter, &u);
            let tr = scatter_trace(&node.scatter);
            *s_acc += n * s + 4.0 * s3 * quad - s2 * tr;
            let radial = -2.0 * n * s2 - 24.0 * s4 * quad + 4.0 * s3 * tr;
            for k in 0..3 {
                t_acc[k] += radial * u[k] + 8.0 * s3 * cu[k];
            }
            return;
        }
        if node.is_leaf {
            for &p in &self.perm[node.start..node.start + node.len] {
                let c = &self.coords[p];
                let diff = [y[0] - c[0], y[1] - c[1], y[2] - c[2]];
                let s = student_t(&diff);
                *s_acc += s;
                let f = -2.0 * s * s;
                for k in 0..3 {
                    t_acc[k] += f * diff[k];
                }
            }
            return;
        }
        for &ch in &node.children {
            if ch >= 0 {
                self.field_rec(ch as usize, y, theta, s_acc, t_acc);
            }
        }
    }

    /// Annotates the tree with nonnegative per-point weights for the
    /// weighted field pass.
    pub fn with_weights<'a>(&'a self, weights: &'a [f64]) -> WeightedBhTree<'a> {
        assert_eq!(weights.len(), self.coords.len());
        let mut node_weight = Vec::with_capacity(self.nodes.len());
        let mut node_wcentroid = Vec::with_capacity(self.nodes.len());
        let mut node_wscatter = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut w_sum = 0.0;
            let mut wc = [0.0; 3];
            for &p in &self.perm[node.start..node.start + node.len] {
                let w = weights[p];
                w_sum += w;
                for k in 0..3 {
                    wc[k] += w * self.coords[p][k];
                }
            }
            if w_sum > 0.0 {
                for c in wc.iter_mut() {
                    *c /= w_sum;
                }
            } else {
                wc = node.centroid;
            }
            let mut ws = [0.0; 6];
            if w_sum > 0.0 {
                for &p in &self.perm[node.start..node.start + node.len] {
                    let w = weights[p];
                    if w == 0.0 {
                        continue;
                    }
                    let d = [
                        self.coords[p][0] - wc[0],
                        self.coords[p][1] - wc[1],
                        self.coords[p][2] - wc[2],
                    ];
                    ws[0] += w * d[0] * d[0];
                    ws[1] += w * d[1] * d[1];
                    ws[2] += w * d[2] * d[2];
                    ws[3] += w * d[0] * d[1];
                    ws[4] += w * d[0] * d[2];
                    ws[5] += w * d[1] * d[2];
                }
            }
            node_weight.push(w_sum);
            node_wcentroid.push(wc);
            node_wscatter.push(ws);
        }
        WeightedBhTree { tree: self, node_weight, node_wcentroid, node_wscatter, point_weight: weights }
    }

    fn query_coords(&self, y: &DVector<f64>) -> [f64; 3] {
        let mut c = [0.0; 3];
        for k in 0..self.dim {
            c[k] = y[k];
        }
        c
    }
}

impl WeightedBhTree<'_> {
    /// Σ_k w_k · (-2)·s(y, y_k)²·(y - y_k).
    pub fn weighted_field(&self, y: &DVector<f64>, theta: f64) -> [f64; 3] {
        let yq = self.tree.query_coords(y);
        let mut acc = [0.0; 3];
        if !self.tree.nodes.is_empty() {
            self.rec(0, &yq, theta, &mut acc);
        }
        acc
    }

    fn rec(&self, id: usize, y: &[f64; 3], theta: f64, acc: &mut [f64; 3]) {
        let node = &self.tree.nodes[id];
        let w_sum = self.node_weight[id];
        if w_sum == 0.0 {
            return;
        }
        let wc = &self.node_wcentroid[id];
        let u = [y[0] - wc[0], y[1] - wc[1], y[2] - wc[2]];
        let d2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
        if node.diameter * node.diameter < theta * theta * d2 {
            let s = 1.0 / (1.0 + d2);
            let s2 = s * s;
            let s3 = s2 * s;
            let s4 = s2 * s2;
            let c = &self.node_wscatter[id];
            let quad = scatter_quad(c, &u);
            let cu = scatter_mul(c, &u);
            let tr = scatter_trace(c);
            let radial = -2.0 * w_sum * s2 - 24.0 * s4 * quad + 4.0 * s3 * tr;
            for k in 0..3 {
                acc[k] += radial * u[k] + 8.0 * s3 * cu[k];
            }
            return;
        }
        if node.is_leaf {
            for &p in &self.tree.perm[node.start..node.start + node.len] {
                let w = self.point_weight[p];
                if w == 0.0 {
                    continue;
                }
                let cpt = &self.tree.coords[p];
                let diff = [y[0] - cpt[0], y[1] - cpt[1], y[2] - cpt[2]];
                let s = student_t(&diff);
                let f = -2.0 * w * s * s;
                for k in 0..3 {
                    acc[k] += f * diff[k];
                }
            }
            return;
        }
        for &ch in &node.children {
            if ch >= 0 {
                self.rec(ch as usize, y, theta, acc);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_points(n: usize) -> Vec<DVector<f64>> {
        (0..n)
            .map(|i| {
                DVector::from_row_slice(&[
                    (i % 13) as f64 * 0.3 + (i as f64 * 0.71).sin() * 0.1,
                    (i / 13) as f64 * 0.4 + (i as f64 * 0.37).cos() * 0.1,
                ])
            })
            .collect()
    }

    #[test]
    fn theta_zero_field_is_exact() {
        let pts = grid_points(150);
        let tree = BhTree::build(&pts, 2);
        for i in (0..150).step_by(17) {
            let (s, t) = tree.field(&pts[i], 0.0);
            let mut s_direct = 0.0;
            let mut t_direct = [0.0; 3];
            for p in &pts {
                let diff = [pts[i][0] - p[0], pts[i][1] - p[1], 0.0];
                let sv = student_t(&diff);
                s_direct += sv;
                for k in 0..2 {
                    t_direct[k] += -2.0 * sv * sv * diff[k];
                }
            }
            assert!((s - s_direct).abs() < 1e-10 * s_direct.abs());
            for k in 0..2 {
                assert!((t[k] - t_direct[k]).abs() < 1e-10 * t_direct[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn weighted_field_with_theta_zero_is_exact() {
        let pts = grid_points(90);
        let weights: Vec<f64> = (0..90).map(|i| ((i * 7 + 1) % 10) as f64 / 10.0).collect();
        let tree = BhTree::build(&pts, 2);
        let weighted = tree.with_weights(&weights);
        for i in (0..90).step_by(13) {
            let acc = weighted.weighted_field(&pts[i], 0.0);
            let mut direct = [0.0; 3];
            for (j, p) in pts.iter().enumerate() {
                let diff = [pts[i][0] - p[0], pts[i][1] - p[1], 0.0];
                let sv = student_t(&diff);
                for k in 0..2 {
                    direct[k] += -2.0 * weights[j] * sv * sv * diff[k];
                }
            }
            for k in 0..2 {
                assert!((acc[k] - direct[k]).abs() < 1e-10 * direct[k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn moderate_theta_approximates_field() {
        let pts = grid_points(400);
        let tree = BhTree::build(&pts, 2);
        for i in (0..400).step_by(37) {
            let (s0, t0) = tree.field(&pts[i], 0.0);
            let (s5, t5) = tree.field(&pts[i], 0.5);
            assert!((s0 - s5).abs() / s0 < 1e-3, "S mismatch {s0} vs {s5}");
            let t_err = (0..2).map(|k| (t0[k] - t5[k]) * (t0[k] - t5[k])).sum::<f64>().sqrt();
            let t_norm = (0..2).map(|k| t0[k] * t0[k]).sum::<f64>().sqrt();
            assert!(t_err < 1e-2 * t_norm, "T mismatch: err {t_err:.2e} vs norm {t_norm:.2e}");
        }
    }
}
