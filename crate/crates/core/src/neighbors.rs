//! Exact k-nearest-neighbor search under the manifold distance.
//!
//! A vantage-point tree gives O(log n) average query cost in any metric
//! space; `brute_knn` is the O(n²) reference the tree is tested against.
//! Ties are broken by ascending index everywhere so both paths return
//! identical lists.

use std::cmp::Ordering;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{DatasetTable, DistanceCache};
use crate::error::{Error, Result};

/// One neighbor of a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

fn cmp_dist_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(a.1.cmp(&b.1))
}

#[derive(Debug, Clone)]
struct VpNode {
    /// Dataset index of the vantage point.
    index: usize,
    /// Median distance from the vantage point to the rest of its subset:
    /// the left subtree holds points with dist ≤ radius, the right subtree
    /// points with dist > radius.
    radius: f64,
    left: Option<usize>,
    right: Option<usize>,
}

/// A vantage-point tree over one dataset. Queries are read-only and safe to
/// run concurrently once the tree is built.
pub struct VpTree {
    nodes: Vec<VpNode>,
    root: usize,
    cache: DistanceCache,
}

impl VpTree {
    /// Builds the tree over all points of `data`. Vantage points are chosen
    /// uniformly by the seeded RNG; splits are at the exact median distance.
    pub fn build(data: &DatasetTable, seed: u64) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InvalidArgument("cannot build a VP tree over no points".into()));
        }
        let cache = data.distance_cache();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes = Vec::with_capacity(data.len());
        let mut indices: Vec<usize> = (0..data.len()).collect();
        let root = build_subtree(&mut indices, &cache, &mut rng, &mut nodes);
        Ok(VpTree { nodes, root, cache })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The `k` nearest other points to dataset point `query_index`, sorted
    /// by (distance, index). Identical to `brute_knn` on the same data.
    pub fn knn(&self, query_index: usize, k: usize) -> Result<Vec<Neighbor>> {
        self.knn_counting(query_index, k).map(|(out, _)| out)
    }

    /// As [`knn`](Self::knn) but also reports how many tree nodes the
    /// search visited.
    pub fn knn_counting(&self, query_index: usize, k: usize) -> Result<(Vec<Neighbor>, usize)> {
        let n = self.cache.len();
        if query_index >= n {
            return Err(Error::InvalidArgument(format!(
                "query index {query_index} out of range for {n} points"
            )));
        }
        if k == 0 || k > n - 1 {
            return Err(Error::InvalidArgument(format!(
                "k must be in 1..={} (got {k})",
                n - 1
            )));
        }
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        let mut visited = 0usize;
        self.search(self.root, query_index, k, &mut best, &mut visited);
        best.sort_by(cmp_dist_index);
        let out = best
            .into_iter()
            .map(|(distance, index)| Neighbor { index, distance })
            .collect();
        Ok((out, visited))
    }

    fn search(
        &self,
        node_id: usize,
        query: usize,
        k: usize,
        best: &mut Vec<(f64, usize)>,
        visited: &mut usize,
    ) {
        *visited += 1;
        let node = &self.nodes[node_id];
        let d = self.cache.dist(query, node.index);

        if node.index != query {
            let cand = (d, node.index);
            if best.len() < k {
                best.push(cand);
                if best.len() == k {
                    // Keep the worst at the back from here on.
                    best.sort_by(cmp_dist_index);
                }
            } else if cmp_dist_index(&cand, best.last().unwrap()) == Ordering::Less {
                best.pop();
                let pos = best
                    .binary_search_by(|probe| cmp_dist_index(probe, &cand))
                    .unwrap_or_else(|e| e);
                best.insert(pos, cand);
            }
        }

        let (near, far) = if d <= node.radius {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if let Some(c) = near {
            self.search(c, query, k, best, visited);
        }
        // Until k candidates are collected every subtree may contribute.
        let tau = if best.len() < k { f64::INFINITY } else { best.last().unwrap().0 };
        // Inclusive bounds: an equal-distance candidate with a smaller index
        // can still displace the current worst.
        let crosses = if d <= node.radius {
            d + tau >= node.radius
        } else {
            d - tau <= node.radius
        };
        if crosses {
            if let Some(c) = far {
                self.search(c, query, k, best, visited);
            }
        }
    }

    /// Walks the tree and checks the partition invariant at every internal
    /// node, and that every dataset index appears exactly once.
    pub fn validate(&self) -> Result<()> {
        let n = self.cache.len();
        let mut seen = vec![false; n];
        let mut stack = vec![(self.root, Vec::<(usize, f64, bool)>::new())];
        while let Some((id, constraints)) = stack.pop() {
            let node = &self.nodes[id];
            if seen[node.index] {
                return Err(Error::Numerical(format!(
                    "index {} appears twice in the tree",
                    node.index
                )));
            }
            seen[node.index] = true;
            for &(vantage, radius, is_left) in &constraints {
                let d = self.cache.dist(vantage, node.index);
                let ok = if is_left { d <= radius } else { d > radius };
                if !ok {
                    return Err(Error::Numerical(format!(
                        "partition invariant violated at index {} (vantage {vantage})",
                        node.index
                    )));
                }
            }
            if let Some(l) = node.left {
                let mut c = constraints.clone();
                c.push((node.index, node.radius, true));
                stack.push((l, c));
            }
            if let Some(r) = node.right {
                let mut c = constraints.clone();
                c.push((node.index, node.radius, false));
                stack.push((r, c));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::Numerical(format!("index {missing} is missing from the tree")));
        }
        Ok(())
    }
}

fn build_subtree(
    indices: &mut [usize],
    cache: &DistanceCache,
    rng: &mut ChaCha8Rng,
    nodes: &mut Vec<VpNode>,
) -> usize {
    debug_assert!(!indices.is_empty());
    if indices.len() == 1 {
        nodes.push(VpNode { index: indices[0], radius: 0.0, left: None, right: None });
        return nodes.len() - 1;
    }

    let pos = rng.random_range(0..indices.len());
    indices.swap(0, pos);
    let (vantage, rest) = indices.split_first_mut().unwrap();

    let mut dists: Vec<(f64, usize)> =
        rest.iter().map(|&i| (cache.dist(*vantage, i), i)).collect();
    let mid = (dists.len() - 1) / 2;
    dists.select_nth_unstable_by(mid, cmp_dist_index);
    let radius = dists[mid].0;

    // Partition explicitly so duplicates of the median distance all land on
    // the left, keeping the dist ≤ radius / dist > radius invariant exact.
    let mut left: Vec<usize> = Vec::with_capacity(mid + 1);
    let mut right: Vec<usize> = Vec::with_capacity(dists.len() - mid);
    for &(d, i) in &dists {
        if d <= radius {
            left.push(i);
        } else {
            right.push(i);
        }
    }

    let node_id = nodes.len();
    nodes.push(VpNode { index: *vantage, radius, left: None, right: None });
    if !left.is_empty() {
        let l = build_subtree(&mut left, cache, rng, nodes);
        nodes[node_id].left = Some(l);
    }
    if !right.is_empty() {
        let r = build_subtree(&mut right, cache, rng, nodes);
        nodes[node_id].right = Some(r);
    }
    node_id
}

/// O(n²) exact k-nearest-neighbor lists, the reference implementation.
pub fn brute_knn(data: &DatasetTable, k: usize) -> Result<Vec<Vec<Neighbor>>> {
    let n = data.len();
    if n < 2 || k == 0 || k > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "k must be in 1..={} (got {k})",
            n.saturating_sub(1)
        )));
    }
    let cache = data.distance_cache();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let mut all: Vec<(f64, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (cache.dist(i, j), j)).collect();
            all.sort_by(cmp_dist_index);
            all.truncate(k);
            all.into_iter().map(|(distance, index)| Neighbor { index, distance }).collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Manifold, Point};
    use nalgebra::DVector;

    fn line_table(xs: &[f64]) -> DatasetTable {
        let m = Manifold::Euclidean(1);
        let pts = xs
            .iter()
            .map(|&x| Point::new(m, DVector::from_row_slice(&[x])).unwrap())
            .collect();
        DatasetTable::new(m, pts, None, None).unwrap()
    }

    #[test]
    fn single_point_tree() {
        let t = VpTree::build(&line_table(&[0.5]), 7).unwrap();
        assert_eq!(t.len(), 1);
        t.validate().unwrap();
        assert!(t.knn(0, 1).is_err());
    }

    #[test]
    fn collinear_points_satisfy_invariant() {
        let t = VpTree::build(&line_table(&[0.0, 1.0, 3.0]), 3).unwrap();
        t.validate().unwrap();
        let nn = t.knn(0, 1).unwrap();
        assert_eq!(nn[0].index, 1);
        assert_eq!(nn[0].distance, 1.0);
    }

    #[test]
    fn k_equals_n_minus_one_returns_all_sorted() {
        let t = VpTree::build(&line_table(&[0.0, 5.0, 1.0, 3.0]), 11).unwrap();
        let nn = t.knn(0, 3).unwrap();
        let idx: Vec<usize> = nn.iter().map(|n| n.index).collect();
        assert_eq!(idx, vec![2, 3, 1]);
    }

    #[test]
    fn brute_examples() {
        let lists = brute_knn(&line_table(&[0.0, 2.0]), 1).unwrap();
        assert_eq!(lists[0][0].index, 1);
        assert_eq!(lists[1][0].index, 0);

        // Duplicates: the zero-distance neighbor comes first, index ties
        // ascending.
        let lists = brute_knn(&line_table(&[1.0, 1.0, 1.0, 4.0]), 3).unwrap();
        assert_eq!(lists[0][0], Neighbor { index: 1, distance: 0.0 });
        assert_eq!(lists[0][1], Neighbor { index: 2, distance: 0.0 });
        assert_eq!(lists[2][0], Neighbor { index: 0, distance: 0.0 });
        assert_eq!(lists[2][1], Neighbor { index: 1, distance: 0.0 });
    }

    #[test]
    fn tree_matches_brute_with_duplicates() {
        let table = line_table(&[0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 5.0, 5.0, 5.0, 8.0]);
        let tree = VpTree::build(&table, 42).unwrap();
        tree.validate().unwrap();
        for k in 1..=9 {
            let brute = brute_knn(&table, k).unwrap();
            for q in 0..table.len() {
                let fast = tree.knn(q, k).unwrap();
                assert_eq!(fast, brute[q], "mismatch at q={q}, k={k}");
            }
        }
    }

    #[test]
    fn same_seed_same_tree() {
        let table = line_table(&[3.0, 1.0, 4.0, 1.5, 9.0, 2.6, 5.3]);
        let a = VpTree::build(&table, 123).unwrap();
        let b = VpTree::build(&table, 123).unwrap();
        let na: Vec<(usize, u64)> = a.nodes.iter().map(|n| (n.index, n.radius.to_bits())).collect();
        let nb: Vec<(usize, u64)> = b.nodes.iter().map(|n| (n.index, n.radius.to_bits())).collect();
        assert_eq!(na, nb);
    }
}
