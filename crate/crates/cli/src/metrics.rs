//! Embedding-quality metrics: k-NN label agreement and trustworthiness.

use std::collections::BTreeMap;

use riesne_core::DatasetTable;

use crate::error::{CliError, Result};

/// Sorted indices of all other points by (distance, index) from `i`.
fn ranked_others(cache: &riesne_core::DistanceCache, i: usize) -> Vec<usize> {
    let n = cache.len();
    let mut order: Vec<(f64, usize)> =
        (0..n).filter(|&j| j != i).map(|j| (cache.dist(i, j), j)).collect();
    order.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, j)| j).collect()
}

/// Fraction of points whose majority label among their k nearest embedding
/// neighbors (under the embedding's manifold distance) matches their own.
/// Majority ties resolve toward the smaller label.
pub fn knn_label_accuracy(embedding: &DatasetTable, k: usize) -> Result<f64> {
    let labels = embedding
        .labels()
        .ok_or_else(|| CliError::Usage("k-NN label accuracy needs labels".into()))?;
    let n = embedding.len();
    if k == 0 || k >= n {
        return Err(CliError::Usage(format!("k must be in 1..={}, got {k}", n - 1)));
    }
    let cache = embedding.distance_cache();
    let mut hits = 0usize;
    for i in 0..n {
        let ranked = ranked_others(&cache, i);
        let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
        for &j in ranked.iter().take(k) {
            *counts.entry(labels[j]).or_insert(0) += 1;
        }
        // BTreeMap iterates labels ascending, so > keeps the smaller label
        // on ties.
        let mut majority = None;
        let mut best = 0usize;
        for (&label, &count) in &counts {
            if count > best {
                best = count;
                majority = Some(label);
            }
        }
        if majority == Some(labels[i]) {
            hits += 1;
        }
    }
    Ok(hits as f64 / n as f64)
}

/// Trustworthiness of an embedding at neighborhood size k: penalizes points
/// that enter a k-neighborhood in the embedding without being among the
/// original k nearest, weighted by their original rank.
///
/// Original-space ranks use the data manifold's geodesic distance; ties
/// break by ascending index on both sides, so duplicated points are
/// perfectly trustworthy.
pub fn trustworthiness(data: &DatasetTable, embedding: &DatasetTable, k: usize) -> Result<f64> {
    let n = data.len();
    if embedding.len() != n {
        return Err(CliError::Usage(format!(
            "embedding has {} points but the data has {n}",
            embedding.len()
        )));
    }
    if n < 3 {
        return Err(CliError::Usage("trustworthiness needs at least 3 points".into()));
    }
    if k == 0 || 2 * k > n {
        return Err(CliError::Usage(format!("k must be in 1..={} (k <= n/2), got {k}", n / 2)));
    }
    let orig = data.distance_cache();
    let emb = embedding.distance_cache();

    let mut penalty = 0.0;
    for i in 0..n {
        let ranked = ranked_others(&orig, i);
        let mut rank_of = vec![0usize; n];
        for (pos, &j) in ranked.iter().enumerate() {
            rank_of[j] = pos + 1;
        }
        let emb_ranked = ranked_others(&emb, i);
        for &j in emb_ranked.iter().take(k) {
            if rank_of[j] > k {
                penalty += (rank_of[j] - k) as f64;
            }
        }
    }
    let norm = 2.0 / (n as f64 * k as f64 * (2.0 * n as f64 - 3.0 * k as f64 - 1.0));
    Ok(1.0 - norm * penalty)
}
