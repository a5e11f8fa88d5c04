use serde::{Deserialize, Serialize};

/// Ranking quality of one evaluated entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankMetrics {
    pub hr: f64,
    pub ndcg: f64,
    pub recall: f64,
    /// Reciprocal rank of the first positive over the whole list.
    pub rr: f64,
    /// 1-based rank of the first positive, if any positive is in the list.
    pub first_hit: Option<usize>,
}

/// Orders candidates by descending score, ties by ascending id. Duplicate ids
/// keep their first occurrence.
pub fn rank_candidates(candidates: &[(usize, f64)]) -> Vec<usize> {
    let mut sorted: Vec<(usize, f64)> = candidates.to_vec();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut seen = std::collections::HashSet::with_capacity(sorted.len());
    sorted
        .into_iter()
        .filter(|(id, _)| seen.insert(*id))
        .map(|(id, _)| id)
        .collect()
}

/// `1 / log2(rank + 1)` for a 1-based rank.
#[inline]
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// HR@K, NDCG@K, Recall@K and reciprocal rank. Returns `None` when
/// `positives` is empty (the entity is skipped).
pub fn metrics_at_k(ranked: &[usize], positives: &[usize], k: usize) -> Option<RankMetrics> {
    if positives.is_empty() {
        return None;
    }
    let mut pos: Vec<usize> = positives.to_vec();
    pos.sort_unstable();
    pos.dedup();

    let mut hits = 0usize;
    let mut dcg = 0.0;
    let mut first_hit = None;
    for (i, item) in ranked.iter().enumerate() {
        if pos.binary_search(item).is_err() {
            continue;
        }
        let rank = i + 1;
        first_hit.get_or_insert(rank);
        if rank <= k {
            hits += 1;
            dcg += discount(rank);
        }
    }
    let idcg: f64 = (1..=k.min(pos.len())).map(discount).sum();
    Some(RankMetrics {
        hr: if hits > 0 { 1.0 } else { 0.0 },
        ndcg: if idcg > 0.0 { dcg / idcg } else { 0.0 },
        recall: hits as f64 / pos.len() as f64,
        rr: first_hit.map_or(0.0, |r| 1.0 / r as f64),
        first_hit,
    })
}
