/// Rank of each candidate = 1 + number of candidates that beat it.
pub fn reference_ranks(cands: &[(usize, f64)]) -> Vec<(usize, usize)> {
    cands
        .iter()
        .map(|&(id, s)| {
            let better = cands
                .iter()
                .filter(|&&(o, t)| t > s || (t == s && o < id))
                .count();
            (id, better + 1)
        })
        .collect()
}

pub fn reference_metrics(cands: &[(usize, f64)], positives: &[usize], k: usize) -> Option<(f64, f64, f64, f64)> {
    if positives.is_empty() {
        return None;
    }
    let mut ranks: Vec<usize> = reference_ranks(cands)
        .into_iter()
        .filter(|(id, _)| positives.contains(id))
        .map(|(_, r)| r)
        .collect();
    ranks.sort_unstable();
    let hits: Vec<usize> = ranks.iter().copied().filter(|&r| r <= k).collect();
    let hr = if hits.is_empty() { 0.0 } else { 1.0 };
    let recall = hits.len() as f64 / positives.len() as f64;
    let mut dcg = 0.0;
    for &r in &hits {
        dcg += 1.0 / ((r + 1) as f64).log2();
    }
    let mut idcg = 0.0;
    for r in 1..=k.min(positives.len()) {
        idcg += 1.0 / ((r + 1) as f64).log2();
    }
    let rr = ranks.first().map_or(0.0, |&r| 1.0 / r as f64);
    Some((hr, dcg / idcg, recall, rr))
}

