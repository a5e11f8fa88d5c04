use rand::Rng;

/// Rejection attempts per requested sample before scanning the complement.
pub const REJECTION_FACTOR: usize = 100;

/// Draws `k` items uniformly (with replacement) from `pool`, rejecting any
/// item in `positives`. Both slices must be sorted. Returns fewer than `k`
/// items only when every pool item is a positive (then none).
pub fn sample_negatives(
    positives: &[usize],
    k: usize,
    pool: &[usize],
    rng: &mut impl Rng,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    if pool.is_empty() || k == 0 {
        return out;
    }
    let budget = REJECTION_FACTOR * k;
    let mut attempts = 0;
    while out.len() < k && attempts < budget {
        attempts += 1;
        let item = pool[rng.random_range(0..pool.len())];
        if positives.binary_search(&item).is_err() {
            out.push(item);
        }
    }
    if out.len() < k {
        let complement: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|i| positives.binary_search(i).is_err())
            .collect();
        if complement.is_empty() {
            return Vec::new();
        }
        while out.len() < k {
            out.push(complement[rng.random_range(0..complement.len())]);
        }
    }
    out
}
