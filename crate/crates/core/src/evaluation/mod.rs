//! Leave-out ranking evaluation on the cold cohorts, plus the baseline,
//! ablation and learning-rate experiments built on it.

mod experiments;
mod metrics;

pub use experiments::{
    ablation_csv, ablation_suite, lr_sweep, mf_baseline, report_csv, sweep_csv, sweep_detail_csv,
    train_and_evaluate, AblationRow, RunResult, SweepRow, ABLATION_ROWS, SWEEP_LRS,
};
pub use metrics::{discount, metrics_at_k, rank_candidates, RankMetrics};

use std::collections::BTreeMap;
use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::dataset::PreparedDataset;
use crate::model::{embeddings, ModelInputs, ModelParams};
use crate::training::{TrainConfig, TrainError, TrainingView};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub k: usize,
    /// Sampled negatives per evaluated entity, on top of its held-out positives.
    pub n_negatives: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            n_negatives: 99,
            seed: 11,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.k == 0 {
            return Err(TrainError::Config("k must be >= 1".into()));
        }
        if self.n_negatives + 1 <= self.k {
            return Err(TrainError::Config(format!(
                "candidate count {} must exceed k = {}",
                self.n_negatives + 1,
                self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cohort {
    ColdUsers,
    ColdItems,
    Warm,
}

impl Cohort {
    pub fn name(self) -> &'static str {
        match self {
            Cohort::ColdUsers => "cold_users",
            Cohort::ColdItems => "cold_items",
            Cohort::Warm => "warm",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Cohort::ColdUsers => 1,
            Cohort::ColdItems => 2,
            Cohort::Warm => 3,
        }
    }
}

impl fmt::Display for Cohort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluated entity: a user for user-side cohorts, an item for cold items.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetailRow {
    pub entity: usize,
    pub n_positives: usize,
    pub first_hit: Option<usize>,
    pub hr: f64,
    pub ndcg: f64,
    pub recall: f64,
    pub rr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub cohort: Cohort,
    pub hr: f64,
    pub ndcg: f64,
    pub mrr: f64,
    pub recall: f64,
    pub n_evaluated: usize,
    /// Sorted by entity id.
    pub details: Vec<DetailRow>,
}

impl EvalReport {
    /// Averages per-entity rows. Metrics are NaN when nothing was evaluated.
    pub fn from_details(cohort: Cohort, details: Vec<DetailRow>) -> Self {
        let n = details.len();
        let mean = |f: fn(&DetailRow) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                details.iter().map(f).sum::<f64>() / n as f64
            }
        };
        Self {
            cohort,
            hr: mean(|d| d.hr),
            ndcg: mean(|d| d.ndcg),
            mrr: mean(|d| d.rr),
            recall: mean(|d| d.recall),
            n_evaluated: n,
            details,
        }
    }

    pub fn detail_csv(&self) -> String {
        let mut out = String::from("cohort,entity,n_positives,first_hit,hr,ndcg,recall,rr\n");
        for d in &self.details {
            let hit = d.first_hit.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.cohort, d.entity, d.n_positives, hit, d.hr, d.ndcg, d.recall, d.rr
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<10} HR {:.4}  NDCG {:.4}  MRR {:.4}  Recall {:.4}  (n={})",
            self.cohort.name(),
            self.hr,
            self.ndcg,
            self.mrr,
            self.recall,
            self.n_evaluated
        )
    }
}

/// Metrics for one trained model over every cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub cold_users: EvalReport,
    pub cold_items: EvalReport,
    pub warm: EvalReport,
}

/// The two cold cohorts pooled, weighted by evaluated-entity counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedMetrics {
    pub hr: f64,
    pub ndcg: f64,
    pub mrr: f64,
    pub recall: f64,
    pub n_evaluated: usize,
}

impl EvalSummary {
    pub fn cohorts(&self) -> [&EvalReport; 3] {
        [&self.cold_users, &self.cold_items, &self.warm]
    }

    pub fn combined_cold(&self) -> CombinedMetrics {
        let (a, b) = (&self.cold_users, &self.cold_items);
        let n = a.n_evaluated + b.n_evaluated;
        let mix = |x: f64, y: f64| {
            if n == 0 {
                return f64::NAN;
            }
            let part = |v: f64, w: usize| if w == 0 { 0.0 } else { v * w as f64 };
            (part(x, a.n_evaluated) + part(y, b.n_evaluated)) / n as f64
        };
        CombinedMetrics {
            hr: mix(a.hr, b.hr),
            ndcg: mix(a.ndcg, b.ndcg),
            mrr: mix(a.mrr, b.mrr),
            recall: mix(a.recall, b.recall),
            n_evaluated: n,
        }
    }
}

impl fmt::Display for EvalSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.cohorts() {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Scores `(query, candidate)` pairs on a stacked embedding table.
trait Scorer: Sync {
    fn score(&self, query: usize, candidate: usize) -> f64;
}

struct UserItemScorer<'a> {
    h: &'a Tensor,
    n_users: usize,
    item_side: bool,
}

impl Scorer for UserItemScorer<'_> {
    fn score(&self, query: usize, candidate: usize) -> f64 {
        let (u, i) = if self.item_side {
            (candidate, query)
        } else {
            (query, candidate)
        };
        let zu = self.h.row(u);
        let zi = self.h.row(self.n_users + i);
        zu.iter().zip(zi).map(|(a, b)| a * b).sum()
    }
}

/// `n` distinct candidates from `0..pool_size` outside the sorted `exclude`.
pub fn sample_eval_negatives(
    exclude: &[usize],
    pool_size: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let complement: Vec<usize> = (0..pool_size)
        .filter(|c| exclude.binary_search(c).is_err())
        .collect();
    let take = n.min(complement.len());
    let mut out: Vec<usize> = rand::seq::index::sample(rng, complement.len(), take)
        .into_iter()
        .map(|k| complement[k])
        .collect();
    out.sort_unstable();
    out
}

/// The candidate RNG for one evaluated entity: independent of thread
/// scheduling and of which other entities are evaluated.
pub fn entity_rng(seed: u64, cohort: Cohort, entity: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((cohort.salt() << 32) | entity as u64);
    rng
}

/// Candidate list (positives, then sampled negatives) for one entity.
pub fn candidates_for(
    entity: usize,
    positives: &[usize],
    exclude: &[usize],
    pool_size: usize,
    n_negatives: usize,
    seed: u64,
    cohort: Cohort,
) -> Vec<usize> {
    let mut rng = entity_rng(seed, cohort, entity);
    let mut out = positives.to_vec();
    out.extend(sample_eval_negatives(exclude, pool_size, n_negatives, &mut rng));
    out
}

fn evaluate_groups(
    scorer: &dyn Scorer,
    groups: &BTreeMap<usize, Vec<usize>>,
    exclude: &[Vec<usize>],
    pool_size: usize,
    k: usize,
    n_negatives: usize,
    seed: u64,
    cohort: Cohort,
) -> EvalReport {
    let groups: Vec<(&usize, &Vec<usize>)> = groups.iter().collect();
    let details: Vec<DetailRow> = groups
        .par_iter()
        .filter_map(|&(&entity, positives)| {
            let mut excluded = exclude[entity].clone();
            excluded.extend_from_slice(positives);
            excluded.sort_unstable();
            excluded.dedup();
            let cands = candidates_for(entity, positives, &excluded, pool_size, n_negatives, seed, cohort);
            let scored: Vec<(usize, f64)> = cands
                .iter()
                .map(|&c| (c, scorer.score(entity, c)))
                .collect();
            let ranked = rank_candidates(&scored);
            let m = metrics_at_k(&ranked, positives, k);
            if m.is_none() {
                log::debug!("{cohort} entity {entity} has no positives; skipped");
            }
            m.map(|m| DetailRow {
                entity,
                n_positives: positives.len(),
                first_hit: m.first_hit,
                hr: m.hr,
                ndcg: m.ndcg,
                recall: m.recall,
                rr: m.rr,
            })
        })
        .collect();
    EvalReport::from_details(cohort, details)
}

/// Ranks each user's held-out items in `pairs` against `n_negatives` sampled
/// items the user has never interacted with (`all_items_by_user`, sorted).
#[allow(clippy::too_many_arguments)]
pub fn evaluate_pairs(
    h: &Tensor,
    n_users: usize,
    pairs: &[(usize, usize)],
    all_items_by_user: &[Vec<usize>],
    n_items: usize,
    k: usize,
    n_negatives: usize,
    seed: u64,
    cohort: Cohort,
) -> EvalReport {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &(u, i) in pairs {
        groups.entry(u).or_default().push(i);
    }
    let scorer = UserItemScorer {
        h,
        n_users,
        item_side: false,
    };
    evaluate_groups(&scorer, &groups, all_items_by_user, n_items, k, n_negatives, seed, cohort)
}

/// Evaluates `params` on the cold-user, cold-item and warm (validation)
/// cohorts, over the graph the model was trained on.
pub fn evaluate(
    data: &PreparedDataset,
    params: &ModelParams,
    train_config: &TrainConfig,
    eval: &EvalConfig,
) -> Result<EvalSummary, TrainError> {
    eval.validate()?;
    let inputs = ModelInputs::new(&data.schema, &data.user_features, &data.item_features)?;
    let view = TrainingView::new(&data.split, train_config.validation_frac, train_config.seed);
    let h = embeddings(params, &inputs, &view.graph, &train_config.model)?;
    Ok(evaluate_embeddings(data, &view, &h, eval))
}

/// Same as [`evaluate`] on precomputed node embeddings.
pub fn evaluate_embeddings(
    data: &PreparedDataset,
    view: &TrainingView,
    h: &Tensor,
    eval: &EvalConfig,
) -> EvalSummary {
    let split = &data.split;
    let n_users = split.train.n_users();
    let n_items = split.train.n_items();
    let items_by_user = split.all_items_by_user();
    let users_by_item = split.all_users_by_item();
    let user_scorer = UserItemScorer {
        h,
        n_users,
        item_side: false,
    };
    let item_scorer = UserItemScorer {
        h,
        n_users,
        item_side: true,
    };
    let cold_users = evaluate_groups(
        &user_scorer,
        &split.test_cold_users,
        &items_by_user,
        n_items,
        eval.k,
        eval.n_negatives,
        eval.seed,
        Cohort::ColdUsers,
    );
    let cold_items = evaluate_groups(
        &item_scorer,
        &split.test_cold_items,
        &users_by_item,
        n_users,
        eval.k,
        eval.n_negatives,
        eval.seed,
        Cohort::ColdItems,
    );
    let warm = evaluate_pairs(
        h,
        n_users,
        &view.validation,
        &items_by_user,
        n_items,
        eval.k,
        eval.n_negatives,
        eval.seed,
        Cohort::Warm,
    );
    EvalSummary {
        cold_users,
        cold_items,
        warm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negatives_are_distinct_and_exclude_positives() {
        let exclude = vec![0, 3, 4, 9];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let negs = sample_eval_negatives(&exclude, 12, 8, &mut rng);
        assert_eq!(negs, vec![1, 2, 5, 6, 7, 8, 10, 11]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let few = sample_eval_negatives(&exclude, 100, 10, &mut rng);
        assert_eq!(few.len(), 10);
        assert!(few.iter().all(|c| exclude.binary_search(c).is_err()));
        assert!(few.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn entity_streams_differ() {
        use rand::Rng;
        let a: u64 = entity_rng(1, Cohort::ColdUsers, 4).random();
        let b: u64 = entity_rng(1, Cohort::ColdUsers, 5).random();
        let c: u64 = entity_rng(1, Cohort::ColdItems, 4).random();
        let again: u64 = entity_rng(1, Cohort::ColdUsers, 4).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, again);
    }

    #[test]
    fn oracle_embeddings_score_perfectly() {
        // Users 0..3, items 0..4; user u likes item u only.
        let n_users = 3;
        let mut h = Tensor::zeros(7, 4);
        for u in 0..3 {
            h.set(u, u, 1.0);
            h.set(n_users + u, u, 5.0);
        }
        let pairs = vec![(0, 0), (1, 1), (2, 2)];
        let known: Vec<Vec<usize>> = (0..3).map(|u| vec![u]).collect();
        let r = evaluate_pairs(&h, n_users, &pairs, &known, 4, 1, 3, 9, Cohort::Warm);
        assert_eq!((r.hr, r.ndcg, r.mrr, r.recall, r.n_evaluated), (1.0, 1.0, 1.0, 1.0, 3));
    }

    #[test]
    fn empty_cohort_is_nan() {
        let r = EvalReport::from_details(Cohort::Warm, vec![]);
        assert!(r.hr.is_nan());
        assert_eq!(r.n_evaluated, 0);
    }

    #[test]
    fn combined_weights_by_count() {
        let row = |hr| DetailRow {
            entity: 0,
            n_positives: 1,
            first_hit: None,
            hr,
            ndcg: hr,
            recall: hr,
            rr: hr,
        };
        let s = EvalSummary {
            cold_users: EvalReport::from_details(Cohort::ColdUsers, vec![row(1.0); 3]),
            cold_items: EvalReport::from_details(Cohort::ColdItems, vec![row(0.0)]),
            warm: EvalReport::from_details(Cohort::Warm, vec![]),
        };
        let c = s.combined_cold();
        assert_eq!((c.hr, c.n_evaluated), (0.75, 4));
    }

    #[test]
    fn config_validation() {
        assert!(EvalConfig::default().validate().is_ok());
        let bad = EvalConfig {
            k: 10,
            n_negatives: 9,
            seed: 0,
        };
        assert!(bad.validate().is_err());
    }
}
