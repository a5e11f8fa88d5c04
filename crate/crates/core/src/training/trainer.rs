use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AutodiffError, Tape};
use crate::dataset::{build_graph, BipartiteGraph, ColdStartSplit, Interaction, InteractionSet, PreparedDataset};
use crate::evaluation::{evaluate_pairs, Cohort};
use crate::model::{
    embeddings, forward, total_loss, Batch, ModelConfig, ModelError, ModelInputs, ModelParams,
};

use super::{adam_step, sample_negatives, AdamConfig, AdamState, TrainError};

/// RNG stream ids derived from the training seed.
const STREAM_MAIN: u64 = 0;
const STREAM_VALIDATION: u64 = 1;

/// Validation ranking: held-out item against this many sampled negatives.
pub const VALIDATION_NEGATIVES: usize = 99;
pub const VALIDATION_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Positives per batch.
    pub batch_size: usize,
    pub bce_negatives: usize,
    pub contrastive_negatives: usize,
    pub seed: u64,
    /// Epochs without validation HR@10 improvement before stopping.
    pub early_stop_patience: usize,
    /// Fraction of warm users whose latest positive is held out for validation.
    pub validation_frac: f64,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.005,
            epochs: 50,
            batch_size: 1024,
            bce_negatives: 4,
            contrastive_negatives: 16,
            seed: 7,
            early_stop_patience: 5,
            validation_frac: 0.1,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        self.model.validate()?;
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TrainError::Config("learning_rate must be > 0".into()));
        }
        for (name, v) in [
            ("batch_size", self.batch_size),
            ("bce_negatives", self.bce_negatives),
            ("contrastive_negatives", self.contrastive_negatives),
            ("early_stop_patience", self.early_stop_patience),
        ] {
            if v == 0 {
                return Err(TrainError::Config(format!("{name} must be >= 1")));
            }
        }
        if !(0.0..1.0).contains(&self.validation_frac) {
            return Err(TrainError::Config("validation_frac must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// NaN when there is no validation slice.
    pub val_hr10: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainCounters {
    pub steps: u64,
    pub bce_negatives_drawn: u64,
    pub contrastive_negatives_drawn: u64,
    pub skipped_positives: u64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch (or the last epoch when there
    /// is no validation slice).
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub counters: TrainCounters,
}

impl TrainOutcome {
    pub fn final_train_loss(&self) -> Option<f64> {
        self.history.last().map(|r| r.train_loss)
    }
}

/// The training-time view of a split: the validation carve, the remaining
/// fit pairs and the graph built from them.
#[derive(Debug, Clone)]
pub struct TrainingView {
    pub fit: InteractionSet,
    /// Held-out `(user, item)` pairs, sorted by user.
    pub validation: Vec<(usize, usize)>,
    pub graph: BipartiteGraph,
    /// All train positives per user (fit plus validation), sorted.
    pub known_items: Vec<Vec<usize>>,
    /// Items with at least one fit positive, sorted.
    pub item_pool: Vec<usize>,
}

impl TrainingView {
    /// Picks `floor(validation_frac * n)` (at least one when possible) of the
    /// warm users with two or more train positives and holds out each one's
    /// latest positive.
    pub fn new(split: &ColdStartSplit, validation_frac: f64, seed: u64) -> Self {
        let train = &split.train;
        let mut latest: Vec<Option<Interaction>> = vec![None; train.n_users()];
        let mut counts = vec![0usize; train.n_users()];
        for p in train.positives() {
            counts[p.user] += 1;
            let slot = &mut latest[p.user];
            let newer = slot.is_none_or(|q| (p.timestamp, p.item) > (q.timestamp, q.item));
            if newer {
                *slot = Some(*p);
            }
        }
        let eligible: Vec<usize> = (0..train.n_users()).filter(|&u| counts[u] >= 2).collect();
        let mut n_val = (validation_frac * eligible.len() as f64).floor() as usize;
        if validation_frac > 0.0 && n_val == 0 && !eligible.is_empty() {
            n_val = 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(STREAM_VALIDATION);
        let mut chosen: Vec<usize> = rand::seq::index::sample(&mut rng, eligible.len(), n_val)
            .into_iter()
            .map(|k| eligible[k])
            .collect();
        chosen.sort_unstable();
        let validation: Vec<(usize, usize)> = chosen
            .iter()
            .map(|&u| (u, latest[u].expect("eligible users have positives").item))
            .collect();

        let fit_pairs: Vec<Interaction> = train
            .positives()
            .iter()
            .filter(|p| validation.binary_search(&(p.user, p.item)).is_err())
            .copied()
            .collect();
        let fit = train.with_positives(fit_pairs);
        let graph = build_graph(&fit);
        let mut seen = vec![false; fit.n_items()];
        for p in fit.positives() {
            seen[p.item] = true;
        }
        let item_pool = (0..seen.len()).filter(|&i| seen[i]).collect();
        Self {
            known_items: train.items_by_user(),
            fit,
            validation,
            graph,
            item_pool,
        }
    }
}

fn non_finite(epoch: usize, batch: usize, detail: String) -> TrainError {
    TrainError::NonFiniteLoss {
        epoch,
        batch,
        detail,
    }
}

/// Trains with Adam on the joint objective, keeping the best-validation
/// parameters. Deterministic for a fixed dataset and `config.seed`.
pub fn train(data: &PreparedDataset, config: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    config.validate()?;
    let inputs = ModelInputs::new(&data.schema, &data.user_features, &data.item_features)?;
    let view = TrainingView::new(&data.split, config.validation_frac, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(STREAM_MAIN);
    let mut params = ModelParams::init(&data.schema, &config.model, &mut rng)?;
    train_from(data, &inputs, &view, config, &mut params, &mut rng)
}

fn train_from(
    data: &PreparedDataset,
    inputs: &ModelInputs,
    view: &TrainingView,
    config: &TrainConfig,
    params: &mut ModelParams,
    rng: &mut ChaCha8Rng,
) -> Result<TrainOutcome, TrainError> {
    let model = &config.model;
    let n_users = view.fit.n_users();
    let mut adam = AdamState::new(AdamConfig::default());
    let mut history = Vec::new();
    let mut counters = TrainCounters::default();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut since_best = 0usize;
    let all_items = data.split.all_items_by_user();

    let mut order: Vec<usize> = (0..view.fit.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(rng);
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = assemble_batch(chunk, view, config, rng, &mut counters);
            if batch.is_empty() {
                continue;
            }
            let mut tape = Tape::new();
            let bound = params.set.bind(&mut tape);
            let step = (|| -> Result<_, ModelError> {
                let h = forward(&mut tape, &bound, inputs, &view.graph, model)?;
                total_loss(&mut tape, h, n_users, &batch, model)
            })();
            let parts = match step {
                Ok(parts) => parts,
                Err(ModelError::Autodiff(e @ AutodiffError::NonFinite { .. })) => {
                    return Err(non_finite(epoch, b, e.to_string()))
                }
                Err(e) => return Err(e.into()),
            };
            let loss = tape.value(parts.total).data()[0];
            if !loss.is_finite() {
                return Err(non_finite(epoch, b, format!("loss {loss}")));
            }
            tape.backward(parts.total)?;
            let grads = bound.grads(&tape);
            adam_step(&mut params.set, &grads, &mut adam, config.learning_rate).map_err(|e| match e {
                TrainError::NonFiniteGradient { .. } => non_finite(epoch, b, e.to_string()),
                e => e,
            })?;
            counters.steps += 1;
            loss_sum += loss * batch.len() as f64;
            loss_count += batch.len();
        }
        let train_loss = if loss_count > 0 {
            loss_sum / loss_count as f64
        } else {
            f64::NAN
        };

        let val_hr10 = if view.validation.is_empty() {
            f64::NAN
        } else {
            let h = match embeddings(params, inputs, &view.graph, model) {
                Ok(h) => h,
                Err(ModelError::Autodiff(e @ AutodiffError::NonFinite { .. })) => {
                    return Err(non_finite(epoch, usize::MAX, e.to_string()))
                }
                Err(e) => return Err(e.into()),
            };
            evaluate_pairs(
                &h,
                n_users,
                &view.validation,
                &all_items,
                view.fit.n_items(),
                VALIDATION_K,
                VALIDATION_NEGATIVES,
                config.seed,
                Cohort::Warm,
            )
            .hr
        };
        log::debug!("epoch {epoch}: train_loss {train_loss:.6} val_hr10 {val_hr10:.4}");
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_hr10,
        });

        if val_hr10.is_nan() {
            continue;
        }
        match &best {
            Some((hr, _, _)) if val_hr10 <= *hr => {
                since_best += 1;
                if since_best >= config.early_stop_patience {
                    log::info!("early stop at epoch {epoch}");
                    break;
                }
            }
            _ => {
                best = Some((val_hr10, epoch, params.clone()));
                since_best = 0;
            }
        }
    }

    let (params, best_epoch) = match best {
        Some((_, epoch, p)) => (p, Some(epoch)),
        None => (params.clone(), None),
    };
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        counters,
    })
}

fn assemble_batch(
    chunk: &[usize],
    view: &TrainingView,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    counters: &mut TrainCounters,
) -> Batch {
    let contrastive = config.model.ablation.contrastive;
    let mut batch = Batch {
        bce_per_positive: config.bce_negatives,
        cl_per_positive: if contrastive {
            config.contrastive_negatives
        } else {
            0
        },
        ..Batch::default()
    };
    for &k in chunk {
        let p = view.fit.positives()[k];
        let known = &view.known_items[p.user];
        let negs = sample_negatives(known, config.bce_negatives, &view.item_pool, rng);
        if negs.len() < config.bce_negatives {
            counters.skipped_positives += 1;
            continue;
        }
        counters.bce_negatives_drawn += negs.len() as u64;
        if contrastive {
            let cl = sample_negatives(known, config.contrastive_negatives, &view.item_pool, rng);
            counters.contrastive_negatives_drawn += cl.len() as u64;
            batch.cl_negatives.extend(cl);
        }
        batch.users.push(p.user);
        batch.pos_items.push(p.item);
        batch.bce_negatives.extend(negs);
    }
    batch
}
