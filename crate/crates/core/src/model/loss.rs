use crate::autodiff::{sigmoid, Tape, Tensor, Var};

use super::{ModelConfig, ModelError};

/// One optimization step's worth of training examples.
///
/// Cross-entropy negatives and contrastive negatives are stored flat, with
/// `bce_negatives[k * m .. (k + 1) * m]` belonging to positive `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Batch {
    pub users: Vec<usize>,
    pub pos_items: Vec<usize>,
    pub bce_negatives: Vec<usize>,
    pub bce_per_positive: usize,
    pub cl_negatives: Vec<usize>,
    pub cl_per_positive: usize,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    fn repeat_users(&self, times: usize) -> Vec<usize> {
        self.users
            .iter()
            .flat_map(|&u| std::iter::repeat_n(u, times))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LossParts {
    pub total: Var,
    pub rec: Var,
    /// Mean InfoNCE over positives; absent when the contrastive term is off.
    pub contrastive: Option<Var>,
}

/// `sigmoid(z_u · z_v)`.
pub fn score(z_u: &[f64], z_v: &[f64]) -> f64 {
    sigmoid(z_u.iter().zip(z_v).map(|(a, b)| a * b).sum())
}

/// Per-row InfoNCE terms from logits: `pos` is `B x 1`, `neg` is `B x N`.
/// Returns the `B x 1` column `logsumexp(logits / tau) - pos / tau`, where the
/// logsumexp runs over the positive and negatives, or over negatives only
/// when `include_positive` is false.
pub fn info_nce_from_logits(
    tape: &mut Tape,
    pos: Var,
    neg: Var,
    temperature: f64,
    include_positive: bool,
) -> Result<Var, ModelError> {
    let inv = 1.0 / temperature;
    let pos_scaled = tape.scale(pos, inv)?;
    let denom = if include_positive {
        let all = tape.concat_cols(&[pos, neg])?;
        tape.scale(all, inv)?
    } else {
        tape.scale(neg, inv)?
    };
    let lse = tape.logsumexp_rows(denom)?;
    Ok(tape.sub(lse, pos_scaled)?)
}

/// InfoNCE for a single query against one positive and `N >= 1` negatives.
pub fn info_nce_loss(
    q: &[f64],
    k_pos: &[f64],
    k_negs: &[Vec<f64>],
    temperature: f64,
    include_positive: bool,
) -> Result<f64, ModelError> {
    if k_negs.is_empty() {
        return Err(ModelError::Config("InfoNCE needs at least one negative".into()));
    }
    if !(temperature > 0.0) {
        return Err(ModelError::Config("temperature must be > 0".into()));
    }
    let mut tape = Tape::new();
    let n = k_negs.len();
    let qv = tape.leaf(Tensor::row_vector(q.to_vec()));
    let kp = tape.leaf(Tensor::row_vector(k_pos.to_vec()));
    let q_rep = tape.leaf(Tensor::from_rows(&vec![q.to_vec(); n])?);
    let kn = tape.leaf(Tensor::from_rows(k_negs)?);
    let pos = tape.row_dot(qv, kp)?;
    let neg_col = tape.row_dot(q_rep, kn)?;
    let neg = tape.reshape(neg_col, 1, n)?;
    let terms = info_nce_from_logits(&mut tape, pos, neg, temperature, include_positive)?;
    Ok(tape.value(terms).data()[0])
}

/// Mean binary cross-entropy with predictions clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(preds: &[f64], labels: &[f64]) -> Result<f64, ModelError> {
    let mut tape = Tape::new();
    let p = tape.leaf(Tensor::column_vector(preds.to_vec()));
    let l = tape.bce(p, labels)?;
    Ok(tape.value(l).data()[0])
}

/// `L_rec + lambda * mean InfoNCE` over a batch, scored on the propagated
/// node embeddings `h` (users first, then items).
pub fn total_loss(
    tape: &mut Tape,
    h: Var,
    n_users: usize,
    batch: &Batch,
    config: &ModelConfig,
) -> Result<LossParts, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::Config("empty batch".into()));
    }
    let item_nodes = |items: &[usize]| items.iter().map(|&i| n_users + i).collect::<Vec<_>>();

    let users = tape.gather_rows(h, &batch.users)?;
    let pos_items = tape.gather_rows(h, &item_nodes(&batch.pos_items))?;
    let pos_logits = tape.row_dot(users, pos_items)?;

    let mut logit_parts = vec![pos_logits];
    let mut labels = vec![1.0; batch.len()];
    if !batch.bce_negatives.is_empty() {
        let neg_users = tape.gather_rows(h, &batch.repeat_users(batch.bce_per_positive))?;
        let neg_items = tape.gather_rows(h, &item_nodes(&batch.bce_negatives))?;
        logit_parts.push(tape.row_dot(neg_users, neg_items)?);
        labels.resize(batch.len() + batch.bce_negatives.len(), 0.0);
    }
    let logits = tape.concat_rows(&logit_parts)?;
    let preds = tape.sigmoid(logits)?;
    let rec = tape.bce(preds, &labels)?;

    if !config.ablation.contrastive || batch.cl_negatives.is_empty() {
        return Ok(LossParts {
            total: rec,
            rec,
            contrastive: None,
        });
    }
    let n = batch.cl_per_positive;
    let q = tape.gather_rows(h, &batch.repeat_users(n))?;
    let k = tape.gather_rows(h, &item_nodes(&batch.cl_negatives))?;
    let neg_col = tape.row_dot(q, k)?;
    let neg = tape.reshape(neg_col, batch.len(), n)?;
    let terms = info_nce_from_logits(
        tape,
        pos_logits,
        neg,
        config.temperature,
        config.infonce_include_positive,
    )?;
    let cl = tape.mean(terms)?;
    let weighted = tape.scale(cl, config.lambda)?;
    let total = tape.add(rec, weighted)?;
    Ok(LossParts {
        total,
        rec,
        contrastive: Some(cl),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_is_symmetric_and_half_at_orthogonal() {
        assert_eq!(score(&[1.0, 0.0], &[0.0, 3.0]), 0.5);
        let (a, b) = ([0.3, -1.2, 2.0], [1.1, 0.4, -0.7]);
        assert_eq!(score(&a, &b), score(&b, &a));
    }

    #[test]
    fn bce_half_everywhere_is_ln2() {
        let v = bce_loss(&[0.5; 4], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bce_saturated_prediction() {
        let v = bce_loss(&[1.0 - 1e-7], &[1.0]).unwrap();
        assert!((v - 1e-7).abs() < 1e-12, "{v}");
    }

    #[test]
    fn bce_rejects_bad_label() {
        assert!(bce_loss(&[0.5], &[0.5]).is_err());
    }

    #[test]
    fn info_nce_requires_negative() {
        assert!(info_nce_loss(&[1.0], &[1.0], &[], 1.0, true).is_err());
    }
}
