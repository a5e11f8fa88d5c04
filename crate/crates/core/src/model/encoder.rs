use crate::autodiff::{BoundParams, Tape, Tensor, Var};
use crate::dataset::{EntitySchema, FieldedFeatures};

use super::{
    attention_matrix_name, attention_vector_name, table_name, EntityInputs, ModelConfig, ModelError,
    ModelParams, Side,
};

/// Fused embeddings for one side plus the attention weights, if any.
#[derive(Debug, Clone, Copy)]
pub struct EncodedSide {
    pub fused: Var,
    /// `n x F` softmax weights when attention fusion ran.
    pub weights: Option<Var>,
}

/// Single-query additive attention over field embeddings.
///
/// `logit_f = tanh(E_f W) w`, `alpha = softmax(logits)` per row and
/// `fused = sum_f alpha_f E_f`. Each `E_f` is `n x d`, `w_mat` is `d x d` and
/// `w_vec` is `d x 1`. Returns `(fused, alpha)`.
pub fn attention_fuse(
    tape: &mut Tape,
    field_embs: &[Var],
    w_mat: Var,
    w_vec: Var,
) -> Result<(Var, Var), ModelError> {
    if field_embs.is_empty() {
        return Err(ModelError::Config("attention needs at least one field".into()));
    }
    let mut logits = Vec::with_capacity(field_embs.len());
    for &e in field_embs {
        let proj = tape.matmul(e, w_mat)?;
        let act = tape.tanh(proj)?;
        logits.push(tape.matmul(act, w_vec)?);
    }
    let stacked = tape.concat_cols(&logits)?;
    let alpha = tape.softmax_rows(stacked)?;
    let mut fused: Option<Var> = None;
    for (f, &e) in field_embs.iter().enumerate() {
        let a = tape.select_col(alpha, f)?;
        let term = tape.mul_col(e, a)?;
        fused = Some(match fused {
            None => term,
            Some(acc) => tape.add(acc, term)?,
        });
    }
    Ok((fused.expect("at least one field"), alpha))
}

/// Encodes every entity of one side. Fields are mean-pooled lookups; the id
/// field is the last one.
pub fn encode_side(
    tape: &mut Tape,
    bound: &BoundParams,
    side: Side,
    inputs: &EntityInputs,
    config: &ModelConfig,
) -> Result<EncodedSide, ModelError> {
    let lookup = |tape: &mut Tape, k: usize| -> Result<Var, ModelError> {
        let table = bound.var(&table_name(side, &inputs.field_names[k]))?;
        Ok(tape.embedding_bag_mean(table, inputs.bags[k].clone())?)
    };
    let n_fields = inputs.bags.len();
    if n_fields == 0 {
        return Err(ModelError::Config("entity has no fields".into()));
    }
    if !config.ablation.multimodal_fusion {
        let fused = lookup(tape, n_fields - 1)?;
        return Ok(EncodedSide {
            fused,
            weights: None,
        });
    }
    let embs = (0..n_fields)
        .map(|k| lookup(tape, k))
        .collect::<Result<Vec<_>, _>>()?;
    if config.ablation.adaptive_selection {
        let w_mat = bound.var(&attention_matrix_name(side))?;
        let w_vec = bound.var(&attention_vector_name(side))?;
        let (fused, alpha) = attention_fuse(tape, &embs, w_mat, w_vec)?;
        Ok(EncodedSide {
            fused,
            weights: Some(alpha),
        })
    } else {
        let mut sum = embs[0];
        for &e in &embs[1..] {
            sum = tape.add(sum, e)?;
        }
        let fused = if n_fields == 1 {
            sum
        } else {
            tape.scale(sum, 1.0 / n_fields as f64)?
        };
        Ok(EncodedSide {
            fused,
            weights: None,
        })
    }
}

/// Fused embedding of a single entity, before propagation.
pub fn encode(
    features: &FieldedFeatures,
    schema: &EntitySchema,
    side: Side,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<Tensor, ModelError> {
    let inputs = EntityInputs::from_features(std::slice::from_ref(features), schema)?;
    let mut tape = Tape::new();
    let bound = params.set.bind(&mut tape);
    let out = encode_side(&mut tape, &bound, side, &inputs, config)?;
    Ok(tape.value(out.fused).clone())
}
