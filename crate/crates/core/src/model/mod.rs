//! Field encoders with attention fusion, graph propagation, scoring and the
//! joint training objective.

mod encoder;
mod gcn;
mod loss;

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{AutodiffError, Bags, Init, ParamSet, Tape, Tensor};
use crate::dataset::{EntitySchema, FeatureSchema, FieldedFeatures};

pub use encoder::{attention_fuse, encode, encode_side};
pub use gcn::gcn_forward;
pub use loss::{
    bce_loss, info_nce_from_logits, info_nce_loss, score, total_loss, Batch, LossParts,
};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("parameters do not match the feature schema: {0}")]
    Schema(String),
}

/// Component switches for ablation runs. All on is the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    pub adaptive_selection: bool,
    pub multimodal_fusion: bool,
    pub contrastive: bool,
    pub gcn: bool,
}

impl Default for Ablation {
    fn default() -> Self {
        Self::FULL
    }
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        adaptive_selection: true,
        multimodal_fusion: true,
        contrastive: true,
        gcn: true,
    };

    /// Id embeddings only, dot-product scoring, cross-entropy only.
    pub const MATRIX_FACTORIZATION: Ablation = Ablation {
        adaptive_selection: false,
        multimodal_fusion: false,
        contrastive: false,
        gcn: false,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed_dim: usize,
    pub gcn_layers: usize,
    pub temperature: f64,
    pub lambda: f64,
    /// Standard InfoNCE keeps the positive logit in the denominator.
    pub infonce_include_positive: bool,
    pub ablation: Ablation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            gcn_layers: 2,
            temperature: 0.2,
            lambda: 0.5,
            infonce_include_positive: true,
            ablation: Ablation::FULL,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.embed_dim == 0 {
            return Err(ModelError::Config("embed_dim must be >= 1".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ModelError::Config("temperature must be > 0".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ModelError::Config("lambda must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    User,
    Item,
}

impl Side {
    pub fn prefix(self) -> &'static str {
        match self {
            Side::User => "user",
            Side::Item => "item",
        }
    }

    fn schema(self, schema: &FeatureSchema) -> &EntitySchema {
        match self {
            Side::User => &schema.user,
            Side::Item => &schema.item,
        }
    }
}

pub fn table_name(side: Side, field: &str) -> String {
    format!("{}.{}", side.prefix(), field)
}

pub fn attention_matrix_name(side: Side) -> String {
    format!("{}.attn.W", side.prefix())
}

pub fn attention_vector_name(side: Side) -> String {
    format!("{}.attn.w", side.prefix())
}

pub fn gcn_weight_name(layer: usize) -> String {
    format!("gcn.{layer}.W")
}

/// Every learnable tensor of the model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub set: ParamSet,
    /// Field names per side in schema order, with the id field last.
    pub user_fields: Vec<String>,
    pub item_fields: Vec<String>,
}

impl ModelParams {
    /// Embeddings ~ U(±1/sqrt(d)); attention and GCN matrices ~ U(±sqrt(6/2d));
    /// the attention query vector starts at zero.
    pub fn init(schema: &FeatureSchema, config: &ModelConfig, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let d = config.embed_dim;
        let emb = Init::Uniform {
            bound: 1.0 / (d as f64).sqrt(),
        };
        let mat = Init::Uniform {
            bound: (6.0 / (2.0 * d as f64)).sqrt(),
        };
        let mut set = ParamSet::new();
        for side in [Side::User, Side::Item] {
            for field in &side.schema(schema).fields {
                set.init(table_name(side, &field.name), field.vocab, d, emb, rng)?;
            }
            set.init(attention_matrix_name(side), d, d, mat, rng)?;
            set.init(attention_vector_name(side), d, 1, Init::Zeros, rng)?;
        }
        for layer in 0..config.gcn_layers {
            set.init(gcn_weight_name(layer), d, d, mat, rng)?;
        }
        Ok(Self::from_set(set, schema))
    }

    pub fn from_set(set: ParamSet, schema: &FeatureSchema) -> Self {
        let names = |s: &EntitySchema| s.fields.iter().map(|f| f.name.clone()).collect();
        Self {
            set,
            user_fields: names(&schema.user),
            item_fields: names(&schema.item),
        }
    }

    pub fn fields(&self, side: Side) -> &[String] {
        match side {
            Side::User => &self.user_fields,
            Side::Item => &self.item_fields,
        }
    }

    /// Verifies table shapes against the schema and config.
    pub fn check(&self, schema: &FeatureSchema, config: &ModelConfig) -> Result<(), ModelError> {
        let d = config.embed_dim;
        let expect = |name: String, rows: usize, cols: usize| -> Result<(), ModelError> {
            match self.set.get(&name) {
                Some(t) if t.shape() == (rows, cols) => Ok(()),
                Some(t) => Err(ModelError::Schema(format!(
                    "`{name}` has shape {:?}, expected {:?}",
                    t.shape(),
                    (rows, cols)
                ))),
                None => Err(ModelError::Schema(format!("missing `{name}`"))),
            }
        };
        for side in [Side::User, Side::Item] {
            for field in &side.schema(schema).fields {
                expect(table_name(side, &field.name), field.vocab, d)?;
            }
            expect(attention_matrix_name(side), d, d)?;
            expect(attention_vector_name(side), d, 1)?;
        }
        for layer in 0..config.gcn_layers {
            expect(gcn_weight_name(layer), d, d)?;
        }
        Ok(())
    }
}

/// Pre-built lookup bags for one side, one per field.
#[derive(Debug, Clone)]
pub struct EntityInputs {
    pub field_names: Vec<String>,
    pub bags: Vec<Arc<Bags>>,
    pub len: usize,
}

impl EntityInputs {
    pub fn from_features(features: &[FieldedFeatures], schema: &EntitySchema) -> Result<Self, ModelError> {
        let mut per_field: Vec<Vec<Vec<usize>>> = vec![Vec::with_capacity(features.len()); schema.fields.len()];
        for f in features {
            f.check(schema)
                .map_err(|e| ModelError::Schema(e.to_string()))?;
            for (k, field) in f.fields.iter().enumerate() {
                per_field[k].push(field.indices.clone());
            }
        }
        let bags = per_field
            .iter()
            .map(|lists| Bags::from_lists(lists).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            field_names: schema.fields.iter().map(|f| f.name.clone()).collect(),
            bags,
            len: features.len(),
        })
    }
}

/// Encoder inputs for every user and item, in dense id order.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub users: EntityInputs,
    pub items: EntityInputs,
}

impl ModelInputs {
    pub fn new(
        schema: &FeatureSchema,
        users: &[FieldedFeatures],
        items: &[FieldedFeatures],
    ) -> Result<Self, ModelError> {
        Ok(Self {
            users: EntityInputs::from_features(users, &schema.user)?,
            items: EntityInputs::from_features(items, &schema.item)?,
        })
    }

    pub fn side(&self, side: Side) -> &EntityInputs {
        match side {
            Side::User => &self.users,
            Side::Item => &self.items,
        }
    }
}

/// Records the full forward pass: encoders, stacking (users over items) and
/// propagation. Returns the final node embeddings.
pub fn forward(
    tape: &mut Tape,
    bound: &crate::autodiff::BoundParams,
    inputs: &ModelInputs,
    graph: &crate::dataset::BipartiteGraph,
    config: &ModelConfig,
) -> Result<crate::autodiff::Var, ModelError> {
    let users = encode_side(tape, bound, Side::User, &inputs.users, config)?;
    let items = encode_side(tape, bound, Side::Item, &inputs.items, config)?;
    let h0 = tape.concat_rows(&[users.fused, items.fused])?;
    gcn_forward(tape, graph, h0, bound, config)
}

/// Final embeddings of every node without keeping a tape around.
pub fn embeddings(
    params: &ModelParams,
    inputs: &ModelInputs,
    graph: &crate::dataset::BipartiteGraph,
    config: &ModelConfig,
) -> Result<Tensor, ModelError> {
    let mut tape = Tape::new();
    let bound = params.set.bind(&mut tape);
    let h = forward(&mut tape, &bound, inputs, graph, config)?;
    Ok(tape.value(h).clone())
}
