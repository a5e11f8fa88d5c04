use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::movielens::{Genre, ItemProfile, UserProfile, AGE_CODES, N_OCCUPATIONS};
use super::{DatasetError, InteractionSet};

pub const SCHEMA_VERSION: u32 = 1;

/// Decade buckets 1910s..2000s; years outside the range clamp to the ends.
pub const N_YEAR_BUCKETS: usize = 10;
pub const FIRST_DECADE: i32 = 1910;

pub fn year_bucket(year: i32) -> usize {
    ((year - FIRST_DECADE).div_euclid(10)).clamp(0, N_YEAR_BUCKETS as i32 - 1) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub name: String,
    pub kind: FieldKind,
    pub vocab: usize,
}

impl FieldSpec {
    fn new(name: &str, kind: FieldKind, vocab: usize) -> Self {
        Self {
            name: name.to_string(),
            kind,
            vocab,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySchema {
    pub fields: Vec<FieldSpec>,
}

impl EntitySchema {
    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

pub const USER_ID_FIELD: &str = "user_id";
pub const ITEM_ID_FIELD: &str = "item_id";

/// Field layout and id vocabularies for users and items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    pub version: u32,
    pub user: EntitySchema,
    pub item: EntitySchema,
    /// Raw user ids in dense order.
    pub user_ids: Vec<u32>,
    /// Raw item ids in dense order.
    pub item_ids: Vec<u32>,
}

impl FeatureSchema {
    pub fn for_interactions(inter: &InteractionSet) -> Self {
        Self::new(inter.user_ids().to_vec(), inter.item_ids().to_vec())
    }

    pub fn new(user_ids: Vec<u32>, item_ids: Vec<u32>) -> Self {
        let user = EntitySchema {
            fields: vec![
                FieldSpec::new("gender", FieldKind::Single, 2),
                FieldSpec::new("age", FieldKind::Single, AGE_CODES.len()),
                FieldSpec::new("occupation", FieldKind::Single, N_OCCUPATIONS),
                FieldSpec::new(USER_ID_FIELD, FieldKind::Single, user_ids.len()),
            ],
        };
        let item = EntitySchema {
            fields: vec![
                FieldSpec::new("genres", FieldKind::Multi, Genre::ALL.len()),
                FieldSpec::new("year_bucket", FieldKind::Single, N_YEAR_BUCKETS),
                FieldSpec::new(ITEM_ID_FIELD, FieldKind::Single, item_ids.len()),
            ],
        };
        Self {
            version: SCHEMA_VERSION,
            user,
            item,
            user_ids,
            item_ids,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let s: FeatureSchema = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.version != SCHEMA_VERSION {
            return Err(DatasetError::Invalid(format!(
                "schema version {} unsupported",
                self.version
            )));
        }
        let expected = Self::new(self.user_ids.clone(), self.item_ids.clone());
        if expected.user != self.user || expected.item != self.item {
            return Err(DatasetError::Invalid(
                "schema fields do not match the supported layout".into(),
            ));
        }
        for ids in [&self.user_ids, &self.item_ids] {
            if ids.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DatasetError::Invalid(
                    "schema ids must be sorted and unique".into(),
                ));
            }
        }
        Ok(())
    }

    /// SHA-256 of the serialized schema, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn user_index(&self, raw: u32) -> Option<usize> {
        self.user_ids.binary_search(&raw).ok()
    }

    pub fn item_index(&self, raw: u32) -> Option<usize> {
        self.item_ids.binary_search(&raw).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Field {
    pub name: String,
    pub indices: Vec<usize>,
}

/// One entity's attributes as index lists per schema field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldedFeatures {
    pub schema_id: String,
    pub fields: Vec<Field>,
}

impl FieldedFeatures {
    pub fn field(&self, name: &str) -> Option<&[usize]> {
        self.fields
            .iter()
            .find(|f| f.name == name)
            .map(|f| f.indices.as_slice())
    }

    /// Index lists only, in field order.
    pub fn index_lists(&self) -> Vec<Vec<usize>> {
        self.fields.iter().map(|f| f.indices.clone()).collect()
    }

    pub fn check(&self, schema: &EntitySchema) -> Result<(), DatasetError> {
        if self.fields.len() != schema.fields.len() {
            return Err(DatasetError::Invalid(format!(
                "expected {} fields, found {}",
                schema.fields.len(),
                self.fields.len()
            )));
        }
        for (f, spec) in self.fields.iter().zip(&schema.fields) {
            if f.name != spec.name {
                return Err(DatasetError::Invalid(format!(
                    "field `{}` where `{}` expected",
                    f.name, spec.name
                )));
            }
            if f.indices.is_empty() || (spec.kind == FieldKind::Single && f.indices.len() != 1) {
                return Err(DatasetError::Invalid(format!(
                    "field `{}` has {} indices",
                    f.name,
                    f.indices.len()
                )));
            }
            if let Some(&bad) = f.indices.iter().find(|&&i| i >= spec.vocab) {
                return Err(DatasetError::Invalid(format!(
                    "field `{}` index {bad} >= vocabulary {}",
                    f.name, spec.vocab
                )));
            }
        }
        Ok(())
    }
}

fn build(schema: &EntitySchema, schema_id: &str, lists: Vec<Vec<usize>>) -> FieldedFeatures {
    FieldedFeatures {
        schema_id: schema_id.to_string(),
        fields: schema
            .fields
            .iter()
            .zip(lists)
            .map(|(spec, indices)| Field {
                name: spec.name.clone(),
                indices,
            })
            .collect(),
    }
}

/// `[gender, age, occupation, user_id]`.
pub fn vectorize_user(
    profile: &UserProfile,
    schema: &FeatureSchema,
    schema_id: &str,
) -> Result<FieldedFeatures, DatasetError> {
    let id = schema
        .user_index(profile.user_id)
        .ok_or(DatasetError::UnknownId {
            kind: "user",
            id: profile.user_id,
        })?;
    Ok(build(
        &schema.user,
        schema_id,
        vec![
            vec![profile.gender.index()],
            vec![profile.age.index()],
            vec![profile.occupation as usize],
            vec![id],
        ],
    ))
}

/// `[genres (multi-hot), year_bucket, item_id]`.
pub fn vectorize_item(
    profile: &ItemProfile,
    schema: &FeatureSchema,
    schema_id: &str,
) -> Result<FieldedFeatures, DatasetError> {
    let id = schema
        .item_index(profile.item_id)
        .ok_or(DatasetError::UnknownId {
            kind: "item",
            id: profile.item_id,
        })?;
    if profile.genres.is_empty() {
        return Err(DatasetError::Invalid(format!(
            "item {} has no genres",
            profile.item_id
        )));
    }
    let mut genres: Vec<usize> = profile.genres.iter().map(|g| g.index()).collect();
    genres.sort_unstable();
    genres.dedup();
    Ok(build(
        &schema.item,
        schema_id,
        vec![genres, vec![year_bucket(profile.year)], vec![id]],
    ))
}

/// Features for every user in the schema, in dense order.
pub fn vectorize_users(
    profiles: &[UserProfile],
    schema: &FeatureSchema,
) -> Result<Vec<FieldedFeatures>, DatasetError> {
    let schema_id = schema.hash();
    let mut out: Vec<Option<FieldedFeatures>> = vec![None; schema.user_ids.len()];
    for p in profiles {
        if let Some(idx) = schema.user_index(p.user_id) {
            out[idx] = Some(vectorize_user(p, schema, &schema_id)?);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or(DatasetError::MissingProfile {
                kind: "user",
                id: schema.user_ids[i],
            })
        })
        .collect()
}

/// Features for every item in the schema, in dense order.
pub fn vectorize_items(
    profiles: &[ItemProfile],
    schema: &FeatureSchema,
) -> Result<Vec<FieldedFeatures>, DatasetError> {
    let schema_id = schema.hash();
    let mut out: Vec<Option<FieldedFeatures>> = vec![None; schema.item_ids.len()];
    for p in profiles {
        if let Some(idx) = schema.item_index(p.item_id) {
            out[idx] = Some(vectorize_item(p, schema, &schema_id)?);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or(DatasetError::MissingProfile {
                kind: "item",
                id: schema.item_ids[i],
            })
        })
        .collect()
}
