//! MovieLens-format parsing, feature vectorization, the cold-start split and
//! the normalized user-item graph.

mod graph;
mod interactions;
pub mod movielens;
mod prepared;
mod schema;
mod synthetic;

use std::path::{Path, PathBuf};

pub use graph::{build_graph, BipartiteGraph};
pub use interactions::{
    binarize, cold_start_split, ColdStartSplit, Interaction, InteractionSet, DEFAULT_THRESHOLD,
};
pub use movielens::{
    parse_items, parse_ratings, parse_users, AgeGroup, Gender, Genre, ItemProfile, RawRating,
    UserProfile,
};
pub use prepared::{
    check_split, load_movielens_dir, parse_pairs_csv, prepare, DatasetStats, PrepareOptions,
    PreparedDataset, RawDataset, SplitManifest, FEATURES_FILE, SCHEMA_FILE, SPLIT_FILE,
    STATS_FILE, TEST_ITEMS_FILE, TEST_USERS_FILE, TRAIN_FILE,
};
pub use schema::{
    vectorize_item, vectorize_items, vectorize_user, vectorize_users, year_bucket, EntitySchema,
    FeatureSchema, Field, FieldKind, FieldSpec, FieldedFeatures, ITEM_ID_FIELD, USER_ID_FIELD,
};
pub use synthetic::{synthetic_dataset, SyntheticData, DEFAULT_TOPICS};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Validation { line: usize, message: String },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<DatasetError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown {kind} id {id}")]
    UnknownId { kind: &'static str, id: u32 },
    #[error("no profile for {kind} id {id}")]
    MissingProfile { kind: &'static str, id: u32 },
    #[error("{what} was built for schema {found}, expected {expected}")]
    SchemaMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl DatasetError {
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            e @ (DatasetError::Io { .. } | DatasetError::InFile { .. }) => e,
            e => DatasetError::InFile {
                path: path.to_path_buf(),
                source: Box::new(e),
            },
        }
    }

    /// The innermost error, skipping file context.
    pub fn root(&self) -> &DatasetError {
        match self {
            DatasetError::InFile { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for malformed or out-of-range input content.
    pub fn is_parse(&self) -> bool {
        matches!(
            self.root(),
            DatasetError::Parse { .. }
                | DatasetError::Validation { .. }
                | DatasetError::Json(_)
                | DatasetError::Csv(_)
        )
    }
}
