//! The on-disk prepared dataset: schema, features, split manifest and
//! interaction CSVs, plus the pipeline that produces it from raw files.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::movielens::{decode_latin1, parse_items, parse_ratings, parse_users};
use super::{
    binarize, cold_start_split, vectorize_items, vectorize_users, ColdStartSplit, DatasetError,
    FeatureSchema, FieldedFeatures, Interaction, ItemProfile, RawRating, UserProfile,
};

pub const SCHEMA_FILE: &str = "schema.json";
pub const SPLIT_FILE: &str = "split.json";
pub const FEATURES_FILE: &str = "features.json";
pub const STATS_FILE: &str = "stats.json";
pub const TRAIN_FILE: &str = "train.csv";
pub const TEST_USERS_FILE: &str = "test_cold_users.csv";
pub const TEST_ITEMS_FILE: &str = "test_cold_items.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrepareOptions {
    pub threshold: u8,
    pub user_frac: f64,
    pub item_frac: f64,
    pub seed: u64,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            threshold: super::DEFAULT_THRESHOLD,
            user_frac: 0.1,
            item_frac: 0.1,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_users: usize,
    pub n_items: usize,
    pub n_ratings: usize,
    /// Ratings over `n_users * n_items`, before binarization.
    pub density: f64,
    pub n_positives: usize,
    pub n_train: usize,
    pub n_cold_users: usize,
    pub n_cold_items: usize,
    pub n_test_user_pairs: usize,
    pub n_test_item_pairs: usize,
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "users:              {}", self.n_users)?;
        writeln!(f, "items:              {}", self.n_items)?;
        writeln!(f, "ratings:            {}", self.n_ratings)?;
        writeln!(f, "density:            {:.2}%", self.density * 100.0)?;
        writeln!(f, "positives:          {}", self.n_positives)?;
        writeln!(f, "train pairs:        {}", self.n_train)?;
        writeln!(
            f,
            "cold users / items: {} / {}",
            self.n_cold_users, self.n_cold_items
        )?;
        write!(
            f,
            "test pairs (cold users / cold items): {} / {}",
            self.n_test_user_pairs, self.n_test_item_pairs
        )
    }
}

/// JSON record of how the split was made, with raw ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitManifest {
    pub options: PrepareOptions,
    pub schema_hash: String,
    pub n_users: usize,
    pub n_items: usize,
    pub n_train: usize,
    pub cold_users: Vec<u32>,
    pub cold_items: Vec<u32>,
    pub n_evaluated_cold_users: usize,
    pub n_evaluated_cold_items: usize,
    pub n_test_user_pairs: usize,
    pub n_test_item_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeaturesFile {
    schema_hash: String,
    users: Vec<Vec<Vec<usize>>>,
    items: Vec<Vec<Vec<usize>>>,
}

/// Everything training and evaluation need.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub schema: FeatureSchema,
    pub schema_hash: String,
    pub user_features: Vec<FieldedFeatures>,
    pub item_features: Vec<FieldedFeatures>,
    pub split: ColdStartSplit,
    pub manifest: SplitManifest,
}

#[derive(Debug, Clone)]
pub struct RawDataset {
    pub ratings: Vec<RawRating>,
    pub users: Vec<UserProfile>,
    pub items: Vec<ItemProfile>,
}

fn read_text(path: &Path) -> Result<String, DatasetError> {
    let bytes = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(decode_latin1(&bytes))
}

fn in_file<T>(path: &Path, r: Result<T, DatasetError>) -> Result<T, DatasetError> {
    r.map_err(|e| e.in_file(path))
}

/// Reads `ratings.dat`, `users.dat` and `movies.dat` from a directory.
pub fn load_movielens_dir(dir: &Path) -> Result<RawDataset, DatasetError> {
    let paths: Vec<PathBuf> = ["ratings.dat", "users.dat", "movies.dat"]
        .iter()
        .map(|f| dir.join(f))
        .collect();
    for p in &paths {
        if !p.is_file() {
            return Err(DatasetError::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
            });
        }
    }
    let ratings = in_file(&paths[0], parse_ratings(&read_text(&paths[0])?))?;
    let users = in_file(&paths[1], parse_users(&read_text(&paths[1])?))?;
    let items = in_file(&paths[2], parse_items(&read_text(&paths[2])?))?;
    Ok(RawDataset {
        ratings,
        users,
        items,
    })
}

pub fn prepare(
    raw: &RawDataset,
    opts: &PrepareOptions,
) -> Result<(PreparedDataset, DatasetStats), DatasetError> {
    let inter = binarize(&raw.ratings, opts.threshold)?;
    let schema = FeatureSchema::for_interactions(&inter);
    let schema_hash = schema.hash();
    let user_features = vectorize_users(&raw.users, &schema)?;
    let item_features = vectorize_items(&raw.items, &schema)?;
    let split = cold_start_split(&inter, opts.user_frac, opts.item_frac, opts.seed)?;

    let n_cells = (inter.n_users() * inter.n_items()).max(1) as f64;
    let stats = DatasetStats {
        n_users: inter.n_users(),
        n_items: inter.n_items(),
        n_ratings: raw.ratings.len(),
        density: raw.ratings.len() as f64 / n_cells,
        n_positives: inter.len(),
        n_train: split.train.len(),
        n_cold_users: split.cold_users.len(),
        n_cold_items: split.cold_items.len(),
        n_test_user_pairs: split.n_test_user_pairs(),
        n_test_item_pairs: split.n_test_item_pairs(),
    };
    let manifest = manifest_for(&split, &schema, &schema_hash, opts);
    Ok((
        PreparedDataset {
            schema,
            schema_hash,
            user_features,
            item_features,
            split,
            manifest,
        },
        stats,
    ))
}

fn manifest_for(
    split: &ColdStartSplit,
    schema: &FeatureSchema,
    schema_hash: &str,
    opts: &PrepareOptions,
) -> SplitManifest {
    SplitManifest {
        options: *opts,
        schema_hash: schema_hash.to_string(),
        n_users: split.train.n_users(),
        n_items: split.train.n_items(),
        n_train: split.train.len(),
        cold_users: split.cold_users.iter().map(|&u| schema.user_ids[u]).collect(),
        cold_items: split.cold_items.iter().map(|&i| schema.item_ids[i]).collect(),
        n_evaluated_cold_users: split.test_cold_users.len(),
        n_evaluated_cold_items: split.test_cold_items.len(),
        n_test_user_pairs: split.n_test_user_pairs(),
        n_test_item_pairs: split.n_test_item_pairs(),
    }
}

impl PreparedDataset {
    pub fn n_users(&self) -> usize {
        self.schema.user_ids.len()
    }

    pub fn n_items(&self) -> usize {
        self.schema.item_ids.len()
    }

    /// Writes every prepared file into `dir`. Returns the written paths.
    pub fn write(&self, dir: &Path, stats: Option<&DatasetStats>) -> Result<Vec<PathBuf>, DatasetError> {
        fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let features = FeaturesFile {
            schema_hash: self.schema_hash.clone(),
            users: self.user_features.iter().map(|f| f.index_lists()).collect(),
            items: self.item_features.iter().map(|f| f.index_lists()).collect(),
        };
        let schema = &self.schema;
        let train: Vec<(u32, u32, Option<i64>)> = self
            .split
            .train
            .positives()
            .iter()
            .map(|p| (schema.user_ids[p.user], schema.item_ids[p.item], Some(p.timestamp)))
            .collect();
        let test_users: Vec<(u32, u32, Option<i64>)> = self
            .split
            .test_cold_users
            .iter()
            .flat_map(|(&u, items)| items.iter().map(move |&i| (u, i)))
            .map(|(u, i)| (schema.user_ids[u], schema.item_ids[i], None))
            .collect();
        let test_items: Vec<(u32, u32, Option<i64>)> = self
            .split
            .test_cold_items
            .iter()
            .flat_map(|(&i, users)| users.iter().map(move |&u| (u, i)))
            .map(|(u, i)| (schema.user_ids[u], schema.item_ids[i], None))
            .collect();

        let mut files: Vec<(&str, String)> = vec![
            (SCHEMA_FILE, schema.to_json()),
            (SPLIT_FILE, to_json(&self.manifest)),
            (FEATURES_FILE, serde_json::to_string(&features)?),
            (TRAIN_FILE, pairs_csv(&train, true)),
            (TEST_USERS_FILE, pairs_csv(&test_users, false)),
            (TEST_ITEMS_FILE, pairs_csv(&test_items, false)),
        ];
        if let Some(stats) = stats {
            files.push((STATS_FILE, to_json(stats)));
        }
        let mut written = Vec::new();
        for (name, body) in files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| DatasetError::Io {
                path: path.clone(),
                source,
            })?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn load(dir: &Path) -> Result<Self, DatasetError> {
        let read = |name: &str| -> Result<(PathBuf, String), DatasetError> {
            let path = dir.join(name);
            let text = fs::read_to_string(&path).map_err(|source| DatasetError::Io {
                path: path.clone(),
                source,
            })?;
            Ok((path, text))
        };
        let (p, text) = read(SCHEMA_FILE)?;
        let schema = in_file(&p, FeatureSchema::from_json(&text))?;
        let schema_hash = schema.hash();
        let (p, text) = read(SPLIT_FILE)?;
        let manifest: SplitManifest = in_file(&p, serde_json::from_str(&text).map_err(Into::into))?;
        let (p, text) = read(FEATURES_FILE)?;
        let features: FeaturesFile = in_file(&p, serde_json::from_str(&text).map_err(Into::into))?;
        for (what, hash) in [("split", &manifest.schema_hash), ("features", &features.schema_hash)] {
            if *hash != schema_hash {
                return Err(DatasetError::SchemaMismatch {
                    what,
                    expected: schema_hash,
                    found: hash.clone(),
                });
            }
        }
        let user_features = fielded(&features.users, &schema.user, &schema_hash)?;
        let item_features = fielded(&features.items, &schema.item, &schema_hash)?;
        if user_features.len() != schema.user_ids.len() || item_features.len() != schema.item_ids.len() {
            return Err(DatasetError::Invalid(
                "feature rows do not cover the schema ids".into(),
            ));
        }

        let (p, text) = read(TRAIN_FILE)?;
        let train = in_file(&p, parse_pairs_csv(&text, &schema))?;
        let (p, text) = read(TEST_USERS_FILE)?;
        let test_users = in_file(&p, parse_pairs_csv(&text, &schema))?;
        let (p, text) = read(TEST_ITEMS_FILE)?;
        let test_items = in_file(&p, parse_pairs_csv(&text, &schema))?;

        let to_dense = |raw: &[u32], lookup: &dyn Fn(u32) -> Option<usize>, kind| {
            raw.iter()
                .map(|&id| lookup(id).ok_or(DatasetError::UnknownId { kind, id }))
                .collect::<Result<Vec<usize>, _>>()
        };
        let mut cold_users = to_dense(&manifest.cold_users, &|id| schema.user_index(id), "user")?;
        let mut cold_items = to_dense(&manifest.cold_items, &|id| schema.item_index(id), "item")?;
        cold_users.sort_unstable();
        cold_items.sort_unstable();

        let mut test_cold_users: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in &test_users {
            test_cold_users.entry(p.user).or_default().push(p.item);
        }
        let mut test_cold_items: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for p in &test_items {
            test_cold_items.entry(p.item).or_default().push(p.user);
        }
        for v in test_cold_users.values_mut().chain(test_cold_items.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        let train = super::InteractionSet::new(schema.user_ids.clone(), schema.item_ids.clone(), train)?;
        let split = ColdStartSplit {
            train,
            cold_users,
            cold_items,
            test_cold_users,
            test_cold_items,
        };
        check_split(&split)?;
        Ok(Self {
            schema,
            schema_hash,
            user_features,
            item_features,
            split,
            manifest,
        })
    }
}

fn fielded(
    rows: &[Vec<Vec<usize>>],
    schema: &super::EntitySchema,
    schema_id: &str,
) -> Result<Vec<FieldedFeatures>, DatasetError> {
    rows.iter()
        .map(|lists| {
            if lists.len() != schema.fields.len() {
                return Err(DatasetError::Invalid(format!(
                    "feature row has {} fields, schema has {}",
                    lists.len(),
                    schema.fields.len()
                )));
            }
            let f = FieldedFeatures {
                schema_id: schema_id.to_string(),
                fields: schema
                    .fields
                    .iter()
                    .zip(lists)
                    .map(|(spec, l)| super::Field {
                        name: spec.name.clone(),
                        indices: l.clone(),
                    })
                    .collect(),
            };
            f.check(schema)?;
            Ok(f)
        })
        .collect()
}

/// Checks that no cold entity appears in train and that test keys are cold.
pub fn check_split(split: &ColdStartSplit) -> Result<(), DatasetError> {
    for p in split.train.positives() {
        if split.is_cold_user(p.user) || split.is_cold_item(p.item) {
            return Err(DatasetError::Invalid(format!(
                "train pair ({}, {}) touches a cold entity",
                p.user, p.item
            )));
        }
    }
    for &u in split.test_cold_users.keys() {
        if !split.is_cold_user(u) {
            return Err(DatasetError::Invalid(format!("test user {u} is not cold")));
        }
    }
    for (&i, users) in &split.test_cold_items {
        if !split.is_cold_item(i) || users.iter().any(|&u| split.is_cold_user(u)) {
            return Err(DatasetError::Invalid(format!(
                "test item {i} is not cold or pairs with a cold user"
            )));
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn pairs_csv(rows: &[(u32, u32, Option<i64>)], with_ts: bool) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if with_ts {
        w.write_record(["user_id", "item_id", "timestamp"]).expect("in-memory write");
    } else {
        w.write_record(["user_id", "item_id"]).expect("in-memory write");
    }
    for (u, i, ts) in rows {
        let mut rec = vec![u.to_string(), i.to_string()];
        if with_ts {
            rec.push(ts.unwrap_or(0).to_string());
        }
        w.write_record(&rec).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii digits")
}

/// Parses a `user_id,item_id[,timestamp]` CSV with header into dense pairs.
pub fn parse_pairs_csv(text: &str, schema: &FeatureSchema) -> Result<Vec<Interaction>, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let with_ts = match headers.iter().collect::<Vec<_>>()[..] {
        ["user_id", "item_id"] => false,
        ["user_id", "item_id", "timestamp"] => true,
        _ => {
            return Err(DatasetError::Parse {
                line: 1,
                message: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
            })
        }
    };
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let line = n + 2;
        let rec = rec?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let num = |k: usize, what: &str| -> Result<i64, DatasetError> {
            field(k).parse().map_err(|_| DatasetError::Parse {
                line,
                message: format!("bad {what} `{}`", field(k)),
            })
        };
        let u = u32::try_from(num(0, "user_id")?).map_err(|_| DatasetError::Parse {
            line,
            message: "user_id out of range".into(),
        })?;
        let i = u32::try_from(num(1, "item_id")?).map_err(|_| DatasetError::Parse {
            line,
            message: "item_id out of range".into(),
        })?;
        let timestamp = if with_ts { num(2, "timestamp")? } else { 0 };
        out.push(Interaction {
            user: schema.user_index(u).ok_or(DatasetError::UnknownId { kind: "user", id: u })?,
            item: schema.item_index(i).ok_or(DatasetError::UnknownId { kind: "item", id: i })?,
            timestamp,
        });
    }
    Ok(out)
}
