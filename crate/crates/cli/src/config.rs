//! Run configuration: defaults, then a JSON file, then `dotted.key=value`
//! overrides, validated before any work starts.

use std::path::PathBuf;

use coldrec::dataset::PrepareOptions;
use coldrec::evaluation::EvalConfig;
use coldrec::training::TrainConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Directory holding `ratings.dat`, `users.dat` and `movies.dat`.
    pub data_dir: Option<PathBuf>,
    /// A prepared split written by `prepare`.
    pub split_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub log_level: String,
    /// Also write per-entity metric rows.
    pub detail_csv: bool,
    pub prepare: PrepareOptions,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            split_dir: None,
            out_dir: None,
            log_level: "info".into(),
            detail_csv: false,
            prepare: PrepareOptions::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

impl RunConfig {
    /// Seed behind the cold split.
    pub fn data_seed(&self) -> u64 {
        self.prepare.seed
    }

    /// Seed behind initialization, sampling and the validation carve.
    pub fn train_seed(&self) -> u64 {
        self.train.seed
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.prepare;
        for (name, f) in [("prepare.user_frac", p.user_frac), ("prepare.item_frac", p.item_frac)] {
            if !(0.0..1.0).contains(&f) {
                return Err(CliError::Config(format!("{name} must be in [0, 1), got {f}")));
            }
        }
        if !(1..=5).contains(&p.threshold) {
            return Err(CliError::Config(format!(
                "prepare.threshold must be in 1..=5, got {}",
                p.threshold
            )));
        }
        self.train.validate().map_err(|e| CliError::Config(format!("train: {e}")))?;
        self.eval.validate().map_err(|e| CliError::Config(format!("eval: {e}")))?;
        Ok(())
    }

    pub fn require_split_dir(&self) -> Result<&PathBuf, CliError> {
        self.split_dir
            .as_ref()
            .ok_or_else(|| CliError::Config("split_dir is not set (use --split)".into()))
    }

    pub fn require_out_dir(&self) -> Result<&PathBuf, CliError> {
        self.out_dir
            .as_ref()
            .ok_or_else(|| CliError::Config("out_dir is not set (use --out)".into()))
    }
}

/// One `dotted.key=value` assignment. The value is read as JSON when it
/// parses, otherwise as a bare string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let (key, raw) = text
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{text}` is not key=value")))?;
        let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::Config(format!("override `{text}` has an empty key segment")));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Self { path, value })
    }

    pub fn new(key: &str, value: impl Into<Value>) -> Self {
        Self {
            path: key.split('.').map(str::to_string).collect(),
            value: value.into(),
        }
    }

    fn key(&self) -> String {
        self.path.join(".")
    }
}

fn unknown_keys(given: &Map<String, Value>, known: &Map<String, Value>, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in given {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (known.get(k), v) {
            (None, _) => out.push(path),
            (Some(Value::Object(kn)), Value::Object(g)) => unknown_keys(g, kn, &path, out),
            _ => {}
        }
    }
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn lookup_mut<'a>(root: &'a mut Value, path: &[String]) -> Option<&'a mut Value> {
    path.iter().try_fold(root, |node, seg| node.as_object_mut()?.get_mut(seg))
}

/// Layers `config_json` and `overrides` over the defaults. Every unknown key
/// is reported at once.
pub fn resolve(config_json: Option<&str>, overrides: &[Override]) -> Result<RunConfig, CliError> {
    let mut tree = serde_json::to_value(RunConfig::default()).expect("defaults serialize");
    let known = tree.as_object().expect("object").clone();
    let mut bad = Vec::new();

    if let Some(text) = config_json {
        let given: Value =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))?;
        let Value::Object(obj) = &given else {
            return Err(CliError::Config("config file must hold a JSON object".into()));
        };
        unknown_keys(obj, &known, "", &mut bad);
        if bad.is_empty() {
            merge(&mut tree, given);
        }
    }
    let defaults = Value::Object(known);
    for o in overrides {
        let mut probe = defaults.clone();
        if lookup_mut(&mut probe, &o.path).is_none() {
            bad.push(o.key());
        }
    }
    if !bad.is_empty() {
        return Err(CliError::Config(format!("unknown keys: {}", bad.join(", "))));
    }
    for o in overrides {
        *lookup_mut(&mut tree, &o.path).expect("checked above") = o.value.clone();
    }
    let config: RunConfig =
        serde_json::from_value(tree).map_err(|e| CliError::Config(format!("invalid value: {e}")))?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(s: &str) -> Override {
        Override::parse(s).unwrap()
    }

    #[test]
    fn defaults_round_trip() {
        assert_eq!(resolve(None, &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn override_beats_file_beats_default() {
        let file = r#"{"train": {"learning_rate": 0.01, "epochs": 3}}"#;
        let c = resolve(Some(file), &[ov("train.learning_rate=0.05")]).unwrap();
        assert_eq!(c.train.learning_rate, 0.05);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.batch_size, TrainConfig::default().batch_size);
    }

    #[test]
    fn nested_and_string_overrides() {
        let c = resolve(
            None,
            &[ov("train.model.ablation.contrastive=false"), ov("out_dir=/tmp/run"), ov("log_level=debug")],
        )
        .unwrap();
        assert!(!c.train.model.ablation.contrastive);
        assert_eq!(c.out_dir, Some(PathBuf::from("/tmp/run")));
        assert_eq!(c.log_level, "debug");
    }

    #[test]
    fn every_unknown_key_is_listed() {
        let file = r#"{"trian": {}, "train": {"lerning_rate": 1, "model": {"dim": 3}}}"#;
        let err = resolve(Some(file), &[ov("eval.kk=3")]).unwrap_err().to_string();
        for key in ["trian", "train.lerning_rate", "train.model.dim", "eval.kk"] {
            assert!(err.contains(key), "{err} misses {key}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        for bad in ["train.learning_rate=-1", "train.epochs=\"ten\"", "prepare.user_frac=1.5", "eval.k=0"] {
            let err = resolve(None, &[ov(bad)]).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}: {err}");
        }
    }

    #[test]
    fn malformed_override_rejected() {
        assert!(Override::parse("no_equals").is_err());
        assert!(Override::parse("a..b=1").is_err());
        assert_eq!(ov("a.b=[1,2]").value, serde_json::json!([1, 2]));
    }
}
