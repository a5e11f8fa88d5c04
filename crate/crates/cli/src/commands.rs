use std::path::{Path, PathBuf};

use coldrec::dataset::{
    load_movielens_dir, prepare, synthetic_dataset, PreparedDataset, FEATURES_FILE, SCHEMA_FILE,
    SPLIT_FILE, STATS_FILE, TEST_ITEMS_FILE, TEST_USERS_FILE, TRAIN_FILE,
};
use coldrec::evaluation::{
    ablation_csv, ablation_suite, evaluate, lr_sweep, report_csv, sweep_csv, sweep_detail_csv,
    EvalSummary, ABLATION_ROWS, SWEEP_LRS,
};
use coldrec::model::{Ablation, ModelParams};
use coldrec::training::{
    history_csv, load_checkpoint, save_checkpoint, train, CheckpointManifest, TrainConfig,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{RunRecord, Seeds};

pub const RAW_FILES: [&str; 3] = ["ratings.dat", "users.dat", "movies.dat"];
pub const CHECKPOINT_DIR: &str = "checkpoint";
pub const METRICS_FILE: &str = "metrics.csv";
pub const DETAIL_FILE: &str = "detail.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const ABLATION_FILE: &str = "ablation.csv";
pub const ABLATION_REPORT_FILE: &str = "ablation_report.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_DETAIL_FILE: &str = "sweep_detail.csv";

fn seeds(config: &RunConfig) -> Seeds {
    Seeds {
        data_seed: Some(config.data_seed()),
        train_seed: Some(config.train_seed()),
        eval_seed: Some(config.eval.seed),
    }
}

fn snapshot(config: &RunConfig) -> serde_json::Value {
    serde_json::to_value(config).expect("config serializes")
}

/// Refuses to write outputs into an input directory.
fn distinct_dirs(out: &Path, input: &Path) -> Result<(), CliError> {
    let canon = |p: &Path| p.canonicalize().unwrap_or_else(|_| p.to_path_buf());
    if canon(out) == canon(input) {
        return Err(CliError::Config(format!(
            "output directory {} is also an input directory",
            out.display()
        )));
    }
    Ok(())
}

fn prepared_inputs(run: &mut RunRecord, dir: &Path) {
    for name in [SCHEMA_FILE, SPLIT_FILE, FEATURES_FILE, TRAIN_FILE, TEST_USERS_FILE, TEST_ITEMS_FILE, STATS_FILE] {
        let p = dir.join(name);
        if p.exists() {
            run.input(p);
        }
    }
}

fn load_split(run: &mut RunRecord, dir: &Path) -> Result<PreparedDataset, CliError> {
    distinct_dirs(run.out_dir(), dir)?;
    let data = PreparedDataset::load(dir)?;
    prepared_inputs(run, dir);
    log::info!(
        "loaded split {}: {} users, {} items, schema {}",
        dir.display(),
        data.n_users(),
        data.n_items(),
        &data.schema_hash[..12.min(data.schema_hash.len())]
    );
    Ok(data)
}

/// Name used for a model in metric CSVs.
pub fn model_label(ablation: &Ablation) -> &'static str {
    if *ablation == Ablation::FULL {
        return "full";
    }
    if *ablation == Ablation::MATRIX_FACTORIZATION {
        return "mf";
    }
    let off = [
        !ablation.adaptive_selection,
        !ablation.multimodal_fusion,
        !ablation.contrastive,
    ];
    match (off, ablation.gcn) {
        ([true, false, false], true) => ABLATION_ROWS[1],
        ([false, true, false], true) => ABLATION_ROWS[2],
        ([false, false, true], true) => ABLATION_ROWS[3],
        _ => "custom",
    }
}

fn detail_csv(summary: &EvalSummary) -> String {
    let mut out = String::new();
    for (i, r) in summary.cohorts().into_iter().enumerate() {
        let csv = r.detail_csv();
        let body = if i == 0 { &csv[..] } else { csv.split_once('\n').map_or("", |(_, b)| b) };
        out.push_str(body);
    }
    out
}

fn write_metrics(
    run: &mut RunRecord,
    label: &str,
    summary: &EvalSummary,
    detail: bool,
) -> Result<(), CliError> {
    run.write(METRICS_FILE, report_csv(&[(label, summary)]))?;
    if detail {
        run.write(DETAIL_FILE, detail_csv(summary))?;
    }
    print!("{summary}");
    let c = summary.combined_cold();
    println!(
        "{:<10} HR {:.4}  NDCG {:.4}  MRR {:.4}  Recall {:.4}  (n={})",
        "cold", c.hr, c.ndcg, c.mrr, c.recall, c.n_evaluated
    );
    Ok(())
}

pub fn cmd_prepare(config: &RunConfig) -> Result<PathBuf, CliError> {
    let data_dir = config
        .data_dir
        .as_ref()
        .ok_or_else(|| CliError::Config("data_dir is not set (use --data-dir)".into()))?;
    let out = config.require_out_dir()?;
    distinct_dirs(out, data_dir)?;
    let raw = load_movielens_dir(data_dir)?;
    let (data, stats) = prepare(&raw, &config.prepare)?;
    let mut run = RunRecord::start("prepare", out)?;
    for name in RAW_FILES {
        run.input(data_dir.join(name));
    }
    let written = data.write(out, Some(&stats))?;
    run.artifacts(written);
    println!("{stats}");
    run.finish(seeds(config), snapshot(config))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SynthArgs {
    pub seed: u64,
    pub users: usize,
    pub items: usize,
    pub topics: usize,
}

pub fn cmd_synth(args: &SynthArgs, out: &Path) -> Result<PathBuf, CliError> {
    if args.users == 0 || args.items == 0 || args.topics == 0 {
        return Err(CliError::Config("users, items and topics must be >= 1".into()));
    }
    let mut run = RunRecord::start("synth", out)?;
    synthetic_dataset(args.seed, args.users, args.items, args.topics)
        .write_dat(out)
        .map_err(|e| crate::error::io_error(out, e))?;
    run.artifacts(RAW_FILES.iter().map(|n| out.join(n)));
    log::info!("wrote synthetic dataset to {}", out.display());
    let seeds = Seeds { data_seed: Some(args.seed), train_seed: None, eval_seed: None };
    run.finish(seeds, json!(args))
}

pub fn cmd_train(config: &RunConfig) -> Result<PathBuf, CliError> {
    let split = config.require_split_dir()?;
    let mut run = RunRecord::start("train", config.require_out_dir()?)?;
    let data = load_split(&mut run, split)?;
    let outcome = train(&data, &config.train)?;
    let manifest = CheckpointManifest::new(
        config.train,
        data.schema_hash.clone(),
        outcome.history.clone(),
        outcome.best_epoch,
    );
    let ckpt = run.out_dir().join(CHECKPOINT_DIR);
    run.artifacts(save_checkpoint(&ckpt, &outcome.params.set, &manifest)?);
    run.write(HISTORY_FILE, history_csv(&outcome.history))?;
    let summary = evaluate(&data, &outcome.params, &config.train, &config.eval)?;
    write_metrics(&mut run, model_label(&config.train.model.ablation), &summary, config.detail_csv)?;
    run.finish(seeds(config), snapshot(config))
}

/// Evaluates a saved checkpoint under the training settings it was saved with.
pub fn cmd_evaluate(config: &RunConfig, checkpoint: &Path) -> Result<PathBuf, CliError> {
    let split = config.require_split_dir()?;
    let mut run = RunRecord::start("evaluate", config.require_out_dir()?)?;
    distinct_dirs(run.out_dir(), checkpoint)?;
    let data = load_split(&mut run, split)?;
    let (set, manifest) = load_checkpoint(checkpoint)?;
    manifest.require_schema(&data.schema_hash)?;
    for name in [coldrec::training::MANIFEST_FILE, coldrec::training::TENSORS_FILE] {
        run.input(checkpoint.join(name));
    }
    let train_config: TrainConfig = manifest.train_config;
    let params = ModelParams::from_set(set, &data.schema);
    params
        .check(&data.schema, &train_config.model)
        .map_err(|e| CliError::Integrity(e.to_string()))?;
    let summary = evaluate(&data, &params, &train_config, &config.eval)?;
    write_metrics(&mut run, model_label(&train_config.model.ablation), &summary, config.detail_csv)?;
    let mut snap = snapshot(config);
    snap["train"] = serde_json::to_value(train_config).expect("config serializes");
    let seeds = Seeds {
        data_seed: Some(config.data_seed()),
        train_seed: Some(train_config.seed),
        eval_seed: Some(config.eval.seed),
    };
    run.finish(seeds, snap)
}

pub fn cmd_ablate(config: &RunConfig) -> Result<PathBuf, CliError> {
    let split = config.require_split_dir()?;
    let mut run = RunRecord::start("ablate", config.require_out_dir()?)?;
    let data = load_split(&mut run, split)?;
    let rows = ablation_suite(&data, &config.train, &config.eval)?;
    run.write(ABLATION_FILE, ablation_csv(&rows))?;
    let report: Vec<(&str, &EvalSummary)> = rows.iter().map(|r| (r.name, &r.result.summary)).collect();
    run.write(ABLATION_REPORT_FILE, report_csv(&report))?;
    for r in &rows {
        let c = r.result.summary.combined_cold();
        println!(
            "{:<22} HR {:.4}  NDCG {:.4}  MRR {:.4}  Recall {:.4}",
            r.name, c.hr, c.ndcg, c.mrr, c.recall
        );
    }
    run.finish(seeds(config), snapshot(config))
}

pub fn cmd_sweep(config: &RunConfig) -> Result<PathBuf, CliError> {
    let split = config.require_split_dir()?;
    let mut run = RunRecord::start("sweep", config.require_out_dir()?)?;
    let data = load_split(&mut run, split)?;
    let rows = lr_sweep(&data, &config.train, &config.eval, &SWEEP_LRS)?;
    run.write(SWEEP_FILE, sweep_csv(&rows))?;
    run.write(SWEEP_DETAIL_FILE, sweep_detail_csv(&rows))?;
    for r in &rows {
        match (&r.summary, r.final_train_loss) {
            (Some(s), Some(loss)) => {
                let c = s.combined_cold();
                println!("lr {:<6} loss {loss:.4}  HR {:.4}  NDCG {:.4}", r.lr, c.hr, c.ndcg);
            }
            _ => println!("lr {:<6} diverged", r.lr),
        }
    }
    run.finish(seeds(config), snapshot(config))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_ablation_rows() {
        let mut a = Ablation::FULL;
        assert_eq!(model_label(&a), "full");
        a.contrastive = false;
        assert_eq!(model_label(&a), "no_contrastive");
        a.gcn = false;
        assert_eq!(model_label(&a), "custom");
        assert_eq!(model_label(&Ablation::MATRIX_FACTORIZATION), "mf");
    }

    #[test]
    fn same_dir_refused() {
        let dir = tempfile::tempdir().unwrap();
        assert!(distinct_dirs(dir.path(), dir.path()).is_err());
        assert!(distinct_dirs(&dir.path().join("out"), dir.path()).is_ok());
    }
}
