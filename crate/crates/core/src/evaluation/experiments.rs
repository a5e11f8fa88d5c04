use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::PreparedDataset;
use crate::model::Ablation;
use crate::training::{train, TrainConfig, TrainError, TrainOutcome};

use super::{evaluate, EvalConfig, EvalReport, EvalSummary};

/// Learning rates of the sensitivity sweep, in reporting order.
pub const SWEEP_LRS: [f64; 5] = [0.001, 0.005, 0.01, 0.05, 0.1];

/// Ablation rows in reporting order: name and the switch turned off.
pub const ABLATION_ROWS: [&str; 4] = [
    "full",
    "no_adaptive_selection",
    "no_multimodal_fusion",
    "no_contrastive",
];

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: TrainOutcome,
    pub summary: EvalSummary,
}

pub fn train_and_evaluate(
    data: &PreparedDataset,
    config: &TrainConfig,
    eval: &EvalConfig,
) -> Result<RunResult, TrainError> {
    eval.validate()?;
    let outcome = train(data, config)?;
    let summary = evaluate(data, &outcome.params, config, eval)?;
    Ok(RunResult { outcome, summary })
}

/// The same loop with every attribute, graph and contrastive switch off:
/// id embeddings scored by dot product under cross-entropy.
pub fn mf_baseline(
    data: &PreparedDataset,
    config: &TrainConfig,
    eval: &EvalConfig,
) -> Result<RunResult, TrainError> {
    let mut mf = *config;
    mf.model.ablation = Ablation::MATRIX_FACTORIZATION;
    train_and_evaluate(data, &mf, eval)
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub name: &'static str,
    pub config: TrainConfig,
    pub result: RunResult,
}

fn ablated(base: &TrainConfig, name: &str) -> TrainConfig {
    let mut c = *base;
    let a = &mut c.model.ablation;
    match name {
        "no_adaptive_selection" => a.adaptive_selection = false,
        "no_multimodal_fusion" => a.multimodal_fusion = false,
        "no_contrastive" => a.contrastive = false,
        _ => {}
    }
    c
}

/// Trains and evaluates the full model and each single-switch ablation with
/// the seeds of `base`.
pub fn ablation_suite(
    data: &PreparedDataset,
    base: &TrainConfig,
    eval: &EvalConfig,
) -> Result<Vec<AblationRow>, TrainError> {
    ABLATION_ROWS
        .par_iter()
        .map(|&name| {
            let config = ablated(base, name);
            log::info!("ablation `{name}`");
            train_and_evaluate(data, &config, eval).map(|result| AblationRow {
                name,
                config,
                result,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lr: f64,
    pub diverged: bool,
    /// Mean loss of the last completed epoch; `None` when diverged.
    pub final_train_loss: Option<f64>,
    pub summary: Option<EvalSummary>,
}

/// One independent train and evaluate per learning rate. A run whose loss
/// or gradients go non-finite is kept as a diverged row.
pub fn lr_sweep(
    data: &PreparedDataset,
    base: &TrainConfig,
    eval: &EvalConfig,
    lrs: &[f64],
) -> Result<Vec<SweepRow>, TrainError> {
    lrs.par_iter()
        .map(|&lr| {
            let mut config = *base;
            config.learning_rate = lr;
            log::info!("sweep lr={lr}");
            match train_and_evaluate(data, &config, eval) {
                Ok(r) => Ok(SweepRow {
                    lr,
                    diverged: false,
                    final_train_loss: r.outcome.final_train_loss(),
                    summary: Some(r.summary),
                }),
                Err(e) if e.is_divergence() => {
                    log::warn!("lr={lr} diverged: {e}");
                    Ok(SweepRow {
                        lr,
                        diverged: true,
                        final_train_loss: None,
                        summary: None,
                    })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn report_line(out: &mut String, model: &str, r: &EvalReport) {
    out.push_str(&format!(
        "{},{},{},{},{},{},{}\n",
        r.cohort, model, r.hr, r.ndcg, r.mrr, r.recall, r.n_evaluated
    ));
}

/// `cohort,model,hr,ndcg,mrr,recall,n_evaluated`, one row per model and cohort.
pub fn report_csv(rows: &[(&str, &EvalSummary)]) -> String {
    let mut out = String::from("cohort,model,hr,ndcg,mrr,recall,n_evaluated\n");
    for (model, summary) in rows {
        for r in summary.cohorts() {
            report_line(&mut out, model, r);
        }
        let c = summary.combined_cold();
        out.push_str(&format!(
            "cold_combined,{},{},{},{},{},{}\n",
            model, c.hr, c.ndcg, c.mrr, c.recall, c.n_evaluated
        ));
    }
    out
}

/// `model,hr,ndcg,mrr,recall,n_evaluated` on the pooled cold cohorts, one row
/// per ablation.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("model,hr,ndcg,mrr,recall,n_evaluated\n");
    for row in rows {
        let c = row.result.summary.combined_cold();
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.name, c.hr, c.ndcg, c.mrr, c.recall, c.n_evaluated
        ));
    }
    out
}

/// `lr,hr,ndcg,mrr,recall` on the pooled cold cohorts; NaN for diverged runs.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("lr,hr,ndcg,mrr,recall\n");
    for row in rows {
        let (hr, ndcg, mrr, recall) = match &row.summary {
            Some(s) => {
                let c = s.combined_cold();
                (c.hr, c.ndcg, c.mrr, c.recall)
            }
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        out.push_str(&format!("{},{hr},{ndcg},{mrr},{recall}\n", row.lr));
    }
    out
}

/// Per-cohort sweep metrics plus divergence flag and final training loss.
pub fn sweep_detail_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "lr,diverged,final_train_loss,cohort,hr,ndcg,mrr,recall,n_evaluated\n",
    );
    for row in rows {
        let loss = row.final_train_loss.unwrap_or(f64::NAN);
        match &row.summary {
            Some(s) => {
                for r in s.cohorts() {
                    out.push_str(&format!(
                        "{},{},{loss},{},{},{},{},{},{}\n",
                        row.lr, row.diverged, r.cohort, r.hr, r.ndcg, r.mrr, r.recall, r.n_evaluated
                    ));
                }
            }
            None => out.push_str(&format!("{},{},{loss},,NaN,NaN,NaN,NaN,0\n", row.lr, row.diverged)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_configs_flip_one_switch() {
        let base = TrainConfig::default();
        let flags = |c: TrainConfig| {
            let a = c.model.ablation;
            [a.adaptive_selection, a.multimodal_fusion, a.contrastive, a.gcn]
        };
        assert_eq!(flags(ablated(&base, "full")), [true; 4]);
        assert_eq!(flags(ablated(&base, "no_adaptive_selection")), [false, true, true, true]);
        assert_eq!(flags(ablated(&base, "no_multimodal_fusion")), [true, false, true, true]);
        assert_eq!(flags(ablated(&base, "no_contrastive")), [true, true, false, true]);
    }

    #[test]
    fn diverged_sweep_row_is_nan() {
        let rows = vec![SweepRow {
            lr: 0.1,
            diverged: true,
            final_train_loss: None,
            summary: None,
        }];
        assert_eq!(sweep_csv(&rows), "lr,hr,ndcg,mrr,recall\n0.1,NaN,NaN,NaN,NaN\n");
    }
}
