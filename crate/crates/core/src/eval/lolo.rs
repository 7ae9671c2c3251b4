use std::collections::BTreeSet;

use rayon::prelude::*;

use super::report::{rows_for_target, ReportRow, SelectionReport};
use crate::data::{validate, ExperimentConfig, Partition, Tables};
use crate::error::{Error, Result};
use crate::inputs::FeatureResolver;
use crate::ranking::{train, TrainConfig};
use crate::selection::{
    select_en_dev, select_k_target, select_lms, select_pivot_dev, SelectionOutcome, K_TARGET_EVAL_SET,
};

/// Everything one leave-one-language-out fold produced.
#[derive(Clone, Debug)]
pub struct FoldResult {
    pub target: String,
    pub outcomes: Vec<SelectionOutcome>,
    pub rows: Vec<ReportRow>,
    /// Strategies that could not run, with the reason.
    pub skipped: Vec<(String, String)>,
    /// Languages whose gold pairs the fold's scorer was trained on.
    pub trained_languages: BTreeSet<String>,
    pub candidates: Vec<String>,
    /// Target `test` scores of the candidates, for the score histogram.
    pub candidate_test_scores: Vec<f64>,
}

/// Trains on every pool language but `cfg.target_lang` and runs every
/// strategy for the target over the meta-test models.
pub fn evaluate_fold(tables: &Tables, cfg: &ExperimentConfig, tcfg: &TrainConfig) -> Result<FoldResult> {
    cfg.check()?;
    let violations = validate(tables, cfg);
    if !violations.is_empty() {
        let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
        return Err(Error::Invalid(text.join("; ")));
    }
    let target = cfg.target_lang.as_str();
    let candidates = tables.split.models(Partition::Test);
    if candidates.is_empty() {
        return Err(Error::Invalid("the meta-test partition is empty".into()));
    }
    let gold_dev = candidates
        .iter()
        .map(|m| tables.perf.require(m, target, "dev"))
        .collect::<Result<Vec<f64>>>()?;
    let candidate_test_scores = candidates
        .iter()
        .map(|m| tables.perf.require(m, target, "test"))
        .collect::<Result<Vec<f64>>>()?;

    let trained = train(tables, cfg, tcfg)?;
    let resolver = FeatureResolver::new(tables, cfg);
    let perf = &tables.perf;
    let mut outcomes = vec![select_lms(&trained.params, &resolver, &candidates, perf)?];
    let mut skipped = Vec::new();
    let baselines = [
        ("en_dev", select_en_dev(&candidates, perf, &cfg.english_lang_id, target)),
        (
            "pivot_dev",
            select_pivot_dev(
                &candidates,
                perf,
                target,
                &cfg.pivot_langs,
                &tables.langvecs,
                cfg.pivot_override.as_deref(),
            ),
        ),
        ("k_target", select_k_target(&candidates, perf, target, K_TARGET_EVAL_SET)),
    ];
    for (name, res) in baselines {
        match res {
            Ok(o) => outcomes.push(o),
            Err(e) => skipped.push((name.to_string(), e.to_string())),
        }
    }
    outcomes.push(select_k_target(&candidates, perf, target, "dev")?);
    let rows = rows_for_target(target, &outcomes, &gold_dev)?;
    Ok(FoldResult {
        target: target.to_string(),
        outcomes,
        rows,
        skipped,
        trained_languages: trained.languages,
        candidates,
        candidate_test_scores,
    })
}

/// Runs one fold per language of the pool (pivots plus target), each
/// holding that language out. Folds run on `jobs` threads; results are
/// merged in language order, and a failing fold is reported without
/// stopping the others.
pub fn lolo_evaluate(
    tables: &Tables,
    cfg: &ExperimentConfig,
    tcfg: &TrainConfig,
    jobs: usize,
) -> Result<(SelectionReport, Vec<FoldResult>)> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    let targets = cfg.language_pool();
    let results: Vec<Result<FoldResult>> = pool.install(|| {
        targets
            .par_iter()
            .map(|t| evaluate_fold(tables, &cfg.fold(t), tcfg))
            .collect()
    });
    let mut report = SelectionReport::default();
    let mut folds = Vec::new();
    for (t, r) in targets.iter().zip(results) {
        match r {
            Ok(f) => {
                report.rows.extend(f.rows.iter().cloned());
                for (s, msg) in &f.skipped {
                    report.failures.push((t.clone(), s.clone(), msg.clone()));
                }
                folds.push(f);
            }
            Err(e) => report.failures.push((t.clone(), "fold".into(), e.to_string())),
        }
    }
    Ok((report, folds))
}
