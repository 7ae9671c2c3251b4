use std::fmt::Write as _;

use super::metrics::{kendall_tau, pairwise_accuracy};
use crate::error::{Error, Result};
use crate::selection::{SelectionOutcome, Strategy};

pub const REPORT_HEADER: &str = "target\tstrategy\tchosen_model\ttest_score\tdelta_en_dev\tregret\tpairwise_acc\ttau";

/// Target label of the per-strategy average rows.
pub const AVERAGE_LABEL: &str = "AVG";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub target: String,
    pub strategy: Strategy,
    pub chosen_model: String,
    pub auxiliary: Option<String>,
    pub test_score: f64,
    /// `test_score` minus the En-Dev pick's test score.
    pub delta_en_dev: Option<f64>,
    /// All-Target pick's test score minus `test_score`.
    pub regret: Option<f64>,
    /// Agreement of the strategy's ranking with the target `dev` ranking.
    pub pairwise_acc: Option<f64>,
    pub tau: Option<f64>,
}

/// Report rows for one target from the outcomes of the strategies that ran.
///
/// `gold_dev` holds the target `dev` score of every candidate, in the same
/// order as each outcome's `ranking_scores`.
pub fn rows_for_target(target: &str, outcomes: &[SelectionOutcome], gold_dev: &[f64]) -> Result<Vec<ReportRow>> {
    let test_of = |s: Strategy| -> Result<Option<f64>> {
        match outcomes.iter().find(|o| o.strategy == s) {
            None => Ok(None),
            Some(o) => o.score_on_target_test.map(Some).ok_or_else(|| Error::MissingPerf {
                model: o.chosen_model.clone(),
                lang: target.to_string(),
                eval_set: "test".into(),
            }),
        }
    };
    let en_dev = test_of(Strategy::EnDev)?;
    let all_target = test_of(Strategy::AllTarget)?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let test = test_of(o.strategy)?.expect("outcome present");
        let predicted: Vec<f64> = o.ranking_scores.iter().map(|(_, s)| *s).collect();
        let (acc, tau) = if predicted.len() == gold_dev.len() && predicted.len() >= 2 {
            (pairwise_accuracy(&predicted, gold_dev)?, Some(kendall_tau(&predicted, gold_dev)?))
        } else {
            (None, None)
        };
        rows.push(ReportRow {
            target: target.to_string(),
            strategy: o.strategy,
            chosen_model: o.chosen_model.clone(),
            auxiliary: o.auxiliary.clone(),
            test_score: test,
            delta_en_dev: en_dev.map(|e| test - e),
            regret: all_target.map(|a| a - test),
            pairwise_acc: acc,
            tau,
        });
    }
    rows.sort_by_key(|r| r.strategy);
    Ok(rows)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// One row per strategy averaging every column over the targets that have it.
pub fn average_rows(rows: &[ReportRow]) -> Vec<ReportRow> {
    Strategy::ALL
        .iter()
        .filter_map(|&s| {
            let of: Vec<&ReportRow> = rows.iter().filter(|r| r.strategy == s).collect();
            if of.is_empty() {
                return None;
            }
            Some(ReportRow {
                target: AVERAGE_LABEL.into(),
                strategy: s,
                chosen_model: "-".into(),
                auxiliary: None,
                test_score: mean(of.iter().map(|r| Some(r.test_score))).expect("nonempty"),
                delta_en_dev: mean(of.iter().map(|r| r.delta_en_dev)),
                regret: mean(of.iter().map(|r| r.regret)),
                pairwise_acc: mean(of.iter().map(|r| r.pairwise_acc)),
                tau: mean(of.iter().map(|r| r.tau)),
            })
        })
        .collect()
}

/// Report numbers are rounded to six decimals, trailing zeros dropped,
/// so `51.6 - 49.7` prints as `1.9`.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_else(|| "NA".into())
}

pub fn format_row(r: &ReportRow) -> String {
    let chosen = match &r.auxiliary {
        Some(p) => format!("{} ({p})", r.chosen_model),
        None => r.chosen_model.clone(),
    };
    format!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.target,
        r.strategy,
        chosen,
        format_number(r.test_score),
        opt(r.delta_en_dev),
        opt(r.regret),
        opt(r.pairwise_acc),
        opt(r.tau)
    )
}

/// A finished evaluation: per-target rows and folds that could not run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SelectionReport {
    pub rows: Vec<ReportRow>,
    /// `(target, strategy or "fold", message)`.
    pub failures: Vec<(String, String, String)>,
}

impl SelectionReport {
    /// Header, rows ordered by target then strategy, the average rows, then
    /// failures as `#` comment lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        let mut rows: Vec<&ReportRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| (&a.target, a.strategy).cmp(&(&b.target, b.strategy)));
        for r in rows {
            out.push_str(&format_row(r));
            out.push('\n');
        }
        for r in average_rows(&self.rows) {
            out.push_str(&format_row(&r));
            out.push('\n');
        }
        for (target, what, msg) in &self.failures {
            let _ = writeln!(out, "# failed\t{target}\t{what}\t{}", msg.replace('\n', " "));
        }
        out
    }
}
