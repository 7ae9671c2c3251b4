//! Choosing one model for a target language: the learned scorer and the
//! dev-set baselines and oracles it is compared against.
//!
//! Every strategy takes the maximum; ties go to the lexicographically
//! smallest model id (smallest language id for pivots).

use std::fmt;
use std::str::FromStr;

use crate::data::{EmbeddingKind, LangEmbeddingTable, PerfTable};
use crate::error::{Error, Result};
use crate::inputs::FeatureResolver;
use crate::scorer::{score_many, ScorerParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    Lms,
    EnDev,
    PivotDev,
    KTarget,
    AllTarget,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Lms,
        Strategy::EnDev,
        Strategy::PivotDev,
        Strategy::KTarget,
        Strategy::AllTarget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Lms => "lms",
            Strategy::EnDev => "en_dev",
            Strategy::PivotDev => "pivot_dev",
            Strategy::KTarget => "k_target",
            Strategy::AllTarget => "all_target",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

/// Eval set behind the k-Target oracle (a 100-instance target subsample).
pub const K_TARGET_EVAL_SET: &str = "dev100";

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionOutcome {
    pub strategy: Strategy,
    pub chosen_model: String,
    /// Pivot language consulted by Pivot-Dev.
    pub auxiliary: Option<String>,
    /// Target `test` score of the chosen model, when the table has it.
    pub score_on_target_test: Option<f64>,
    /// The per-candidate values the strategy maximized, in candidate order.
    pub ranking_scores: Vec<(String, f64)>,
}

/// Highest value wins; equal values go to the smaller id. `None` when empty.
pub fn argmax<'a, S: AsRef<str> + 'a>(items: impl IntoIterator<Item = (S, f64)>) -> Option<(String, f64)> {
    let mut best: Option<(S, f64)> = None;
    for (id, v) in items {
        let replace = match &best {
            None => true,
            Some((bid, bv)) => v > *bv || (v == *bv && id.as_ref() < bid.as_ref()),
        };
        if replace {
            best = Some((id, v));
        }
    }
    best.map(|(id, v)| (id.as_ref().to_string(), v))
}

fn finish(
    strategy: Strategy,
    scores: Vec<(String, f64)>,
    auxiliary: Option<String>,
    perf: &PerfTable,
    target: &str,
) -> Result<SelectionOutcome> {
    let (chosen, _) = argmax(scores.iter().map(|(m, s)| (m.as_str(), *s)))
        .ok_or_else(|| Error::Invalid("no candidate models".into()))?;
    Ok(SelectionOutcome {
        strategy,
        score_on_target_test: perf.get(&chosen, target, "test"),
        chosen_model: chosen,
        auxiliary,
        ranking_scores: scores,
    })
}

fn table_scores(candidates: &[String], perf: &PerfTable, lang: &str, eval_set: &str) -> Result<Vec<(String, f64)>> {
    candidates
        .iter()
        .map(|m| Ok((m.clone(), perf.require(m, lang, eval_set)?)))
        .collect()
}

/// Learned scores `s(m, target)` for every candidate.
pub fn lms_scores(params: &ScorerParams, resolver: &FeatureResolver<'_>, candidates: &[String]) -> Result<Vec<(String, f64)>> {
    let inputs = candidates
        .iter()
        .map(|m| resolver.select_input(m))
        .collect::<Result<Vec<_>>>()?;
    let scores = score_many(params, &inputs)?;
    Ok(candidates.iter().cloned().zip(scores).collect())
}

pub fn select_lms(
    params: &ScorerParams,
    resolver: &FeatureResolver<'_>,
    candidates: &[String],
    perf: &PerfTable,
) -> Result<SelectionOutcome> {
    let scores = lms_scores(params, resolver, candidates)?;
    finish(Strategy::Lms, scores, None, perf, &resolver.config().target_lang)
}

pub fn select_en_dev(candidates: &[String], perf: &PerfTable, english: &str, target: &str) -> Result<SelectionOutcome> {
    let scores = table_scores(candidates, perf, english, "dev")?;
    finish(Strategy::EnDev, scores, None, perf, target)
}

fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

/// Pivot whose typological vector is most cosine-similar to the target's.
pub fn nearest_pivot(target: &str, pivots: &[String], langvecs: &LangEmbeddingTable) -> Result<String> {
    let kind = EmbeddingKind::Typological;
    let t = langvecs.require(target, kind)?;
    let mut sims = Vec::with_capacity(pivots.len());
    for p in pivots {
        let v = langvecs.require(p, kind)?;
        if v.len() != t.len() {
            return Err(Error::contract(format!("typological vectors of `{p}` and `{target}` differ in length")));
        }
        let c = cosine(t, v).ok_or_else(|| {
            Error::Invalid(format!("cosine similarity undefined: zero-norm vector for `{target}` or `{p}`"))
        })?;
        sims.push((p.as_str(), c));
    }
    argmax(sims)
        .map(|(p, _)| p)
        .ok_or_else(|| Error::Invalid("no pivot languages".into()))
}

/// Dev-set argmax on the nearest pivot, or on `pivot_override` when given.
pub fn select_pivot_dev(
    candidates: &[String],
    perf: &PerfTable,
    target: &str,
    pivots: &[String],
    langvecs: &LangEmbeddingTable,
    pivot_override: Option<&str>,
) -> Result<SelectionOutcome> {
    let pivot = match pivot_override {
        Some(p) => p.to_string(),
        None => nearest_pivot(target, pivots, langvecs)?,
    };
    let scores = table_scores(candidates, perf, &pivot, "dev")?;
    finish(Strategy::PivotDev, scores, Some(pivot), perf, target)
}

/// Target argmax on a named eval set: `dev100` for k-Target, `dev` for All-Target.
pub fn select_k_target(candidates: &[String], perf: &PerfTable, target: &str, eval_set: &str) -> Result<SelectionOutcome> {
    let strategy = if eval_set == "dev" {
        Strategy::AllTarget
    } else {
        Strategy::KTarget
    };
    let scores = table_scores(candidates, perf, target, eval_set)?;
    finish(strategy, scores, None, perf, target)
}
