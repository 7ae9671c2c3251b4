use std::collections::{BTreeSet, HashMap};

use crate::data::{ExperimentConfig, PerfTable};
use crate::error::{Error, Result};
use crate::inputs::FeatureResolver;
use crate::scorer::{score_many, sigmoid, softplus, ScoredPair, ScorerInput, ScorerParams};

/// `winner` strictly outperforms `loser` on `lang` (for `task`, in task mode).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GoldPair {
    pub winner: String,
    pub loser: String,
    pub lang: String,
    pub task: Option<String>,
}

/// All strictly ordered pairs on the `dev` set; ties give no pair.
pub fn gold_pairs(perf: &PerfTable, langs: &[String], models: &[String]) -> Result<Vec<GoldPair>> {
    gold_pairs_on(perf, langs, models, "dev", None)
}

/// As [`gold_pairs`], reading scores from `eval_set` and tagging pairs with `task`.
///
/// Pairs come out grouped by language in the given order, then by the
/// position of the two models in `models`.
pub fn gold_pairs_on(
    perf: &PerfTable,
    langs: &[String],
    models: &[String],
    eval_set: &str,
    task: Option<&str>,
) -> Result<Vec<GoldPair>> {
    let mut out = Vec::new();
    for lang in langs {
        let scores = models
            .iter()
            .map(|m| perf.require(m, lang, eval_set))
            .collect::<Result<Vec<f64>>>()?;
        for i in 0..models.len() {
            for j in i + 1..models.len() {
                let (w, l) = if scores[i] > scores[j] {
                    (i, j)
                } else if scores[j] > scores[i] {
                    (j, i)
                } else {
                    continue;
                };
                out.push(GoldPair {
                    winner: models[w].clone(),
                    loser: models[l].clone(),
                    lang: lang.clone(),
                    task: task.map(str::to_string),
                });
            }
        }
    }
    Ok(out)
}

/// Eval set holding the rankings of an auxiliary task.
pub fn task_eval_set(task: &str) -> String {
    format!("{task}:dev")
}

/// Training pairs for the experiment: pivot languages only, over `models`.
/// In task mode the main task reads `dev` and each auxiliary task `<task>:dev`.
pub fn training_pairs(perf: &PerfTable, cfg: &ExperimentConfig, models: &[String]) -> Result<Vec<GoldPair>> {
    if !cfg.task_mode {
        return gold_pairs(perf, &cfg.pivot_langs, models);
    }
    let mut out = gold_pairs_on(perf, &cfg.pivot_langs, models, "dev", Some(&cfg.main_task))?;
    for task in &cfg.aux_tasks {
        out.extend(gold_pairs_on(perf, &cfg.pivot_langs, models, &task_eval_set(task), Some(task))?);
    }
    Ok(out)
}

/// Probability that the model scoring `s_i` beats the one scoring `s_j`.
pub fn pair_prob(s_i: f64, s_j: f64) -> f64 {
    sigmoid(s_i - s_j)
}

/// Gold pairs resolved to scorer inputs. Each distinct (model, language,
/// task) input is stored once and pairs refer to it by index.
#[derive(Clone, Debug)]
pub struct TrainingSet<'a> {
    inputs: Vec<ScorerInput<'a>>,
    pairs: Vec<(usize, usize)>,
    languages: BTreeSet<String>,
}

impl<'a> TrainingSet<'a> {
    pub fn build(gold: &'a [GoldPair], resolver: &FeatureResolver<'a>) -> Result<Self> {
        let mut index: HashMap<(&'a str, &'a str, Option<&'a str>), usize> = HashMap::new();
        let mut inputs = Vec::new();
        let mut slot = |model: &'a str, lang: &'a str, task: Option<&'a str>| -> Result<usize> {
            if let Some(&i) = index.get(&(model, lang, task)) {
                return Ok(i);
            }
            inputs.push(resolver.train_input(model, lang, task)?);
            index.insert((model, lang, task), inputs.len() - 1);
            Ok(inputs.len() - 1)
        };
        let mut pairs = Vec::with_capacity(gold.len());
        for p in gold {
            let task = p.task.as_deref();
            let w = slot(&p.winner, &p.lang, task)?;
            let l = slot(&p.loser, &p.lang, task)?;
            pairs.push((w, l));
        }
        Ok(Self {
            inputs,
            pairs,
            languages: gold.iter().map(|p| p.lang.clone()).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Languages contributing at least one pair.
    pub fn languages(&self) -> &BTreeSet<String> {
        &self.languages
    }

    pub fn scored_pairs(&self, which: &[usize]) -> Vec<ScoredPair<'a>> {
        which
            .iter()
            .map(|&i| {
                let (w, l) = self.pairs[i];
                ScoredPair {
                    winner: self.inputs[w],
                    loser: self.inputs[l],
                }
            })
            .collect()
    }

    /// Summed loss over every pair.
    pub fn total_loss(&self, params: &ScorerParams) -> Result<f64> {
        let scores = score_many(params, &self.inputs)?;
        Ok(self.pairs.iter().map(|&(w, l)| softplus(scores[l] - scores[w])).sum())
    }
}

/// Summed pairwise loss of `params` over the gold pairs.
pub fn pairwise_loss(params: &ScorerParams, gold: &[GoldPair], resolver: &FeatureResolver<'_>) -> Result<f64> {
    TrainingSet::build(gold, resolver)?.total_loss(params)
}

/// Language set of a pair list, for checking which languages a run saw.
pub fn pair_languages(gold: &[GoldPair]) -> BTreeSet<String> {
    gold.iter().map(|p| p.lang.clone()).collect()
}

pub(crate) fn no_signal_if_empty(gold: &[GoldPair]) -> Result<()> {
    if gold.is_empty() {
        Err(Error::NoTrainingSignal)
    } else {
        Ok(())
    }
}
