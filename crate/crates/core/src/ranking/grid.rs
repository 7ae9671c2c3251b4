use rayon::prelude::*;

use super::gold::training_pairs;
use super::train::{train_on_pairs, TrainConfig, TrainOutcome};
use crate::data::{ExperimentConfig, Partition, Tables};
use crate::error::{Error, Result};
use crate::inputs::FeatureResolver;
use crate::scorer::{score_many, ScorerParams};
use crate::selection::argmax;

#[derive(Clone, Debug)]
pub struct GridPoint {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub criterion: f64,
}

#[derive(Clone, Debug)]
pub struct GridResult {
    pub best: TrainConfig,
    pub outcome: TrainOutcome,
    /// Every point in grid order.
    pub points: Vec<GridPoint>,
}

/// Average over training languages `l` of the `dev` score on `l` of the
/// meta-dev model the scorer ranks first for `l`.
pub fn meta_dev_criterion(params: &ScorerParams, tables: &Tables, cfg: &ExperimentConfig) -> Result<f64> {
    let models = tables.split.models(Partition::Dev);
    if models.is_empty() {
        return Err(Error::Invalid("the meta-dev partition is empty".into()));
    }
    if cfg.pivot_langs.is_empty() {
        return Err(Error::Invalid("no training languages".into()));
    }
    let resolver = FeatureResolver::new(tables, cfg);
    let task = cfg.task_mode.then_some(cfg.main_task.as_str());
    let mut total = 0.0;
    for lang in &cfg.pivot_langs {
        let inputs = models
            .iter()
            .map(|m| resolver.train_input(m, lang, task))
            .collect::<Result<Vec<_>>>()?;
        let scores = score_many(params, &inputs)?;
        let (chosen, _) = argmax(models.iter().map(String::as_str).zip(scores)).expect("nonempty");
        total += tables.perf.require(&chosen, lang, "dev")?;
    }
    Ok(total / cfg.pivot_langs.len() as f64)
}

/// Trains one scorer per (learning rate, batch size) on the meta-train
/// models and keeps the one with the best meta-dev criterion. Ties go to the
/// lower learning rate, then the smaller batch.
pub fn grid_search(
    tables: &Tables,
    cfg: &ExperimentConfig,
    base: &TrainConfig,
    learning_rates: &[f64],
    batch_sizes: &[usize],
) -> Result<GridResult> {
    if learning_rates.is_empty() || batch_sizes.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    if tables.split.models(Partition::Dev).is_empty() {
        return Err(Error::Invalid("the meta-dev partition is empty".into()));
    }
    let gold = training_pairs(&tables.perf, cfg, &tables.split.models(Partition::Train))?;
    let resolver = FeatureResolver::new(tables, cfg);
    let configs: Vec<TrainConfig> = learning_rates
        .iter()
        .flat_map(|&lr| {
            batch_sizes.iter().map(move |&b| TrainConfig {
                learning_rate: lr,
                batch_size: b,
                ..base.clone()
            })
        })
        .collect();
    let results = configs
        .par_iter()
        .map(|tc| {
            let outcome = train_on_pairs(&resolver, &gold, tc)?;
            let crit = meta_dev_criterion(&outcome.params, tables, cfg)?;
            Ok((outcome, crit))
        })
        .collect::<Result<Vec<_>>>()?;

    let points: Vec<GridPoint> = configs
        .iter()
        .zip(&results)
        .map(|(tc, (_, c))| GridPoint {
            learning_rate: tc.learning_rate,
            batch_size: tc.batch_size,
            criterion: *c,
        })
        .collect();
    let best = pick_best(&points);
    let (outcome, _) = results.into_iter().nth(best).expect("index in range");
    Ok(GridResult {
        best: configs[best].clone(),
        outcome,
        points,
    })
}

/// Index of the winning point under the criterion and tie rule.
pub fn pick_best(points: &[GridPoint]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let b = &points[best];
        let better = p.criterion > b.criterion
            || (p.criterion == b.criterion
                && (p.learning_rate < b.learning_rate
                    || (p.learning_rate == b.learning_rate && p.batch_size < b.batch_size)));
        if better {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lr: f64, b: usize, c: f64) -> GridPoint {
        GridPoint {
            learning_rate: lr,
            batch_size: b,
            criterion: c,
        }
    }

    #[test]
    fn higher_criterion_wins() {
        assert_eq!(pick_best(&[pt(1e-4, 16, 1.0), pt(1e-5, 16, 2.0)]), 1);
        assert_eq!(pick_best(&[pt(1e-4, 16, 3.0)]), 0);
    }

    #[test]
    fn ties_prefer_lower_rate_then_smaller_batch() {
        assert_eq!(pick_best(&[pt(1e-4, 16, 1.0), pt(1e-6, 128, 1.0)]), 1);
        assert_eq!(pick_best(&[pt(1e-5, 64, 1.0), pt(1e-5, 32, 1.0)]), 1);
    }
}
