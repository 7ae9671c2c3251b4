use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::adam::{adam_step, AdamConfig, AdamState};
use super::gold::{no_signal_if_empty, training_pairs, GoldPair, TrainingSet};
use crate::data::{ExperimentConfig, KeyValues, Partition, Tables};
use crate::error::{Error, Result};
use crate::inputs::FeatureResolver;
use crate::scorer::{init_params, loss_and_grad, ScorerParams, DEFAULT_HIDDEN, DEFAULT_OUTPUT, DEFAULT_TASK_DIM};

pub const LEARNING_RATE_GRID: [f64; 5] = [1e-4, 5e-5, 1e-5, 5e-6, 1e-6];
pub const BATCH_SIZE_GRID: [usize; 4] = [16, 32, 64, 128];

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds both the parameter initialization and the per-epoch shuffles.
    pub seed: u64,
    pub hidden: usize,
    pub output: usize,
    pub task_dim: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            batch_size: 32,
            epochs: 3,
            adam: AdamConfig::default(),
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            output: DEFAULT_OUTPUT,
            task_dim: DEFAULT_TASK_DIM,
        }
    }
}

impl TrainConfig {
    /// Reads the training keys of a config file, leaving the others in `kv`.
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let mut c = Self::default();
        if let Some(v) = kv.take("learning_rate")? {
            c.learning_rate = v;
        }
        if let Some(v) = kv.take("batch_size")? {
            c.batch_size = v;
        }
        if let Some(v) = kv.take("epochs")? {
            c.epochs = v;
        }
        if let Some(v) = kv.take("beta1")? {
            c.adam.beta1 = v;
        }
        if let Some(v) = kv.take("beta2")? {
            c.adam.beta2 = v;
        }
        if let Some(v) = kv.take("eps")? {
            c.adam.eps = v;
        }
        if let Some(v) = kv.take("weight_decay")? {
            c.adam.weight_decay = v;
        }
        if let Some(v) = kv.take("hidden")? {
            c.hidden = v;
        }
        if let Some(v) = kv.take("output")? {
            c.output = v;
        }
        if let Some(v) = kv.take("task_dim")? {
            c.task_dim = v;
        }
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.hidden == 0 || self.output == 0 || self.task_dim == 0 {
            return Err(Error::Config("hidden, output and task_dim must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean pair loss over the epoch, each batch measured before its update.
    pub loss: f64,
    pub pair_count: usize,
}

/// `epoch<TAB>loss<TAB>pair_count` lines under a header.
pub fn format_history(history: &[EpochLog]) -> String {
    let mut out = String::from("epoch\tloss\tpair_count\n");
    for e in history {
        let _ = writeln!(out, "{}\t{}\t{}", e.epoch, e.loss, e.pair_count);
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ScorerParams,
    pub history: Vec<EpochLog>,
    /// Mean pair loss over the whole training set before the first update.
    pub initial_loss: f64,
    /// Mean pair loss over the whole training set after the last update.
    pub final_loss: f64,
    /// Languages whose gold pairs were trained on.
    pub languages: BTreeSet<String>,
}

/// Trains on the pivot languages' gold pairs over the meta-train models.
pub fn train(tables: &Tables, cfg: &ExperimentConfig, tcfg: &TrainConfig) -> Result<TrainOutcome> {
    let models = tables.split.models(Partition::Train);
    let gold = training_pairs(&tables.perf, cfg, &models)?;
    train_on_pairs(&FeatureResolver::new(tables, cfg), &gold, tcfg)
}

/// Trains on an explicit pair list. Each epoch shuffles all pairs with a
/// ChaCha8 stream seeded from `tcfg.seed` and takes one Adam step per batch
/// on the batch-mean loss.
pub fn train_on_pairs(resolver: &FeatureResolver<'_>, gold: &[GoldPair], tcfg: &TrainConfig) -> Result<TrainOutcome> {
    tcfg.check()?;
    no_signal_if_empty(gold)?;
    let set = TrainingSet::build(gold, resolver)?;
    let shape = crate::scorer::ScorerShape {
        hidden: tcfg.hidden,
        output: tcfg.output,
        task_dim: tcfg.task_dim,
        ..resolver.scorer_shape()?
    };
    let mut params = init_params(&shape, tcfg.seed)?;
    let mut state = AdamState::new(&params);
    // Distinct stream from the one that drew the initial weights.
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed ^ 0x5348_5546_464c_4531);
    let n = set.len() as f64;
    let initial_loss = set.total_loss(&params)? / n;

    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut history = Vec::with_capacity(tcfg.epochs);
    for epoch in 1..=tcfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for batch in order.chunks(tcfg.batch_size) {
            let pairs = set.scored_pairs(batch);
            let (loss, grad) = loss_and_grad(&params, &pairs)?;
            sum += loss * batch.len() as f64;
            adam_step(&mut params, &grad, &mut state, &tcfg.adam, tcfg.learning_rate);
        }
        if !params.all_finite() {
            return Err(Error::Invalid(format!("training diverged in epoch {epoch}")));
        }
        history.push(EpochLog {
            epoch,
            loss: sum / n,
            pair_count: set.len(),
        });
    }
    let final_loss = set.total_loss(&params)? / n;
    Ok(TrainOutcome {
        params,
        history,
        initial_loss,
        final_loss,
        languages: set.languages().clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_keys_are_read() {
        let mut kv = KeyValues::parse("learning_rate=5e-5\nbatch_size=64\nepochs=2\nhidden=8\nother=1\n", "c").unwrap();
        let c = TrainConfig::from_kv(&mut kv).unwrap();
        assert_eq!((c.learning_rate, c.batch_size, c.epochs, c.hidden), (5e-5, 64, 2, 8));
        assert_eq!(kv.take_str("other").as_deref(), Some("1"));
    }

    #[test]
    fn bad_values_are_rejected() {
        for text in ["learning_rate=0", "batch_size=0", "epochs=0"] {
            let mut kv = KeyValues::parse(text, "c").unwrap();
            assert!(TrainConfig::from_kv(&mut kv).is_err(), "{text}");
        }
    }

    #[test]
    fn history_lines() {
        let h = [EpochLog {
            epoch: 1,
            loss: 0.5,
            pair_count: 12,
        }];
        assert_eq!(format_history(&h), "epoch\tloss\tpair_count\n1\t0.5\t12\n");
    }
}
