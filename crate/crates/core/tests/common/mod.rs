#![allow(dead_code)]

use lms::data::{ExperimentConfig, LangEmbeddingKind, Tables};
use lms::ranking::TrainConfig;
use lms::scorer::{Branch, Head, ScorerParams};
use lms::synth::{generate, SynthConfig, SynthDataset};

/// A dataset small enough for many quick runs.
pub fn small_synth(seed: u64) -> SynthDataset {
    generate(&SynthConfig {
        n_models: 16,
        n_train: 8,
        n_dev: 4,
        n_test: 4,
        n_langs: 4,
        d_model: 6,
        d_lang: 5,
        rank: 3,
        seed,
        ..SynthConfig::default()
    })
    .unwrap()
}

pub fn small_train_config(seed: u64) -> TrainConfig {
    TrainConfig {
        hidden: 16,
        output: 8,
        learning_rate: 1e-3,
        batch_size: 8,
        seed,
        ..TrainConfig::default()
    }
}

/// Element-by-element `W2 relu(W1 x + b1) + b2`.
pub fn naive_ffnn(x: &[f64], b: &Branch) -> Vec<f64> {
    let hidden: Vec<f64> = (0..b.w1.nrows())
        .map(|i| {
            let mut z = b.b1[i];
            for (j, xj) in x.iter().enumerate() {
                z += b.w1[[i, j]] * xj;
            }
            z.max(0.0)
        })
        .collect();
    (0..b.w2.nrows())
        .map(|i| {
            let mut z = b.b2[i];
            for (j, hj) in hidden.iter().enumerate() {
                z += b.w2[[i, j]] * hj;
            }
            z
        })
        .collect()
}

/// Score of a single-feature input without tasks, computed with plain loops.
pub fn naive_score(p: &ScorerParams, features: &[f64], lang: Option<&[f64]>) -> f64 {
    let a = naive_ffnn(features, &p.model);
    match &p.head {
        Head::Direct { v, c } => a.iter().zip(v.iter()).map(|(x, y)| x * y).sum::<f64>() + c,
        Head::Bilinear { lang: lb, w_bi } => {
            let b = naive_ffnn(lang.expect("bilinear needs a language"), lb);
            let mut s = 0.0;
            for i in 0..a.len() {
                for j in 0..b.len() {
                    s += a[i] * w_bi[[i, j]] * b[j];
                }
            }
            s
        }
    }
}

/// Features of `model` on the corpus a pivot-strategy config reads for `lang`.
pub fn pivot_features<'a>(tables: &'a Tables, model: &str, lang: &str) -> &'a [f64] {
    tables.features.get(model, lang).unwrap()
}

pub fn lang_vec<'a>(tables: &'a Tables, cfg: &ExperimentConfig, lang: &str) -> Option<&'a [f64]> {
    match cfg.lang_embedding_kind {
        LangEmbeddingKind::None => None,
        k => Some(tables.langvecs.get(lang, k.table_kind().unwrap()).unwrap()),
    }
}

/// `sum_l sum_i sum_j [dev_i > dev_j] ln(1 + exp(-(s_i - s_j)))` by brute force.
pub fn naive_total_loss(p: &ScorerParams, tables: &Tables, cfg: &ExperimentConfig, models: &[String]) -> f64 {
    let mut total = 0.0;
    for l in &cfg.pivot_langs {
        for i in models {
            for j in models {
                let (pi, pj) = (
                    tables.perf.get(i, l, "dev").unwrap(),
                    tables.perf.get(j, l, "dev").unwrap(),
                );
                if pi <= pj {
                    continue;
                }
                let lv = lang_vec(tables, cfg, l);
                let si = naive_score(p, pivot_features(tables, i, l), lv);
                let sj = naive_score(p, pivot_features(tables, j, l), lv);
                total += (1.0 + (-(si - sj)).exp()).ln();
            }
        }
    }
    total
}

/// One random loss-oracle instance: at most 10 models and 3 training
/// languages, dev scores rounded to create ties, random scorer weights.
/// Returns `(batched, brute_force, pair_count)`.
pub fn loss_oracle_instance(seed: u64) -> (f64, f64, usize) {
    use lms::data::PerfTable;
    use lms::inputs::FeatureResolver;
    use lms::ranking::{pairwise_loss, training_pairs};
    use lms::scorer::{init_params, ScorerShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_models = rng.random_range(3..=10);
    let n_pivots = rng.random_range(1..=3);
    let mut ds = generate(&SynthConfig {
        n_models,
        n_train: n_models,
        n_dev: 0,
        n_test: 0,
        n_langs: n_pivots + 1,
        d_model: rng.random_range(2..=6),
        d_lang: 3,
        rank: 2,
        seed,
        ..SynthConfig::default()
    })
    .unwrap();
    let mut perf = PerfTable::new();
    for (m, l, set, s) in ds.tables.perf.iter() {
        let s = if set == "dev" { (s * 4.0).round() / 4.0 } else { s };
        perf.insert(m, l, set, s).unwrap();
    }
    ds.tables.perf = perf;
    let mut cfg = ds.experiment.clone();
    if seed % 2 == 1 {
        cfg.lang_embedding_kind = LangEmbeddingKind::None;
    }
    let resolver = FeatureResolver::new(&ds.tables, &cfg);
    let shape = ScorerShape {
        hidden: rng.random_range(1..=8),
        output: rng.random_range(1..=4),
        ..resolver.scorer_shape().unwrap()
    };
    let params = init_params(&shape, seed).unwrap();
    let models = ds.tables.split.models(lms::data::Partition::Train);
    let gold = training_pairs(&ds.tables.perf, &cfg, &models).unwrap();
    let naive = naive_total_loss(&params, &ds.tables, &cfg, &models);
    if gold.is_empty() {
        return (0.0, naive, 0);
    }
    let batched = pairwise_loss(&params, &gold, &resolver).unwrap();
    (batched, naive, gold.len())
}
