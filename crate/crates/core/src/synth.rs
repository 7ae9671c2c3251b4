//! Seeded synthetic benchmarks with a planted ground truth.
//!
//! Latent factor model, all draws from one ChaCha8 stream in this order:
//!
//! 1. base feature map `A` (`d_model x r`, entries `N(0, 1/r)`);
//! 2. language factors `v_l ~ N(0, I_r)` for English, then `l01..lNN`;
//! 3. per-corpus maps `A_l = A + corpus_spread * P_l`, `P_l` like `A`;
//! 4. syntax projection `S` (`d_lang x r`, standard normal);
//! 5. model factors `u_m ~ N(0, I_r)`;
//! 6. per model, per corpus: feature noise `N(0, feature_noise_sigma^2 I)`;
//! 7. per model, per language: noise for `dev`, `dev100`, `test`.
//!
//! True quality on a non-English language is
//! `q(m, l) = (1 - c) u_m.v_l + c u_m.v_en` with `c = en_quality_corr`;
//! on English it is `u_m.v_en`. Scores are `q` plus Gaussian noise
//! (`perf_noise_sigma`, multiplied by `subsample_noise_factor` for `dev100`).
//! Features are `A_l u_m` plus noise. The typological vector of `l` is `v_l`
//! zero-padded to `d_lang`; its syntax vector is `1[S v_l > 0]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{
    format_f64, EmbeddingKind, ExperimentConfig, FeatureTable, KeyValues, LangDimPolicy, LangEmbeddingTable,
    MetaSplit, Partition, PerfTable, Tables,
};
use crate::data::tsv;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub n_models: usize,
    /// Non-English languages; the last one is the target.
    pub n_langs: usize,
    pub n_train: usize,
    pub n_dev: usize,
    pub n_test: usize,
    pub d_model: usize,
    pub d_lang: usize,
    pub rank: usize,
    pub feature_noise_sigma: f64,
    pub perf_noise_sigma: f64,
    pub en_quality_corr: f64,
    /// Scale of the per-corpus perturbation of the shared feature map.
    pub corpus_spread: f64,
    /// Noise multiplier of the small `dev100` subsample relative to `dev`.
    pub subsample_noise_factor: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_models: 80,
            n_langs: 6,
            n_train: 40,
            n_dev: 20,
            n_test: 20,
            d_model: 32,
            d_lang: 16,
            rank: 4,
            feature_noise_sigma: 0.05,
            perf_noise_sigma: 0.05,
            en_quality_corr: 0.3,
            corpus_spread: 0.1,
            subsample_noise_factor: 3.0,
            seed: 0,
        }
    }
}

pub const ENGLISH: &str = "en";

impl SynthConfig {
    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let mut c = Self::default();
        macro_rules! read {
            ($($field:ident),*) => {$(
                if let Some(v) = kv.take(stringify!($field))? {
                    c.$field = v;
                }
            )*};
        }
        read!(
            n_models,
            n_langs,
            n_train,
            n_dev,
            n_test,
            d_model,
            d_lang,
            rank,
            feature_noise_sigma,
            perf_noise_sigma,
            en_quality_corr,
            corpus_spread,
            subsample_noise_factor,
            seed
        );
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_train + self.n_dev + self.n_test != self.n_models {
            return bad("split sizes must sum to n_models");
        }
        if self.n_langs < 2 {
            return bad("n_langs must be at least 2 (pivots plus a target)");
        }
        if self.rank == 0 || self.d_model < self.rank || self.d_lang < self.rank {
            return bad("rank must be positive and at most d_model and d_lang");
        }
        if self.n_langs > 99 || self.n_models > 999_999 {
            return bad("too many languages or models for the id scheme");
        }
        for (name, v) in [
            ("feature_noise_sigma", self.feature_noise_sigma),
            ("perf_noise_sigma", self.perf_noise_sigma),
            ("corpus_spread", self.corpus_spread),
            ("subsample_noise_factor", self.subsample_noise_factor),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a finite value >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.en_quality_corr) {
            return bad("en_quality_corr must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn lang_ids(&self) -> Vec<String> {
        (1..=self.n_langs).map(|i| format!("l{i:02}")).collect()
    }

    pub fn model_ids(&self) -> Vec<String> {
        let width = self.n_models.saturating_sub(1).to_string().len().max(3);
        (0..self.n_models).map(|i| format!("m{i:0width$}")).collect()
    }
}

/// Planted true quality per (model, language).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Oracle {
    quality: BTreeMap<String, BTreeMap<String, f64>>,
}

impl Oracle {
    pub fn quality(&self, model: &str, lang: &str) -> Result<f64> {
        self.quality
            .get(model)
            .and_then(|per| per.get(lang))
            .copied()
            .ok_or_else(|| Error::Invalid(format!("oracle has no quality for ({model}, {lang})")))
    }

    /// `max_m q(m, target) - q(chosen, target)` over the candidates.
    pub fn regret(&self, chosen: &str, candidates: &[String], target: &str) -> Result<f64> {
        if !candidates.iter().any(|c| c == chosen) {
            return Err(Error::Invalid(format!("`{chosen}` is not a candidate")));
        }
        let mut best = f64::NEG_INFINITY;
        for c in candidates {
            best = best.max(self.quality(c, target)?);
        }
        Ok(best - self.quality(chosen, target)?)
    }

    pub fn insert(&mut self, model: &str, lang: &str, q: f64) {
        self.quality.entry(model.into()).or_default().insert(lang.into(), q);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (m, per) in &self.quality {
            for (l, q) in per {
                let _ = writeln!(out, "{m}\t{l}\t{}", format_f64(*q));
            }
        }
        out
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut o = Self::default();
        for rec in tsv::records(text) {
            tsv::expect_fields(file, &rec, 3, "model_id<TAB>lang_id<TAB>true_quality")?;
            let q = tsv::parse_float(file, rec.line, "true_quality", rec.fields[2])?;
            o.insert(rec.fields[0], rec.fields[1], q);
        }
        Ok(o)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path))
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub tables: Tables,
    pub oracle: Oracle,
    /// Pivots `l01..`, target the last language, pivot features, typological embeddings.
    pub experiment: ExperimentConfig,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * normal(rng))
}

fn normal_vector(rng: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_simple_fn(n, || normal(rng))
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    cfg.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r = cfg.rank;
    let scale = 1.0 / (r as f64).sqrt();
    let langs = cfg.lang_ids();
    let mut all_langs = vec![ENGLISH.to_string()];
    all_langs.extend(langs.iter().cloned());
    let models = cfg.model_ids();

    let a = normal_matrix(&mut rng, cfg.d_model, r, scale);
    let v: Vec<Array1<f64>> = all_langs.iter().map(|_| normal_vector(&mut rng, r)).collect();
    let maps: Vec<Array2<f64>> = all_langs
        .iter()
        .map(|_| &a + &(normal_matrix(&mut rng, cfg.d_model, r, scale) * cfg.corpus_spread))
        .collect();
    let s = normal_matrix(&mut rng, cfg.d_lang, r, 1.0);
    let u: Vec<Array1<f64>> = models.iter().map(|_| normal_vector(&mut rng, r)).collect();

    let mut features = FeatureTable::new(cfg.d_model)?;
    for (mi, m) in models.iter().enumerate() {
        for (li, l) in all_langs.iter().enumerate() {
            let mut f = maps[li].dot(&u[mi]);
            f.mapv_inplace(|x| x + cfg.feature_noise_sigma * normal(&mut rng));
            features.insert(m, l, f.to_vec())?;
        }
    }

    let c = cfg.en_quality_corr;
    let mut perf = PerfTable::new();
    let mut oracle = Oracle::default();
    for (mi, m) in models.iter().enumerate() {
        let en_q = u[mi].dot(&v[0]);
        for (li, l) in all_langs.iter().enumerate() {
            let q = if li == 0 {
                en_q
            } else {
                (1.0 - c) * u[mi].dot(&v[li]) + c * en_q
            };
            oracle.insert(m, l, q);
            let sigma = cfg.perf_noise_sigma;
            perf.insert(m, l, "dev", q + sigma * normal(&mut rng))?;
            perf.insert(m, l, "dev100", q + cfg.subsample_noise_factor * sigma * normal(&mut rng))?;
            perf.insert(m, l, "test", q + sigma * normal(&mut rng))?;
        }
    }

    let mut langvecs = LangEmbeddingTable::new(LangDimPolicy::Consistent);
    for (li, l) in all_langs.iter().enumerate() {
        let mut typ = vec![0.0; cfg.d_lang];
        typ[..r].copy_from_slice(v[li].as_slice().expect("contiguous"));
        langvecs.insert(l, EmbeddingKind::Typological, typ)?;
        let syn = s.dot(&v[li]).iter().map(|&x| if x > 0.0 { 1.0 } else { 0.0 }).collect();
        langvecs.insert(l, EmbeddingKind::Syntax, syn)?;
    }

    let mut split = MetaSplit::new();
    for (i, m) in models.iter().enumerate() {
        let part = if i < cfg.n_train {
            Partition::Train
        } else if i < cfg.n_train + cfg.n_dev {
            Partition::Dev
        } else {
            Partition::Test
        };
        split.insert(m, part)?;
    }

    let target = langs.last().expect("n_langs >= 2").clone();
    let mut experiment = ExperimentConfig::new(langs[..langs.len() - 1].to_vec(), target);
    experiment.english_lang_id = ENGLISH.into();
    experiment.seed = cfg.seed;
    Ok(SynthDataset {
        tables: Tables {
            features,
            langvecs,
            perf,
            split,
        },
        oracle,
        experiment,
    })
}

/// Writes the four tables, `oracle.tsv` and `experiment.cfg` into `dir`.
pub fn write_dataset(ds: &SynthDataset, dir: &Path) -> Result<()> {
    ds.tables.save_to_dir(dir)?;
    tsv::write_file(&dir.join("oracle.tsv"), &ds.oracle.to_tsv())?;
    tsv::write_file(&dir.join("experiment.cfg"), &ds.experiment.to_config_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::validate;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_models: 10,
            n_train: 6,
            n_dev: 2,
            n_test: 2,
            n_langs: 3,
            d_model: 6,
            d_lang: 5,
            rank: 3,
            seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn same_seed_same_files() {
        let a = generate(&small(4)).unwrap();
        let b = generate(&small(4)).unwrap();
        assert_eq!(a.tables, b.tables);
        assert_eq!(a.oracle.to_tsv(), b.oracle.to_tsv());
        assert_ne!(a.tables, generate(&small(5)).unwrap().tables);
    }

    #[test]
    fn generated_data_validates() {
        let ds = generate(&small(1)).unwrap();
        assert!(validate(&ds.tables, &ds.experiment).is_empty());
        assert_eq!(ds.experiment.target_lang, "l03");
        assert_eq!(ds.experiment.pivot_langs, vec!["l01", "l02"]);
    }

    #[test]
    fn noiseless_dev_equals_test_equals_oracle() {
        let cfg = SynthConfig {
            feature_noise_sigma: 0.0,
            perf_noise_sigma: 0.0,
            ..small(2)
        };
        let ds = generate(&cfg).unwrap();
        for (m, l, set, s) in ds.tables.perf.iter() {
            assert_eq!(s, ds.oracle.quality(m, l).unwrap(), "{m} {l} {set}");
        }
    }

    #[test]
    fn regret_by_hand() {
        let mut o = Oracle::default();
        o.insert("a", "t", 1.0);
        o.insert("b", "t", 0.4);
        let c = vec!["a".to_string(), "b".to_string()];
        assert_eq!(o.regret("a", &c, "t").unwrap(), 0.0);
        assert!((o.regret("b", &c, "t").unwrap() - 0.6).abs() < 1e-15);
        assert!(o.regret("z", &c, "t").is_err());
    }

    #[test]
    fn oracle_round_trips() {
        let ds = generate(&small(3)).unwrap();
        assert_eq!(Oracle::parse(&ds.oracle.to_tsv(), "o").unwrap(), ds.oracle);
    }

    #[test]
    fn bad_split_sizes_are_rejected() {
        let cfg = SynthConfig {
            n_train: 7,
            ..small(0)
        };
        assert!(generate(&cfg).is_err());
    }
}
