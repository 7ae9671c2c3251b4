//! Turns (model, language) lookups into scorer inputs according to the
//! feature strategy.
//!
//! | strategy | training pair on `l`      | selection for the target |
//! |----------|---------------------------|--------------------------|
//! | eng      | English corpus            | English corpus           |
//! | pivot    | corpus of `l`             | target corpus            |
//! | target   | target corpus             | target corpus            |
//! | fusion   | [English, `l`, target]    | [English, target, target]|

use crate::data::{ExperimentConfig, FeatureStrategy, Tables};
use crate::error::{Error, Result};
use crate::scorer::{ModelFeatures, ScorerInput, ScorerShape};

#[derive(Clone, Copy, Debug)]
pub struct FeatureResolver<'a> {
    tables: &'a Tables,
    cfg: &'a ExperimentConfig,
}

impl<'a> FeatureResolver<'a> {
    pub fn new(tables: &'a Tables, cfg: &'a ExperimentConfig) -> Self {
        Self { tables, cfg }
    }

    pub fn config(&self) -> &'a ExperimentConfig {
        self.cfg
    }

    /// Scorer shape implied by the tables and the config.
    pub fn scorer_shape(&self) -> Result<ScorerShape> {
        let lang_dim = match self.cfg.lang_embedding_kind.table_kind() {
            None => None,
            Some(kind) => Some(self.tables.langvecs.dim(kind).ok_or_else(|| Error::MissingEmbedding {
                lang: self.cfg.target_lang.clone(),
                kind: kind.as_str().into(),
            })?),
        };
        Ok(ScorerShape {
            fusion: self.cfg.feature_strategy == FeatureStrategy::Fusion,
            tasks: self.cfg.task_ids(),
            ..ScorerShape::new(self.tables.features.dim(), lang_dim)
        })
    }

    pub fn lang_vec(&self, lang: &str) -> Result<Option<&'a [f64]>> {
        match self.cfg.lang_embedding_kind.table_kind() {
            None => Ok(None),
            Some(kind) => self.tables.langvecs.require(lang, kind).map(Some),
        }
    }

    fn feature(&self, model: &str, corpus: &str) -> Result<&'a [f64]> {
        self.tables.features.require(model, corpus)
    }

    fn model_features(&self, model: &str, context: &str) -> Result<ModelFeatures<'a>> {
        let en = &self.cfg.english_lang_id;
        let target = &self.cfg.target_lang;
        Ok(match self.cfg.feature_strategy {
            FeatureStrategy::Eng => ModelFeatures::Single(self.feature(model, en)?),
            FeatureStrategy::Pivot => ModelFeatures::Single(self.feature(model, context)?),
            FeatureStrategy::Target => ModelFeatures::Single(self.feature(model, target)?),
            FeatureStrategy::Fusion => ModelFeatures::Fused([
                self.feature(model, en)?,
                self.feature(model, context)?,
                self.feature(model, target)?,
            ]),
        })
    }

    /// Input for model `model` in a training pair on language `lang`.
    pub fn train_input(&self, model: &str, lang: &str, task: Option<&'a str>) -> Result<ScorerInput<'a>> {
        Ok(ScorerInput {
            model: self.model_features(model, lang)?,
            lang: self.lang_vec(lang)?,
            task,
        })
    }

    /// Input for scoring `model` against the target language.
    pub fn select_input(&self, model: &str) -> Result<ScorerInput<'a>> {
        let target = &self.cfg.target_lang;
        Ok(ScorerInput {
            model: self.model_features(model, target)?,
            lang: self.lang_vec(target)?,
            task: self.cfg.task_mode.then_some(self.cfg.main_task.as_str()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        EmbeddingKind, FeatureTable, LangDimPolicy, LangEmbeddingKind, LangEmbeddingTable, MetaSplit, PerfTable,
    };

    fn tables() -> Tables {
        let mut features = FeatureTable::new(1).unwrap();
        for (c, v) in [("en", 1.0), ("de", 2.0), ("ar", 3.0)] {
            features.insert("m", c, vec![v]).unwrap();
        }
        let mut langvecs = LangEmbeddingTable::new(LangDimPolicy::Consistent);
        for (l, v) in [("de", 0.5), ("ar", -0.5)] {
            langvecs.insert(l, EmbeddingKind::Typological, vec![v, 1.0]).unwrap();
        }
        Tables {
            features,
            langvecs,
            perf: PerfTable::new(),
            split: MetaSplit::new(),
        }
    }

    fn first(f: ModelFeatures<'_>) -> Vec<f64> {
        match f {
            ModelFeatures::Single(x) => vec![x[0]],
            ModelFeatures::Fused(xs) => xs.iter().map(|x| x[0]).collect(),
        }
    }

    #[test]
    fn corpus_per_strategy_and_phase() {
        let t = tables();
        let cases = [
            (FeatureStrategy::Eng, vec![1.0], vec![1.0]),
            (FeatureStrategy::Pivot, vec![2.0], vec![3.0]),
            (FeatureStrategy::Target, vec![3.0], vec![3.0]),
            (FeatureStrategy::Fusion, vec![1.0, 2.0, 3.0], vec![1.0, 3.0, 3.0]),
        ];
        for (strategy, train, select) in cases {
            let cfg = ExperimentConfig {
                feature_strategy: strategy,
                ..ExperimentConfig::new(vec!["de".into()], "ar")
            };
            let r = FeatureResolver::new(&t, &cfg);
            let ti = r.train_input("m", "de", None).unwrap();
            assert_eq!(first(ti.model), train, "{strategy}");
            assert_eq!(ti.lang.unwrap()[0], 0.5);
            let si = r.select_input("m").unwrap();
            assert_eq!(first(si.model), select, "{strategy}");
            assert_eq!(si.lang.unwrap()[0], -0.5);
        }
    }

    #[test]
    fn none_kind_has_no_language_vector() {
        let t = tables();
        let cfg = ExperimentConfig {
            lang_embedding_kind: LangEmbeddingKind::None,
            ..ExperimentConfig::new(vec!["de".into()], "ar")
        };
        let r = FeatureResolver::new(&t, &cfg);
        assert!(r.select_input("m").unwrap().lang.is_none());
        assert_eq!(r.scorer_shape().unwrap().lang_dim, None);
    }

    #[test]
    fn missing_target_corpus_is_an_error() {
        let t = tables();
        let cfg = ExperimentConfig::new(vec!["de".into()], "sw");
        let r = FeatureResolver::new(&t, &cfg);
        assert!(matches!(r.select_input("m"), Err(Error::MissingFeature { .. })));
    }
}
