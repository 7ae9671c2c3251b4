use std::collections::BTreeSet;
use std::fmt;

use super::config::{ExperimentConfig, FeatureStrategy};
use super::tables::Tables;

/// One unresolved cross-table reference.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Violation {
    TargetInPivots { lang: String },
    NoEnglishDev { lang: String },
    UnassignedModel { model: String },
    MissingFeature { model: String, corpus: String },
    MissingEmbedding { lang: String, kind: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TargetInPivots { lang } => {
                write!(f, "target language `{lang}` is listed among the pivots")
            }
            Violation::NoEnglishDev { lang } => {
                write!(f, "english language `{lang}` has no `dev` scores in the perf table")
            }
            Violation::UnassignedModel { model } => {
                write!(f, "model `{model}` has features but no meta-split partition")
            }
            Violation::MissingFeature { model, corpus } => {
                write!(f, "missing features for ({model}, {corpus})")
            }
            Violation::MissingEmbedding { lang, kind } => {
                write!(f, "missing {kind} embedding for `{lang}`")
            }
        }
    }
}

/// Corpora whose features the strategy reads, for training and selection together.
pub fn required_corpora(cfg: &ExperimentConfig) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    match cfg.feature_strategy {
        FeatureStrategy::Eng => {
            out.insert(cfg.english_lang_id.clone());
        }
        FeatureStrategy::Pivot => {
            out.extend(cfg.pivot_langs.iter().cloned());
            out.insert(cfg.target_lang.clone());
        }
        FeatureStrategy::Target => {
            out.insert(cfg.target_lang.clone());
        }
        FeatureStrategy::Fusion => {
            out.insert(cfg.english_lang_id.clone());
            out.extend(cfg.pivot_langs.iter().cloned());
            out.insert(cfg.target_lang.clone());
        }
    }
    out
}

/// Checks every cross-table reference the experiment will follow.
///
/// Violations are returned sorted and deduplicated, so the report does not
/// depend on the order records were loaded in.
pub fn validate(tables: &Tables, cfg: &ExperimentConfig) -> Vec<Violation> {
    let mut out = BTreeSet::new();

    if cfg.pivot_langs.contains(&cfg.target_lang) {
        out.insert(Violation::TargetInPivots {
            lang: cfg.target_lang.clone(),
        });
    }
    if !tables.perf.has_any(&cfg.english_lang_id, "dev") {
        out.insert(Violation::NoEnglishDev {
            lang: cfg.english_lang_id.clone(),
        });
    }

    for model in tables.features.models() {
        if tables.split.get(model).is_none() {
            out.insert(Violation::UnassignedModel {
                model: model.to_string(),
            });
        }
    }

    let corpora = required_corpora(cfg);
    for (model, _) in tables.split.iter() {
        for corpus in &corpora {
            if tables.features.get(model, corpus).is_none() {
                out.insert(Violation::MissingFeature {
                    model: model.to_string(),
                    corpus: corpus.clone(),
                });
            }
        }
    }

    if let Some(kind) = cfg.lang_embedding_kind.table_kind() {
        for lang in cfg.pivot_langs.iter().chain(std::iter::once(&cfg.target_lang)) {
            if tables.langvecs.get(lang, kind).is_none() {
                out.insert(Violation::MissingEmbedding {
                    lang: lang.clone(),
                    kind: kind.to_string(),
                });
            }
        }
    }

    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{
        EmbeddingKind, FeatureTable, LangEmbeddingKind, LangEmbeddingTable, MetaSplit, Partition,
        PerfTable,
    };

    fn tiny() -> (Tables, ExperimentConfig) {
        let mut features = FeatureTable::new(2).unwrap();
        let mut langvecs = LangEmbeddingTable::default();
        let mut perf = PerfTable::new();
        let mut split = MetaSplit::new();
        for (i, m) in ["m1", "m2"].iter().enumerate() {
            for c in ["en", "de", "ar"] {
                features.insert(m, c, vec![i as f64, 1.0]).unwrap();
            }
            perf.insert(m, "en", "dev", 50.0 + i as f64).unwrap();
            split.insert(m, Partition::Train).unwrap();
        }
        for l in ["de", "ar"] {
            langvecs.insert(l, EmbeddingKind::Typological, vec![1.0, 0.0]).unwrap();
        }
        let cfg = ExperimentConfig::new(vec!["de".into()], "ar");
        (
            Tables {
                features,
                langvecs,
                perf,
                split,
            },
            cfg,
        )
    }

    #[test]
    fn consistent_tables_validate_clean() {
        let (t, cfg) = tiny();
        assert!(validate(&t, &cfg).is_empty());
    }

    #[test]
    fn missing_pivot_corpus_is_one_violation() {
        let (mut t, cfg) = tiny();
        let mut features = FeatureTable::new(2).unwrap();
        for (m, c, v) in t.features.iter() {
            if !(m == "m2" && c == "de") {
                features.insert(m, c, v.to_vec()).unwrap();
            }
        }
        t.features = features;
        assert_eq!(
            validate(&t, &cfg),
            vec![Violation::MissingFeature {
                model: "m2".into(),
                corpus: "de".into()
            }]
        );
    }

    #[test]
    fn no_embeddings_needed_when_kind_is_none() {
        let (mut t, mut cfg) = tiny();
        t.langvecs = LangEmbeddingTable::default();
        assert_eq!(validate(&t, &cfg).len(), 2);
        cfg.lang_embedding_kind = LangEmbeddingKind::None;
        assert!(validate(&t, &cfg).is_empty());
    }
}
