use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::tables::EmbeddingKind;
use super::tsv;
use crate::error::{Error, Result};

/// `key=value` lines as read from a config file, consumed piecewise by the
/// structs that own each key.
#[derive(Clone, Debug, Default)]
pub struct KeyValues {
    file: String,
    values: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| tsv::parse_error(file, i + 1, "expected `key=value`"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(tsv::parse_error(file, i + 1, "empty key"));
            }
            if values
                .insert(key.to_string(), (i + 1, value.trim().to_string()))
                .is_some()
            {
                return Err(tsv::validation_error(file, i + 1, key, "key given twice"));
            }
        }
        Ok(Self {
            file: file.to_string(),
            values,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path))
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        self.values.remove(key).map(|(_, v)| v)
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| tsv::validation_error(&self.file, line, key, format!("`{v}`: {e}"))),
        }
    }

    pub fn take_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: fmt::Display,
    {
        match self.values.remove(key) {
            None => Ok(None),
            Some((line, v)) => split_list(&v)
                .into_iter()
                .map(|item| {
                    item.parse().map_err(|e| {
                        tsv::validation_error(&self.file, line, key, format!("`{item}`: {e}"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    /// Errors on any key nobody consumed.
    pub fn finish(self) -> Result<()> {
        match self.values.into_iter().next() {
            Some((key, (line, _))) => Err(tsv::validation_error(&self.file, line, &key, "unknown key")),
            None => Ok(()),
        }
    }
}

fn split_list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FeatureStrategy {
    /// English-corpus features for training and selection.
    Eng,
    /// The pair's own language corpus in training, the target corpus at selection.
    Pivot,
    /// The target-language corpus throughout.
    Target,
    /// Learned linear combination of English, context and target features.
    Fusion,
}

impl FeatureStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureStrategy::Eng => "eng",
            FeatureStrategy::Pivot => "pivot",
            FeatureStrategy::Target => "target",
            FeatureStrategy::Fusion => "fusion",
        }
    }
}

impl fmt::Display for FeatureStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "eng" => Ok(Self::Eng),
            "pivot" => Ok(Self::Pivot),
            "target" => Ok(Self::Target),
            "fusion" => Ok(Self::Fusion),
            other => Err(format!("unknown feature strategy `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LangEmbeddingKind {
    Typological,
    Syntax,
    None,
}

impl LangEmbeddingKind {
    pub fn table_kind(self) -> Option<EmbeddingKind> {
        match self {
            LangEmbeddingKind::Typological => Some(EmbeddingKind::Typological),
            LangEmbeddingKind::Syntax => Some(EmbeddingKind::Syntax),
            LangEmbeddingKind::None => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LangEmbeddingKind::Typological => "typological",
            LangEmbeddingKind::Syntax => "syntax",
            LangEmbeddingKind::None => "none",
        }
    }
}

impl fmt::Display for LangEmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LangEmbeddingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "typological" => Ok(Self::Typological),
            "syntax" => Ok(Self::Syntax),
            "none" => Ok(Self::None),
            other => Err(format!("unknown language embedding kind `{other}`")),
        }
    }
}

/// Which features, embeddings and languages one experiment uses.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub feature_strategy: FeatureStrategy,
    pub lang_embedding_kind: LangEmbeddingKind,
    pub task_mode: bool,
    pub english_lang_id: String,
    pub pivot_langs: Vec<String>,
    pub target_lang: String,
    pub seed: u64,
    /// Fixed pivot for the Pivot-Dev baseline, bypassing the cosine lookup.
    pub pivot_override: Option<String>,
    /// Task id of the task being selected for (task mode only).
    pub main_task: String,
    /// Auxiliary tasks whose rankings come from eval sets `<task>:dev` (task mode only).
    pub aux_tasks: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(pivot_langs: Vec<String>, target_lang: impl Into<String>) -> Self {
        Self {
            feature_strategy: FeatureStrategy::Pivot,
            lang_embedding_kind: LangEmbeddingKind::Typological,
            task_mode: false,
            english_lang_id: "en".into(),
            pivot_langs,
            target_lang: target_lang.into(),
            seed: 0,
            pivot_override: None,
            main_task: "main".into(),
            aux_tasks: Vec::new(),
        }
    }

    pub fn from_kv(kv: &mut KeyValues) -> Result<Self> {
        let pivot_langs: Vec<String> = kv
            .take_list("pivot_langs")?
            .ok_or_else(|| Error::Config("missing key `pivot_langs`".into()))?;
        let target_lang = kv
            .take_str("target_lang")
            .ok_or_else(|| Error::Config("missing key `target_lang`".into()))?;
        let mut cfg = Self::new(pivot_langs, target_lang);
        if let Some(v) = kv.take("feature_strategy")? {
            cfg.feature_strategy = v;
        }
        if let Some(v) = kv.take("lang_embedding_kind")? {
            cfg.lang_embedding_kind = v;
        }
        if let Some(v) = kv.take("task_mode")? {
            cfg.task_mode = v;
        }
        if let Some(v) = kv.take_str("english_lang_id") {
            cfg.english_lang_id = v;
        }
        if let Some(v) = kv.take("seed")? {
            cfg.seed = v;
        }
        cfg.pivot_override = kv.take_str("pivot_override").filter(|s| !s.is_empty());
        if let Some(v) = kv.take_str("main_task") {
            cfg.main_task = v;
        }
        if let Some(v) = kv.take_list("aux_tasks")? {
            cfg.aux_tasks = v;
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Internal consistency of the config on its own (no tables needed).
    pub fn check(&self) -> Result<()> {
        if self.target_lang.is_empty() {
            return Err(Error::Config("target_lang is empty".into()));
        }
        if self.pivot_langs.contains(&self.target_lang) {
            return Err(Error::Config(format!(
                "target language `{}` is also listed as a pivot",
                self.target_lang
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.pivot_langs.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::Config(format!("pivot `{dup}` listed twice")));
        }
        if self.task_mode && self.lang_embedding_kind == LangEmbeddingKind::None {
            return Err(Error::Config(
                "task_mode needs a language embedding: task vectors are concatenated to it".into(),
            ));
        }
        if !self.task_mode && !self.aux_tasks.is_empty() {
            return Err(Error::Config("aux_tasks given without task_mode=true".into()));
        }
        if self.aux_tasks.contains(&self.main_task) {
            return Err(Error::Config("main_task is also listed in aux_tasks".into()));
        }
        Ok(())
    }

    /// Pivots plus the target, in lexicographic order.
    pub fn language_pool(&self) -> Vec<String> {
        let mut pool: Vec<String> = self.pivot_langs.clone();
        pool.push(self.target_lang.clone());
        pool.sort();
        pool.dedup();
        pool
    }

    /// The leave-one-language-out fold holding `target` out of the pool.
    pub fn fold(&self, target: &str) -> Self {
        let pool = self.language_pool();
        Self {
            pivot_langs: pool.into_iter().filter(|l| l != target).collect(),
            target_lang: target.to_string(),
            ..self.clone()
        }
    }

    /// All task ids known to the scorer in task mode, main task first.
    pub fn task_ids(&self) -> Vec<String> {
        if !self.task_mode {
            return Vec::new();
        }
        let mut ids = vec![self.main_task.clone()];
        ids.extend(self.aux_tasks.iter().cloned());
        ids
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("feature_strategy={}\n", self.feature_strategy));
        out.push_str(&format!("lang_embedding_kind={}\n", self.lang_embedding_kind));
        out.push_str(&format!("task_mode={}\n", self.task_mode));
        out.push_str(&format!("english_lang_id={}\n", self.english_lang_id));
        out.push_str(&format!("pivot_langs={}\n", self.pivot_langs.join(",")));
        out.push_str(&format!("target_lang={}\n", self.target_lang));
        out.push_str(&format!("seed={}\n", self.seed));
        if let Some(p) = &self.pivot_override {
            out.push_str(&format!("pivot_override={p}\n"));
        }
        if self.task_mode {
            out.push_str(&format!("main_task={}\n", self.main_task));
            out.push_str(&format!("aux_tasks={}\n", self.aux_tasks.join(",")));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let text = "# experiment\nfeature_strategy=fusion\nlang_embedding_kind=syntax\n\
                    pivot_langs=de, es ,nl\ntarget_lang=ar\nseed=7\nenglish_lang_id=en\n";
        let mut kv = KeyValues::parse(text, "exp.cfg").unwrap();
        let cfg = ExperimentConfig::from_kv(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(cfg.feature_strategy, FeatureStrategy::Fusion);
        assert_eq!(cfg.lang_embedding_kind, LangEmbeddingKind::Syntax);
        assert_eq!(cfg.pivot_langs, vec!["de", "es", "nl"]);
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn target_among_pivots_is_rejected() {
        let mut kv = KeyValues::parse("pivot_langs=ar,de\ntarget_lang=ar\n", "c").unwrap();
        assert!(matches!(ExperimentConfig::from_kv(&mut kv), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_is_reported_with_line() {
        let mut kv = KeyValues::parse("pivot_langs=de\ntarget_lang=ar\nlearning_rat=1\n", "c").unwrap();
        ExperimentConfig::from_kv(&mut kv).unwrap();
        let err = kv.finish().unwrap_err();
        assert!(matches!(err, Error::Validation { line: 3, .. }), "{err}");
    }

    #[test]
    fn config_text_round_trips() {
        let mut cfg = ExperimentConfig::new(vec!["de".into(), "nl".into()], "ar");
        cfg.task_mode = true;
        cfg.aux_tasks = vec!["arl".into()];
        cfg.pivot_override = Some("de".into());
        let mut kv = KeyValues::parse(&cfg.to_config_string(), "c").unwrap();
        let back = ExperimentConfig::from_kv(&mut kv).unwrap();
        kv.finish().unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn fold_moves_target_out_of_pivots() {
        let cfg = ExperimentConfig::new(vec!["de".into(), "es".into()], "ar");
        let f = cfg.fold("de");
        assert_eq!(f.target_lang, "de");
        assert_eq!(f.pivot_langs, vec!["ar", "es"]);
    }
}
