use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::tsv::{self, format_f64};
use crate::error::{Error, Result};

/// Expected lang2vec-style dimensions for real language embeddings.
pub const TYPOLOGICAL_DIM: usize = 512;
pub const SYNTAX_DIM: usize = 103;

fn check_finite(values: &[f64]) -> std::result::Result<(), String> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(format!("component {} is not finite", i + 1)),
        None => Ok(()),
    }
}

/// Per (model, corpus-language) feature vectors of a fixed dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    dim: usize,
    entries: BTreeMap<String, BTreeMap<String, Vec<f64>>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Invalid("feature dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            entries: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self, model: &str, corpus: &str, values: &[f64]) -> std::result::Result<(), (String, String)> {
        if values.len() != self.dim {
            return Err((
                "vector".into(),
                format!(
                    "dimension mismatch: table dimension is {}, vector has {}",
                    self.dim,
                    values.len()
                ),
            ));
        }
        check_finite(values).map_err(|m| ("vector".to_string(), m))?;
        if self.get(model, corpus).is_some() {
            return Err((
                "model_id".into(),
                format!("duplicate key ({model}, {corpus})"),
            ));
        }
        Ok(())
    }

    pub fn insert(&mut self, model: &str, corpus: &str, values: Vec<f64>) -> Result<()> {
        self.check(model, corpus, &values)
            .map_err(|(field, msg)| Error::Invalid(format!("features `{field}`: {msg}")))?;
        self.entries
            .entry(model.to_string())
            .or_default()
            .insert(corpus.to_string(), values);
        Ok(())
    }

    pub fn get(&self, model: &str, corpus: &str) -> Option<&[f64]> {
        self.entries.get(model)?.get(corpus).map(Vec::as_slice)
    }

    pub fn require(&self, model: &str, corpus: &str) -> Result<&[f64]> {
        self.get(model, corpus).ok_or_else(|| Error::MissingFeature {
            model: model.to_string(),
            corpus: corpus.to_string(),
        })
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &[f64])> {
        self.entries.iter().flat_map(|(m, per)| {
            per.iter()
                .map(move |(c, v)| (m.as_str(), c.as_str(), v.as_slice()))
        })
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut table: Option<FeatureTable> = None;
        for rec in tsv::records(text) {
            tsv::expect_fields(file, &rec, 4, "model_id, corpus_id, d, vector")?;
            let model = tsv::nonempty(file, rec.line, "model_id", rec.fields[0])?;
            let corpus = tsv::nonempty(file, rec.line, "corpus_id", rec.fields[1])?;
            let values = tsv::parse_sized_vector(file, rec.line, rec.fields[2], rec.fields[3])?;
            let t = match table.as_mut() {
                Some(t) => t,
                None => table.insert(FeatureTable::new(values.len())?),
            };
            t.check(model, corpus, &values)
                .map_err(|(field, msg)| tsv::validation_error(file, rec.line, &field, msg))?;
            t.entries
                .entry(model.to_string())
                .or_default()
                .insert(corpus.to_string(), values);
        }
        table.ok_or_else(|| tsv::parse_error(file, 0, "features file contains no records"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path))
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (model, corpus, values) in self.iter() {
            out.push_str(&format!("{model}\t{corpus}\t{}\t", values.len()));
            tsv::push_vector(&mut out, values);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, &self.to_tsv())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EmbeddingKind {
    Typological,
    Syntax,
}

impl EmbeddingKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EmbeddingKind::Typological => "typological",
            EmbeddingKind::Syntax => "syntax",
        }
    }

    pub fn standard_dim(self) -> usize {
        match self {
            EmbeddingKind::Typological => TYPOLOGICAL_DIM,
            EmbeddingKind::Syntax => SYNTAX_DIM,
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmbeddingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "typological" => Ok(EmbeddingKind::Typological),
            "syntax" => Ok(EmbeddingKind::Syntax),
            other => Err(format!("unknown embedding kind `{other}` (expected typological or syntax)")),
        }
    }
}

/// How embedding dimensions are checked on load.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LangDimPolicy {
    /// Every vector of one kind shares a dimension, whatever it is.
    #[default]
    Consistent,
    /// Typological vectors are 512-d and syntax vectors 103-d.
    Standard,
}

impl FromStr for LangDimPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "consistent" => Ok(Self::Consistent),
            "standard" => Ok(Self::Standard),
            other => Err(format!("unknown language dimension policy `{other}`")),
        }
    }
}

/// Per (language, kind) embedding vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LangEmbeddingTable {
    policy: LangDimPolicy,
    dims: BTreeMap<EmbeddingKind, usize>,
    entries: BTreeMap<String, BTreeMap<EmbeddingKind, Vec<f64>>>,
}

impl LangEmbeddingTable {
    pub fn new(policy: LangDimPolicy) -> Self {
        Self {
            policy,
            ..Self::default()
        }
    }

    pub fn dim(&self, kind: EmbeddingKind) -> Option<usize> {
        self.dims.get(&kind).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, lang: &str, kind: EmbeddingKind, values: &[f64]) -> std::result::Result<(), (String, String)> {
        let expected = match self.policy {
            LangDimPolicy::Standard => Some(kind.standard_dim()),
            LangDimPolicy::Consistent => self.dims.get(&kind).copied(),
        };
        if let Some(d) = expected {
            if values.len() != d {
                return Err((
                    "vector".into(),
                    format!("dimension mismatch: {kind} vectors have length {d}, found {}", values.len()),
                ));
            }
        }
        check_finite(values).map_err(|m| ("vector".to_string(), m))?;
        if kind == EmbeddingKind::Syntax && values.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(("vector".into(), "syntax vectors must be binary".into()));
        }
        if self.get(lang, kind).is_some() {
            return Err(("lang_id".into(), format!("duplicate key ({lang}, {kind})")));
        }
        Ok(())
    }

    fn insert_unchecked(&mut self, lang: &str, kind: EmbeddingKind, values: Vec<f64>) {
        self.dims.entry(kind).or_insert(values.len());
        self.entries
            .entry(lang.to_string())
            .or_default()
            .insert(kind, values);
    }

    pub fn insert(&mut self, lang: &str, kind: EmbeddingKind, values: Vec<f64>) -> Result<()> {
        self.check(lang, kind, &values)
            .map_err(|(field, msg)| Error::Invalid(format!("langvec `{field}`: {msg}")))?;
        self.insert_unchecked(lang, kind, values);
        Ok(())
    }

    pub fn get(&self, lang: &str, kind: EmbeddingKind) -> Option<&[f64]> {
        self.entries.get(lang)?.get(&kind).map(Vec::as_slice)
    }

    pub fn require(&self, lang: &str, kind: EmbeddingKind) -> Result<&[f64]> {
        self.get(lang, kind).ok_or_else(|| Error::MissingEmbedding {
            lang: lang.to_string(),
            kind: kind.to_string(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, EmbeddingKind, &[f64])> {
        self.entries.iter().flat_map(|(l, per)| {
            per.iter()
                .map(move |(k, v)| (l.as_str(), *k, v.as_slice()))
        })
    }

    pub fn parse(text: &str, file: &str, policy: LangDimPolicy) -> Result<Self> {
        let mut table = Self::new(policy);
        for rec in tsv::records(text) {
            tsv::expect_fields(file, &rec, 4, "lang_id, kind, d, vector")?;
            let lang = tsv::nonempty(file, rec.line, "lang_id", rec.fields[0])?;
            let kind: EmbeddingKind = rec.fields[1]
                .parse()
                .map_err(|m: String| tsv::validation_error(file, rec.line, "kind", m))?;
            let values = tsv::parse_sized_vector(file, rec.line, rec.fields[2], rec.fields[3])?;
            table
                .check(lang, kind, &values)
                .map_err(|(field, msg)| tsv::validation_error(file, rec.line, &field, msg))?;
            table.insert_unchecked(lang, kind, values);
        }
        Ok(table)
    }

    pub fn load(path: &Path, policy: LangDimPolicy) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path), policy)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (lang, kind, values) in self.iter() {
            out.push_str(&format!("{lang}\t{kind}\t{}\t", values.len()));
            tsv::push_vector(&mut out, values);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, &self.to_tsv())
    }
}

/// Per (model, language, eval set) scores. Higher is always better.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PerfTable {
    entries: BTreeMap<String, BTreeMap<String, BTreeMap<String, f64>>>,
}

impl PerfTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries
            .values()
            .flat_map(BTreeMap::values)
            .map(BTreeMap::len)
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn check(&self, model: &str, lang: &str, eval_set: &str, score: f64) -> std::result::Result<(), (String, String)> {
        if !score.is_finite() {
            return Err(("score".into(), "value must be finite".into()));
        }
        if eval_set.is_empty() {
            return Err(("eval_set".into(), "must be nonempty".into()));
        }
        if self.get(model, lang, eval_set).is_some() {
            return Err((
                "model_id".into(),
                format!("duplicate key ({model}, {lang}, {eval_set})"),
            ));
        }
        Ok(())
    }

    fn insert_unchecked(&mut self, model: &str, lang: &str, eval_set: &str, score: f64) {
        self.entries
            .entry(model.to_string())
            .or_default()
            .entry(lang.to_string())
            .or_default()
            .insert(eval_set.to_string(), score);
    }

    pub fn insert(&mut self, model: &str, lang: &str, eval_set: &str, score: f64) -> Result<()> {
        self.check(model, lang, eval_set, score)
            .map_err(|(field, msg)| Error::Invalid(format!("perf `{field}`: {msg}")))?;
        self.insert_unchecked(model, lang, eval_set, score);
        Ok(())
    }

    pub fn get(&self, model: &str, lang: &str, eval_set: &str) -> Option<f64> {
        self.entries.get(model)?.get(lang)?.get(eval_set).copied()
    }

    pub fn require(&self, model: &str, lang: &str, eval_set: &str) -> Result<f64> {
        self.get(model, lang, eval_set).ok_or_else(|| Error::MissingPerf {
            model: model.to_string(),
            lang: lang.to_string(),
            eval_set: eval_set.to_string(),
        })
    }

    /// True when at least one model has a score for (lang, eval_set).
    pub fn has_any(&self, lang: &str, eval_set: &str) -> bool {
        self.entries
            .values()
            .any(|per| per.get(lang).is_some_and(|s| s.contains_key(eval_set)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &str, f64)> {
        self.entries.iter().flat_map(|(m, per_lang)| {
            per_lang.iter().flat_map(move |(l, per_set)| {
                per_set
                    .iter()
                    .map(move |(s, v)| (m.as_str(), l.as_str(), s.as_str(), *v))
            })
        })
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut table = Self::new();
        for rec in tsv::records(text) {
            tsv::expect_fields(file, &rec, 4, "model_id, lang_id, eval_set, score")?;
            let model = tsv::nonempty(file, rec.line, "model_id", rec.fields[0])?;
            let lang = tsv::nonempty(file, rec.line, "lang_id", rec.fields[1])?;
            let eval_set = tsv::nonempty(file, rec.line, "eval_set", rec.fields[2])?;
            let score = tsv::parse_float(file, rec.line, "score", rec.fields[3])?;
            table
                .check(model, lang, eval_set, score)
                .map_err(|(field, msg)| tsv::validation_error(file, rec.line, &field, msg))?;
            table.insert_unchecked(model, lang, eval_set, score);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path))
    }

    pub fn to_tsv(&self) -> String {
        self.iter()
            .map(|(m, l, s, v)| format!("{m}\t{l}\t{s}\t{}\n", format_f64(v)))
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, &self.to_tsv())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub fn as_str(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "train" => Ok(Partition::Train),
            "dev" => Ok(Partition::Dev),
            "test" => Ok(Partition::Test),
            other => Err(format!("unknown partition `{other}` (expected train, dev or test)")),
        }
    }
}

/// Assignment of candidate models to meta-train/dev/test.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetaSplit {
    partition: BTreeMap<String, Partition>,
}

impl MetaSplit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, model: &str, part: Partition) -> Result<()> {
        if self.partition.contains_key(model) {
            return Err(Error::Invalid(format!("split: model `{model}` assigned twice")));
        }
        self.partition.insert(model.to_string(), part);
        Ok(())
    }

    pub fn get(&self, model: &str) -> Option<Partition> {
        self.partition.get(model).copied()
    }

    /// Models of one partition in lexicographic order.
    pub fn models(&self, part: Partition) -> Vec<String> {
        self.partition
            .iter()
            .filter(|(_, p)| **p == part)
            .map(|(m, _)| m.clone())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Partition)> {
        self.partition.iter().map(|(m, p)| (m.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.partition.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partition.is_empty()
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut split = Self::new();
        for rec in tsv::records(text) {
            tsv::expect_fields(file, &rec, 2, "model_id, partition")?;
            let model = tsv::nonempty(file, rec.line, "model_id", rec.fields[0])?;
            let part: Partition = rec.fields[1]
                .parse()
                .map_err(|m: String| tsv::validation_error(file, rec.line, "partition", m))?;
            if split.partition.contains_key(model) {
                return Err(tsv::validation_error(
                    file,
                    rec.line,
                    "model_id",
                    format!("duplicate key `{model}`"),
                ));
            }
            split.partition.insert(model.to_string(), part);
        }
        Ok(split)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&tsv::read_file(path)?, &tsv::file_label(path))
    }

    pub fn to_tsv(&self) -> String {
        self.iter().map(|(m, p)| format!("{m}\t{p}\n")).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_file(path, &self.to_tsv())
    }
}

/// Everything the engine reads. Immutable once loaded.
#[derive(Clone, Debug, PartialEq)]
pub struct Tables {
    pub features: FeatureTable,
    pub langvecs: LangEmbeddingTable,
    pub perf: PerfTable,
    pub split: MetaSplit,
}

#[derive(Clone, Debug)]
pub struct TablePaths {
    pub features: PathBuf,
    /// Absent when no language embeddings are used.
    pub langvecs: Option<PathBuf>,
    pub perf: PathBuf,
    pub split: PathBuf,
}

impl TablePaths {
    /// The conventional file names inside one dataset directory.
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            features: dir.join("features.tsv"),
            langvecs: Some(dir.join("langvec.tsv")),
            perf: dir.join("perf.tsv"),
            split: dir.join("split.tsv"),
        }
    }
}

pub fn load_tables(paths: &TablePaths, policy: LangDimPolicy) -> Result<Tables> {
    let features = FeatureTable::load(&paths.features)?;
    let langvecs = match &paths.langvecs {
        Some(p) => LangEmbeddingTable::load(p, policy)?,
        None => LangEmbeddingTable::new(policy),
    };
    let perf = PerfTable::load(&paths.perf)?;
    let split = MetaSplit::load(&paths.split)?;
    if let Some(model) = features.models().find(|m| split.get(m).is_none()) {
        return Err(Error::Validation {
            file: tsv::file_label(&paths.split),
            line: 0,
            field: "model_id".into(),
            message: format!("model `{model}` from the features file has no partition"),
        });
    }
    Ok(Tables {
        features,
        langvecs,
        perf,
        split,
    })
}

impl Tables {
    pub fn save_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.features.save(&dir.join("features.tsv"))?;
        self.langvecs.save(&dir.join("langvec.tsv"))?;
        self.perf.save(&dir.join("perf.tsv"))?;
        self.split.save(&dir.join("split.tsv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_feature_records() {
        let text = "# comment\nm1\ten\t4\t1 2 3 4\nm2\ten\t4\t0.5 0.25 -1 2e-3\n";
        let t = FeatureTable::parse(text, "features.tsv").unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("m2", "en").unwrap()[3], 2e-3);
    }

    #[test]
    fn short_vector_names_the_line() {
        let text = "m1\ten\t4\t1 2 3 4\nm2\ten\t4\t1 2 3\n";
        let err = FeatureTable::parse(text, "features.tsv").unwrap_err();
        match err {
            Error::Validation { line, ref message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("dimension mismatch"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn records_of_different_dimension_are_rejected() {
        let text = "m1\ten\t2\t1 2\nm2\ten\t3\t1 2 3\n";
        let err = FeatureTable::parse(text, "f").unwrap_err();
        assert!(matches!(err, Error::Validation { line: 2, .. }));
    }

    #[test]
    fn duplicate_feature_key_is_rejected() {
        let text = "m1\ten\t1\t1\nm1\ten\t1\t2\n";
        let err = FeatureTable::parse(text, "f").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn malformed_line_is_a_parse_error() {
        let err = FeatureTable::parse("m1\ten\t1\n", "f").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = PerfTable::parse("m1\tar\tdev\tabc\n", "p").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let err = FeatureTable::parse("m1\ten\t2\t1 NaN\n", "f").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
        let err = PerfTable::parse("m1\tar\tdev\tinf\n", "p").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }

    #[test]
    fn syntax_vectors_must_be_binary() {
        let err = LangEmbeddingTable::parse("ar\tsyntax\t3\t0 1 0.5\n", "l", LangDimPolicy::Consistent)
            .unwrap_err();
        assert!(err.to_string().contains("syntax vectors must be binary"), "{err}");
    }

    #[test]
    fn standard_policy_enforces_lang2vec_dims() {
        let err = LangEmbeddingTable::parse("ar\ttypological\t3\t0 1 2\n", "l", LangDimPolicy::Standard)
            .unwrap_err();
        assert!(err.to_string().contains("512"), "{err}");
        let ok = LangEmbeddingTable::parse("ar\ttypological\t3\t0 1 2\nde\ttypological\t3\t1 1 1\n", "l", LangDimPolicy::Consistent)
            .unwrap();
        assert_eq!(ok.dim(EmbeddingKind::Typological), Some(3));
        let err = LangEmbeddingTable::parse("ar\ttypological\t3\t0 1 2\nde\ttypological\t2\t1 1\n", "l", LangDimPolicy::Consistent)
            .unwrap_err();
        assert!(matches!(err, Error::Validation { line: 2, .. }));
    }

    #[test]
    fn split_rejects_unknown_partition_and_duplicates() {
        assert!(MetaSplit::parse("m1\tholdout\n", "s").is_err());
        assert!(MetaSplit::parse("m1\ttrain\nm1\ttest\n", "s").is_err());
        let s = MetaSplit::parse("m2\ttest\nm1\ttrain\nm3\ttrain\n", "s").unwrap();
        assert_eq!(s.models(Partition::Train), vec!["m1", "m3"]);
    }

    #[test]
    fn empty_eval_set_is_rejected() {
        let err = PerfTable::parse("m1\tar\t \t1\n", "p").unwrap_err();
        assert!(matches!(err, Error::Validation { .. }));
    }
}
