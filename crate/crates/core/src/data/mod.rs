//! Domain tables, the text interchange formats, and cross-table validation.
//!
//! All files are UTF-8 with one tab-separated record per line; `#` lines are
//! comments. Floats are written with 17 significant digits so that a
//! save/load cycle is bit-exact.

mod config;
mod tables;
pub(crate) mod tsv;
mod validate;

pub use config::{ExperimentConfig, FeatureStrategy, KeyValues, LangEmbeddingKind};
pub use tables::{
    load_tables, EmbeddingKind, FeatureTable, LangDimPolicy, LangEmbeddingTable, MetaSplit,
    Partition, PerfTable, TablePaths, Tables, SYNTAX_DIM, TYPOLOGICAL_DIM,
};
pub use tsv::format_f64;
pub use validate::{required_corpora, validate, Violation};

/// Reads a file holding one float per line (comments allowed).
pub fn load_float_column(path: &std::path::Path) -> crate::Result<Vec<f64>> {
    let text = tsv::read_file(path)?;
    let file = tsv::file_label(path);
    tsv::records(&text)
        .map(|rec| {
            tsv::expect_fields(&file, &rec, 1, "value")?;
            tsv::parse_float(&file, rec.line, "value", rec.fields[0])
        })
        .collect()
}
