//! Text parameter files.
//!
//! ```text
//! lmsparams v1
//! model.w1<TAB>1024x32<TAB>v v v ...
//! model.b1<TAB>1024<TAB>...
//! ```
//!
//! One line per tensor in canonical order; values row-major with 17
//! significant digits, so loading a saved file reproduces the parameters
//! bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::params::{Branch, Head, ScorerParams};
use crate::data::format_f64;
use crate::data::tsv;
use crate::error::{Error, Result};

pub const PARAMS_HEADER: &str = "lmsparams v1";

pub fn params_to_string(params: &ScorerParams) -> String {
    let mut out = String::from(PARAMS_HEADER);
    out.push('\n');
    for t in params.tensors() {
        let shape: Vec<String> = t.shape.iter().map(usize::to_string).collect();
        out.push_str(&t.name);
        out.push('\t');
        out.push_str(&shape.join("x"));
        out.push('\t');
        let values: Vec<String> = t.data.iter().map(|v| format_f64(*v)).collect();
        out.push_str(&values.join(" "));
        out.push('\n');
    }
    out
}

pub fn save_params(params: &ScorerParams, path: &Path) -> Result<()> {
    tsv::write_file(path, &params_to_string(params))
}

pub fn load_params(path: &Path) -> Result<ScorerParams> {
    params_from_str(&tsv::read_file(path)?, &tsv::file_label(path))
}

struct RawTensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

fn shape_err(name: &str, message: impl Into<String>) -> Error {
    Error::TensorShape {
        name: name.to_string(),
        message: message.into(),
    }
}

pub fn params_from_str(text: &str, file: &str) -> Result<ScorerParams> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l.trim()).unwrap_or("");
    if header != PARAMS_HEADER {
        return Err(Error::ParamVersion(header.to_string()));
    }

    let mut raw: BTreeMap<String, RawTensor> = BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(tsv::parse_error(file, i + 1, "expected `name<TAB>shape<TAB>values`"));
        }
        let name = fields[0].trim();
        let shape = fields[1]
            .split('x')
            .map(|d| d.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| tsv::parse_error(file, i + 1, format!("bad shape `{}`", fields[1])))?;
        let values = fields[2]
            .split_whitespace()
            .map(|v| tsv::parse_float(file, i + 1, name, v))
            .collect::<Result<Vec<f64>>>()?;
        let expected: usize = shape.iter().product();
        if values.len() != expected {
            return Err(shape_err(
                name,
                format!("shape {} needs {expected} values, found {}", fields[1], values.len()),
            ));
        }
        if raw.insert(name.to_string(), RawTensor { shape, values }).is_some() {
            return Err(tsv::validation_error(file, i + 1, name, "tensor given twice"));
        }
    }

    let direct = raw.contains_key("head.v") || raw.contains_key("head.c");
    let mut take = |name: &str| raw.remove(name).ok_or_else(|| Error::MissingTensor(name.to_string()));
    let model = take_branch(&mut take, "model")?;
    let k = model.output_dim();
    let head = if direct {
        let v = vector(take("head.v")?, "head.v", k)?;
        let c = vector(take("head.c")?, "head.c", 1)?[0];
        Head::Direct { v, c }
    } else {
        let lang = take_branch(&mut take, "lang")?;
        if lang.output_dim() != k {
            return Err(shape_err("lang.w2", format!("output dimension must match model branch ({k})")));
        }
        let w_bi = matrix(take("bilinear.w")?, "bilinear.w", Some((k, k)))?;
        Head::Bilinear { lang, w_bi }
    };
    let fusion_w = match take("fusion.w") {
        Ok(t) => Some(vector(t, "fusion.w", 3)?),
        Err(_) => None,
    };

    let task_names: Vec<String> = raw.keys().filter(|n| n.starts_with("task.")).cloned().collect();
    let task_emb = if task_names.is_empty() {
        None
    } else {
        let mut tasks = BTreeMap::new();
        for name in task_names {
            let t = raw.remove(&name).expect("listed");
            let len = t.values.len();
            tasks.insert(name["task.".len()..].to_string(), vector(t, &name, len)?);
        }
        Some(tasks)
    };
    if let Some(name) = raw.keys().next() {
        return Err(shape_err(name, "unknown tensor"));
    }

    let params = ScorerParams {
        model,
        head,
        fusion_w,
        task_emb,
    };
    check_task_shapes(&params)?;
    Ok(params)
}

fn check_task_shapes(p: &ScorerParams) -> Result<()> {
    let Some(tasks) = &p.task_emb else {
        return Ok(());
    };
    let dim = p.task_dim().unwrap_or(0);
    if let Some((id, _)) = tasks.iter().find(|(_, e)| e.len() != dim) {
        return Err(shape_err(&format!("task.{id}"), "task vectors differ in length"));
    }
    match &p.head {
        Head::Bilinear { lang, .. } if lang.input_dim() > dim => Ok(()),
        Head::Bilinear { .. } => Err(shape_err("lang.w1", "input must hold the language embedding plus the task vector")),
        Head::Direct { .. } => Err(shape_err("task", "task vectors need a language branch")),
    }
}

fn take_branch(take: &mut impl FnMut(&str) -> Result<RawTensor>, prefix: &str) -> Result<Branch> {
    let n = |s: &str| format!("{prefix}.{s}");
    let w1 = matrix(take(&n("w1"))?, &n("w1"), None)?;
    let (h, _) = w1.dim();
    let b1 = vector(take(&n("b1"))?, &n("b1"), h)?;
    let w2 = matrix(take(&n("w2"))?, &n("w2"), None)?;
    if w2.ncols() != h {
        return Err(shape_err(&n("w2"), format!("must have {h} columns")));
    }
    let b2 = vector(take(&n("b2"))?, &n("b2"), w2.nrows())?;
    Ok(Branch { w1, b1, w2, b2 })
}

fn matrix(t: RawTensor, name: &str, expect: Option<(usize, usize)>) -> Result<Array2<f64>> {
    let [r, c] = t.shape[..] else {
        return Err(shape_err(name, "expected a matrix shape `rows x cols`"));
    };
    if let Some(e) = expect {
        if e != (r, c) {
            return Err(shape_err(name, format!("expected shape {}x{}", e.0, e.1)));
        }
    }
    Array2::from_shape_vec((r, c), t.values).map_err(|e| shape_err(name, e.to_string()))
}

fn vector(t: RawTensor, name: &str, len: usize) -> Result<Array1<f64>> {
    if t.shape != [len] {
        return Err(shape_err(name, format!("expected shape {len}")));
    }
    Ok(Array1::from(t.values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{init_params, ScorerShape};

    fn shape() -> ScorerShape {
        ScorerShape {
            hidden: 5,
            output: 3,
            fusion: true,
            tasks: vec!["main".into(), "aux".into()],
            task_dim: 2,
            ..ScorerShape::new(4, Some(3))
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        for lang in [Some(3), None] {
            let s = ScorerShape {
                lang_dim: lang,
                tasks: if lang.is_some() { shape().tasks } else { vec![] },
                ..shape()
            };
            let p = init_params(&s, 42).unwrap();
            let back = params_from_str(&params_to_string(&p), "p").unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn wrong_version_is_rejected() {
        let text = params_to_string(&init_params(&shape(), 1).unwrap()).replacen("v1", "v0", 1);
        assert!(matches!(params_from_str(&text, "p"), Err(Error::ParamVersion(v)) if v == "lmsparams v0"));
    }

    #[test]
    fn truncated_file_names_missing_tensor() {
        let text = params_to_string(&init_params(&shape(), 1).unwrap());
        let kept: Vec<&str> = text.lines().take(6).collect();
        let err = params_from_str(&kept.join("\n"), "p").unwrap_err();
        assert!(matches!(&err, Error::MissingTensor(n) if n == "lang.b1"), "{err}");
    }

    #[test]
    fn cut_line_is_a_shape_error() {
        let text = params_to_string(&init_params(&shape(), 1).unwrap());
        let cut = &text[..text.len() - 30];
        assert!(matches!(params_from_str(cut, "p"), Err(Error::TensorShape { .. })));
    }
}
