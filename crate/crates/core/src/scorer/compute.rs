//! Forward pass and analytic gradient of the pairwise loss.
//!
//! Everything is evaluated batched: the inputs of a batch are stacked into
//! matrices so each branch costs two matrix products forward and three
//! backward. Reductions run in input order, so results do not depend on
//! anything but the batch contents.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::params::{Branch, Head, ScorerParams};
use crate::error::{Error, Result};

/// Model-side features of one candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelFeatures<'a> {
    Single(&'a [f64]),
    /// `[english, context, target]`, combined with the learned fusion weights.
    Fused([&'a [f64]; 3]),
}

/// Everything the scorer reads for one (model, language[, task]) triple.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScorerInput<'a> {
    pub model: ModelFeatures<'a>,
    pub lang: Option<&'a [f64]>,
    pub task: Option<&'a str>,
}

impl<'a> ScorerInput<'a> {
    pub fn single(features: &'a [f64], lang: Option<&'a [f64]>) -> Self {
        Self {
            model: ModelFeatures::Single(features),
            lang,
            task: None,
        }
    }
}

/// A labelled training pair: `winner` outperformed `loser` on the same language.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredPair<'a> {
    pub winner: ScorerInput<'a>,
    pub loser: ScorerInput<'a>,
}

/// `w[0]·f_eng + w[1]·f_context + w[2]·f_target`, componentwise.
pub fn fuse(features: [&[f64]; 3], w: &[f64]) -> Result<Vec<f64>> {
    if w.len() != 3 {
        return Err(Error::contract(format!("fusion needs 3 weights, got {}", w.len())));
    }
    let n = features[0].len();
    if features.iter().any(|f| f.len() != n) {
        return Err(Error::contract("fusion inputs differ in length"));
    }
    Ok((0..n)
        .map(|i| w[0] * features[0][i] + w[1] * features[1][i] + w[2] * features[2][i])
        .collect())
}

/// `W2 · relu(W1 · x + b1) + b2` for a single input.
pub fn ffnn_forward(x: &[f64], branch: &Branch) -> Result<Array1<f64>> {
    if x.len() != branch.input_dim() {
        return Err(Error::contract(format!(
            "branch expects input of length {}, got {}",
            branch.input_dim(),
            x.len()
        )));
    }
    let x = ArrayView2::from_shape((1, x.len()), x).expect("row view");
    let (_, out) = branch_forward(branch, x);
    Ok(out.row(0).to_owned())
}

pub(crate) fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Rows of `x` through the branch. Returns (hidden activations, outputs).
fn branch_forward(b: &Branch, x: ArrayView2<'_, f64>) -> (Array2<f64>, Array2<f64>) {
    let mut hidden = Array2::zeros((x.nrows(), b.hidden_dim()));
    general_mat_mul(1.0, &x, &b.w1.t(), 0.0, &mut hidden);
    hidden += &b.b1;
    hidden.mapv_inplace(relu);
    let mut out = Array2::zeros((x.nrows(), b.output_dim()));
    general_mat_mul(1.0, &hidden, &b.w2.t(), 0.0, &mut out);
    out += &b.b2;
    (hidden, out)
}

/// Accumulates parameter gradients into `grad` and returns d(loss)/d(x).
fn branch_backward(
    b: &Branch,
    x: ArrayView2<'_, f64>,
    hidden: &Array2<f64>,
    d_out: &Array2<f64>,
    grad: &mut Branch,
) -> Array2<f64> {
    general_mat_mul(1.0, &d_out.t(), hidden, 1.0, &mut grad.w2);
    grad.b2 += &d_out.sum_axis(Axis(0));
    let mut d_hidden = Array2::zeros(hidden.raw_dim());
    general_mat_mul(1.0, d_out, &b.w2, 0.0, &mut d_hidden);
    // relu'(0) = 0: units that are exactly zero pass no gradient.
    ndarray::Zip::from(&mut d_hidden)
        .and(hidden)
        .for_each(|d, &h| {
            if h <= 0.0 {
                *d = 0.0
            }
        });
    general_mat_mul(1.0, &d_hidden.t(), &x, 1.0, &mut grad.w1);
    grad.b1 += &d_hidden.sum_axis(Axis(0));
    let mut d_x = Array2::zeros(x.raw_dim());
    general_mat_mul(1.0, &d_hidden, &b.w1, 0.0, &mut d_x);
    d_x
}

/// Stacked inputs of a batch, ready for the branches.
struct Stacked<'a> {
    model_x: Array2<f64>,
    /// Raw fusion sources per row, kept for the fusion-weight gradient.
    fused_sources: Vec<[&'a [f64]; 3]>,
    /// Distinct language-branch inputs (embedding ‖ task vector).
    lang_x: Option<Array2<f64>>,
    lang_tasks: Vec<Option<&'a str>>,
    /// Row of `lang_x` used by each input.
    lang_index: Vec<usize>,
}

fn check_input(params: &ScorerParams, input: &ScorerInput<'_>) -> Result<()> {
    let d = params.model_dim();
    match (&input.model, params.fusion_w.is_some()) {
        (ModelFeatures::Single(f), false) => {
            if f.len() != d {
                return Err(Error::contract(format!("model features have length {}, expected {d}", f.len())));
            }
        }
        (ModelFeatures::Fused(fs), true) => {
            if fs.iter().any(|f| f.len() != d) {
                return Err(Error::contract(format!("fusion features must all have length {d}")));
            }
        }
        (ModelFeatures::Single(_), true) => {
            return Err(Error::contract("fusion scorer needs three feature vectors"))
        }
        (ModelFeatures::Fused(_), false) => {
            return Err(Error::contract("scorer without fusion weights got three feature vectors"))
        }
    }
    match (&params.head, input.lang) {
        (Head::Bilinear { .. }, Some(l)) => {
            let expected = params.lang_dim().unwrap_or(0);
            if l.len() != expected {
                return Err(Error::contract(format!(
                    "language embedding has length {}, expected {expected}",
                    l.len()
                )));
            }
        }
        (Head::Bilinear { .. }, None) => {
            return Err(Error::contract("bilinear scorer needs a language embedding"))
        }
        (Head::Direct { .. }, Some(_)) => {
            return Err(Error::contract("scorer without language branch got a language embedding"))
        }
        (Head::Direct { .. }, None) => {}
    }
    match (&params.task_emb, input.task) {
        (Some(tasks), Some(t)) => {
            if !tasks.contains_key(t) {
                return Err(Error::contract(format!("unknown task `{t}`")));
            }
        }
        (Some(_), None) => return Err(Error::contract("task-mode scorer needs a task id")),
        (None, Some(t)) => {
            return Err(Error::contract(format!("scorer has no task embeddings but got task `{t}`")))
        }
        (None, None) => {}
    }
    Ok(())
}

fn stack<'a>(params: &ScorerParams, inputs: &[ScorerInput<'a>]) -> Result<Stacked<'a>> {
    for input in inputs {
        check_input(params, input)?;
    }
    let d = params.model_dim();
    let mut model_x = Array2::zeros((inputs.len(), d));
    let mut fused_sources = Vec::new();
    for (r, input) in inputs.iter().enumerate() {
        let mut row = model_x.row_mut(r);
        match input.model {
            ModelFeatures::Single(f) => row.assign(&ArrayView1::from(f)),
            ModelFeatures::Fused(fs) => {
                let w = params.fusion_w.as_ref().expect("checked");
                for (k, f) in fs.iter().enumerate() {
                    row.scaled_add(w[k], &ArrayView1::from(*f));
                }
                fused_sources.push(fs);
            }
        }
    }

    let (lang_x, lang_tasks, lang_index) = match &params.head {
        Head::Direct { .. } => (None, Vec::new(), Vec::new()),
        Head::Bilinear { lang, .. } => {
            let mut uniques: Vec<(&'a [f64], Option<&'a str>)> = Vec::new();
            let mut index = Vec::with_capacity(inputs.len());
            for input in inputs {
                let key = (input.lang.expect("checked"), input.task);
                let pos = uniques
                    .iter()
                    .position(|u| u.1 == key.1 && (std::ptr::eq(u.0, key.0) || u.0 == key.0));
                index.push(match pos {
                    Some(p) => p,
                    None => {
                        uniques.push(key);
                        uniques.len() - 1
                    }
                });
            }
            let mut x = Array2::zeros((uniques.len(), lang.input_dim()));
            for (r, (emb, task)) in uniques.iter().enumerate() {
                let mut row = x.row_mut(r);
                row.slice_mut(s![..emb.len()]).assign(&ArrayView1::from(*emb));
                if let Some(t) = task {
                    let te = &params.task_emb.as_ref().expect("checked")[*t];
                    row.slice_mut(s![emb.len()..]).assign(te);
                }
            }
            (Some(x), uniques.into_iter().map(|u| u.1).collect(), index)
        }
    };
    Ok(Stacked {
        model_x,
        fused_sources,
        lang_x,
        lang_tasks,
        lang_index,
    })
}

/// Intermediate values of a batched forward pass.
struct Forward {
    model_hidden: Array2<f64>,
    model_out: Array2<f64>,
    lang_hidden: Option<Array2<f64>>,
    lang_out: Option<Array2<f64>>,
    /// `W_bi · b` per distinct language row.
    lang_proj: Option<Array2<f64>>,
    scores: Vec<f64>,
}

fn forward(params: &ScorerParams, st: &Stacked<'_>) -> Forward {
    let (model_hidden, model_out) = branch_forward(&params.model, st.model_x.view());
    match &params.head {
        Head::Direct { v, c } => {
            let scores = model_out.dot(v).iter().map(|s| s + c).collect();
            Forward {
                model_hidden,
                model_out,
                lang_hidden: None,
                lang_out: None,
                lang_proj: None,
                scores,
            }
        }
        Head::Bilinear { lang, w_bi } => {
            let lx = st.lang_x.as_ref().expect("bilinear stacks language rows");
            let (lang_hidden, lang_out) = branch_forward(lang, lx.view());
            let proj = lang_out.dot(&w_bi.t());
            let scores = st
                .lang_index
                .iter()
                .enumerate()
                .map(|(r, &u)| model_out.row(r).dot(&proj.row(u)))
                .collect();
            Forward {
                model_hidden,
                model_out,
                lang_hidden: Some(lang_hidden),
                lang_out: Some(lang_out),
                lang_proj: Some(proj),
                scores,
            }
        }
    }
}

/// Scores of many inputs in one batched pass.
pub fn score_many(params: &ScorerParams, inputs: &[ScorerInput<'_>]) -> Result<Vec<f64>> {
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let st = stack(params, inputs)?;
    Ok(forward(params, &st).scores)
}

/// `s(m, l[, t])` for one input.
pub fn score(params: &ScorerParams, input: &ScorerInput<'_>) -> Result<f64> {
    Ok(score_many(params, std::slice::from_ref(input))?[0])
}

fn interleave<'a>(pairs: &[ScoredPair<'a>]) -> Vec<ScorerInput<'a>> {
    pairs.iter().flat_map(|p| [p.winner, p.loser]).collect()
}

/// Mean of `softplus(-(s_winner - s_loser))` over the pairs.
pub fn batch_loss(params: &ScorerParams, pairs: &[ScoredPair<'_>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    let scores = score_many(params, &interleave(pairs))?;
    let total: f64 = scores.chunks(2).map(|s| softplus(s[1] - s[0])).sum();
    Ok(total / pairs.len() as f64)
}

/// Mean pairwise loss of the batch and its gradient with respect to every parameter.
pub fn loss_and_grad(params: &ScorerParams, pairs: &[ScoredPair<'_>]) -> Result<(f64, ScorerParams)> {
    if pairs.is_empty() {
        return Err(Error::contract("empty batch"));
    }
    let inputs = interleave(pairs);
    let st = stack(params, &inputs)?;
    let fw = forward(params, &st);
    let n = pairs.len() as f64;

    let mut loss = 0.0;
    let mut d_score = vec![0.0; inputs.len()];
    for (p, s) in fw.scores.chunks(2).enumerate() {
        let gap = s[0] - s[1];
        loss += softplus(-gap);
        let g = -sigmoid(-gap) / n;
        d_score[2 * p] = g;
        d_score[2 * p + 1] = -g;
    }
    loss /= n;

    let mut grad = params.zeros_like();
    let k = params.output_dim();
    let mut d_model_out = Array2::zeros((inputs.len(), k));

    match (&params.head, &mut grad.head) {
        (Head::Direct { v, .. }, Head::Direct { v: gv, c: gc }) => {
            for (r, &ds) in d_score.iter().enumerate() {
                gv.scaled_add(ds, &fw.model_out.row(r));
                *gc += ds;
                d_model_out.row_mut(r).scaled_add(ds, v);
            }
        }
        (
            Head::Bilinear { lang, w_bi },
            Head::Bilinear {
                lang: g_lang,
                w_bi: g_w,
            },
        ) => {
            let proj = fw.lang_proj.as_ref().expect("bilinear forward");
            let lang_out = fw.lang_out.as_ref().expect("bilinear forward");
            let mut d_proj = Array2::zeros(proj.raw_dim());
            for (r, &ds) in d_score.iter().enumerate() {
                let u = st.lang_index[r];
                d_model_out.row_mut(r).scaled_add(ds, &proj.row(u));
                d_proj.row_mut(u).scaled_add(ds, &fw.model_out.row(r));
            }
            // proj_u = W · b_u, so dW = d_proj^T · B and dB = d_proj · W.
            general_mat_mul(1.0, &d_proj.t(), lang_out, 1.0, g_w);
            let d_lang_out = d_proj.dot(w_bi);
            let lx = st.lang_x.as_ref().expect("bilinear stacks language rows");
            let d_lang_x = branch_backward(
                lang,
                lx.view(),
                fw.lang_hidden.as_ref().expect("bilinear forward"),
                &d_lang_out,
                g_lang,
            );
            if let Some(g_tasks) = grad.task_emb.as_mut() {
                let lang_dim = params.lang_dim().unwrap_or(0);
                for (u, task) in st.lang_tasks.iter().enumerate() {
                    if let Some(t) = task {
                        let g = g_tasks.get_mut(*t).expect("checked");
                        *g += &d_lang_x.row(u).slice(s![lang_dim..]);
                    }
                }
            }
        }
        _ => unreachable!("gradient mirrors the parameter variant"),
    }

    let d_model_x = branch_backward(
        &params.model,
        st.model_x.view(),
        &fw.model_hidden,
        &d_model_out,
        &mut grad.model,
    );
    if let Some(g_fusion) = grad.fusion_w.as_mut() {
        for (r, sources) in st.fused_sources.iter().enumerate() {
            let dx = d_model_x.row(r);
            for (k, f) in sources.iter().enumerate() {
                g_fusion[k] += dx.dot(&ArrayView1::from(*f));
            }
        }
    }
    Ok((loss, grad))
}
