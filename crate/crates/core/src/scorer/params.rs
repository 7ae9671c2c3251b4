use std::collections::BTreeMap;

use ndarray::{Array1, Array2};

/// Weights of one two-layer feed-forward branch: `W2 · relu(W1 · x + b1) + b2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Branch {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, input)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((output, hidden)),
            b2: Array1::zeros(output),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.nrows()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim(), self.output_dim())
    }
}

/// How the model-branch output becomes a scalar score.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum Head {
    /// `a^T W_bi b` with `b` the language-branch output.
    Bilinear { lang: Branch, w_bi: Array2<f64> },
    /// `v^T a + c`, used when no language embedding is available.
    Direct { v: Array1<f64>, c: f64 },
}

/// All learnable parameters of the scoring function.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub model: Branch,
    pub head: Head,
    /// Weights on the (english, context, target) feature vectors; fusion only.
    pub fusion_w: Option<Array1<f64>>,
    /// Per-task vectors appended to the language embedding; task mode only.
    pub task_emb: Option<BTreeMap<String, Array1<f64>>>,
}

/// A named, shaped view of one parameter tensor in row-major order.
pub struct Tensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a [f64],
}

pub struct TensorMut<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: &'a mut [f64],
}

impl ScorerParams {
    pub fn model_dim(&self) -> usize {
        self.model.input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.model.hidden_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.model.output_dim()
    }

    /// Raw language-embedding dimension (excluding any task vector).
    pub fn lang_dim(&self) -> Option<usize> {
        match &self.head {
            Head::Bilinear { lang, .. } => Some(lang.input_dim() - self.task_dim().unwrap_or(0)),
            Head::Direct { .. } => None,
        }
    }

    pub fn task_dim(&self) -> Option<usize> {
        self.task_emb
            .as_ref()
            .and_then(|t| t.values().next().map(Array1::len))
    }

    pub fn is_fusion(&self) -> bool {
        self.fusion_w.is_some()
    }

    /// Same shapes and variant, every component zero.
    pub fn zeros_like(&self) -> Self {
        Self {
            model: self.model.zeros_like(),
            head: match &self.head {
                Head::Bilinear { lang, w_bi } => Head::Bilinear {
                    lang: lang.zeros_like(),
                    w_bi: Array2::zeros(w_bi.raw_dim()),
                },
                Head::Direct { v, .. } => Head::Direct {
                    v: Array1::zeros(v.len()),
                    c: 0.0,
                },
            },
            fusion_w: self.fusion_w.as_ref().map(|w| Array1::zeros(w.len())),
            task_emb: self.task_emb.as_ref().map(|t| {
                t.iter()
                    .map(|(k, v)| (k.clone(), Array1::zeros(v.len())))
                    .collect()
            }),
        }
    }

    /// Every tensor in a fixed canonical order (the parameter-file order).
    pub fn tensors(&self) -> Vec<Tensor<'_>> {
        fn t<'a>(name: impl Into<String>, shape: Vec<usize>, data: &'a [f64]) -> Tensor<'a> {
            Tensor {
                name: name.into(),
                shape,
                data,
            }
        }
        let mut out = Vec::new();
        branch_tensors("model", &self.model, &mut out);
        match &self.head {
            Head::Bilinear { lang, w_bi } => {
                branch_tensors("lang", lang, &mut out);
                out.push(t("bilinear.w", w_bi.shape().to_vec(), contiguous(w_bi.as_slice())));
            }
            Head::Direct { v, c } => {
                out.push(t("head.v", vec![v.len()], contiguous(v.as_slice())));
                out.push(t("head.c", vec![1], std::slice::from_ref(c)));
            }
        }
        if let Some(w) = &self.fusion_w {
            out.push(t("fusion.w", vec![w.len()], contiguous(w.as_slice())));
        }
        if let Some(tasks) = &self.task_emb {
            for (id, e) in tasks {
                out.push(t(format!("task.{id}"), vec![e.len()], contiguous(e.as_slice())));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<TensorMut<'_>> {
        let mut out = Vec::new();
        branch_tensors_mut("model", &mut self.model, &mut out);
        match &mut self.head {
            Head::Bilinear { lang, w_bi } => {
                branch_tensors_mut("lang", lang, &mut out);
                let shape = w_bi.shape().to_vec();
                out.push(TensorMut {
                    name: "bilinear.w".into(),
                    shape,
                    data: contiguous_mut(w_bi.as_slice_mut()),
                });
            }
            Head::Direct { v, c } => {
                out.push(TensorMut {
                    name: "head.v".into(),
                    shape: vec![v.len()],
                    data: contiguous_mut(v.as_slice_mut()),
                });
                out.push(TensorMut {
                    name: "head.c".into(),
                    shape: vec![1],
                    data: std::slice::from_mut(c),
                });
            }
        }
        if let Some(w) = &mut self.fusion_w {
            out.push(TensorMut {
                name: "fusion.w".into(),
                shape: vec![w.len()],
                data: contiguous_mut(w.as_slice_mut()),
            });
        }
        if let Some(tasks) = &mut self.task_emb {
            for (id, e) in tasks.iter_mut() {
                out.push(TensorMut {
                    name: format!("task.{id}"),
                    shape: vec![e.len()],
                    data: contiguous_mut(e.as_slice_mut()),
                });
            }
        }
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }
}

// Parameters are always built in standard layout, so these never fail.
fn contiguous(s: Option<&[f64]>) -> &[f64] {
    s.expect("parameter tensors are contiguous")
}

fn contiguous_mut(s: Option<&mut [f64]>) -> &mut [f64] {
    s.expect("parameter tensors are contiguous")
}

fn branch_tensors<'a>(prefix: &str, b: &'a Branch, out: &mut Vec<Tensor<'a>>) {
    let mut push = |suffix: &str, shape: Vec<usize>, data: &'a [f64]| {
        out.push(Tensor {
            name: format!("{prefix}.{suffix}"),
            shape,
            data,
        })
    };
    push("w1", b.w1.shape().to_vec(), contiguous(b.w1.as_slice()));
    push("b1", vec![b.b1.len()], contiguous(b.b1.as_slice()));
    push("w2", b.w2.shape().to_vec(), contiguous(b.w2.as_slice()));
    push("b2", vec![b.b2.len()], contiguous(b.b2.as_slice()));
}

fn branch_tensors_mut<'a>(prefix: &str, b: &'a mut Branch, out: &mut Vec<TensorMut<'a>>) {
    let Branch { w1, b1, w2, b2 } = b;
    let s = w1.shape().to_vec();
    out.push(TensorMut {
        name: format!("{prefix}.w1"),
        shape: s,
        data: contiguous_mut(w1.as_slice_mut()),
    });
    out.push(TensorMut {
        name: format!("{prefix}.b1"),
        shape: vec![b1.len()],
        data: contiguous_mut(b1.as_slice_mut()),
    });
    let s = w2.shape().to_vec();
    out.push(TensorMut {
        name: format!("{prefix}.w2"),
        shape: s,
        data: contiguous_mut(w2.as_slice_mut()),
    });
    out.push(TensorMut {
        name: format!("{prefix}.b2"),
        shape: vec![b2.len()],
        data: contiguous_mut(b2.as_slice_mut()),
    });
}
