use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{Branch, Head, ScorerParams};
use crate::error::{Error, Result};

pub const DEFAULT_HIDDEN: usize = 1024;
pub const DEFAULT_OUTPUT: usize = 128;
pub const DEFAULT_TASK_DIM: usize = 16;

/// Shapes and variant flags of a scorer.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerShape {
    pub model_dim: usize,
    /// Language embedding length; `None` selects the direct (no-language) head.
    pub lang_dim: Option<usize>,
    pub hidden: usize,
    pub output: usize,
    pub fusion: bool,
    /// Task ids for task mode; empty otherwise.
    pub tasks: Vec<String>,
    pub task_dim: usize,
}

impl ScorerShape {
    pub fn new(model_dim: usize, lang_dim: Option<usize>) -> Self {
        Self {
            model_dim,
            lang_dim,
            hidden: DEFAULT_HIDDEN,
            output: DEFAULT_OUTPUT,
            fusion: false,
            tasks: Vec::new(),
            task_dim: DEFAULT_TASK_DIM,
        }
    }
}

pub fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    // Weight matrices map cols -> rows.
    let b = glorot_bound(cols, rows);
    let dist = Uniform::new_inclusive(-b, b).expect("finite bound");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

fn branch(rng: &mut ChaCha8Rng, input: usize, hidden: usize, output: usize) -> Branch {
    let w1 = glorot(rng, hidden, input);
    let w2 = glorot(rng, output, hidden);
    Branch {
        w1,
        b1: Array1::zeros(hidden),
        w2,
        b2: Array1::zeros(output),
    }
}

/// Glorot-uniform weights, zero biases, equal fusion weights, small uniform
/// task vectors. Draws come from ChaCha8 seeded with `seed`, in the
/// parameter-file tensor order.
pub fn init_params(shape: &ScorerShape, seed: u64) -> Result<ScorerParams> {
    if shape.model_dim == 0 || shape.hidden == 0 || shape.output == 0 {
        return Err(Error::Invalid("scorer dimensions must be positive".into()));
    }
    if shape.lang_dim == Some(0) {
        return Err(Error::Invalid("language embedding dimension must be positive".into()));
    }
    let with_tasks = !shape.tasks.is_empty();
    if with_tasks && shape.lang_dim.is_none() {
        return Err(Error::Invalid(
            "task embeddings are concatenated to the language embedding, which is absent".into(),
        ));
    }
    if with_tasks && shape.task_dim == 0 {
        return Err(Error::Invalid("task dimension must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = branch(&mut rng, shape.model_dim, shape.hidden, shape.output);
    let head = match shape.lang_dim {
        Some(d) => {
            let lang_in = d + if with_tasks { shape.task_dim } else { 0 };
            let lang = branch(&mut rng, lang_in, shape.hidden, shape.output);
            let w_bi = glorot(&mut rng, shape.output, shape.output);
            Head::Bilinear { lang, w_bi }
        }
        None => {
            let v = glorot(&mut rng, 1, shape.output).into_shape_with_order(shape.output).expect("row");
            Head::Direct { v, c: 0.0 }
        }
    };
    let fusion_w = shape.fusion.then(|| Array1::from_elem(3, 1.0 / 3.0));
    let task_emb = with_tasks.then(|| {
        let dist = Uniform::new_inclusive(-0.1, 0.1).expect("finite bound");
        let mut ids = shape.tasks.clone();
        ids.sort();
        ids.dedup();
        ids.into_iter()
            .map(|id| {
                let e = Array1::from_shape_simple_fn(shape.task_dim, || dist.sample(&mut rng));
                (id, e)
            })
            .collect::<BTreeMap<_, _>>()
    });
    Ok(ScorerParams {
        model,
        head,
        fusion_w,
        task_emb,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(lang: Option<usize>) -> ScorerShape {
        ScorerShape {
            hidden: 3,
            output: 3,
            ..ScorerShape::new(3, lang)
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let s = ScorerShape {
            fusion: true,
            tasks: vec!["re".into(), "arl".into()],
            ..small(Some(4))
        };
        assert_eq!(init_params(&s, 11).unwrap(), init_params(&s, 11).unwrap());
        assert_ne!(init_params(&s, 11).unwrap(), init_params(&s, 12).unwrap());
    }

    #[test]
    fn glorot_bound_for_three_by_three_is_one() {
        assert_eq!(glorot_bound(3, 3), 1.0);
        let p = init_params(&small(Some(3)), 5).unwrap();
        assert!(p.model.w1.iter().all(|w| (-1.0..=1.0).contains(w)));
        assert!(p.model.w1.iter().any(|w| *w != 0.0));
    }

    #[test]
    fn biases_start_at_zero() {
        let p = init_params(&small(Some(2)), 1).unwrap();
        assert!(p.model.b1.iter().chain(p.model.b2.iter()).all(|b| *b == 0.0));
        let Head::Bilinear { lang, .. } = &p.head else {
            panic!("variant")
        };
        assert!(lang.b1.iter().chain(lang.b2.iter()).all(|b| *b == 0.0));
        let p = init_params(&small(None), 1).unwrap();
        assert!(matches!(p.head, Head::Direct { c, .. } if c == 0.0));
    }

    #[test]
    fn fusion_and_task_defaults() {
        let s = ScorerShape {
            fusion: true,
            tasks: vec!["main".into()],
            task_dim: 16,
            ..small(Some(2))
        };
        let p = init_params(&s, 3).unwrap();
        assert_eq!(p.fusion_w.as_ref().unwrap().to_vec(), vec![1.0 / 3.0; 3]);
        let t = &p.task_emb.as_ref().unwrap()["main"];
        assert_eq!(t.len(), 16);
        assert!(t.iter().all(|v| (-0.1..=0.1).contains(v)));
        assert_eq!(p.lang_dim(), Some(2));
    }

    #[test]
    fn tasks_without_language_branch_are_rejected() {
        let s = ScorerShape {
            tasks: vec!["main".into()],
            ..small(None)
        };
        assert!(init_params(&s, 0).is_err());
    }
}
