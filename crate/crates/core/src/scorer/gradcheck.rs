//! Central finite-difference check of the analytic gradient on random
//! small scorers covering every variant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::compute::{batch_loss, loss_and_grad, ModelFeatures, ScoredPair, ScorerInput};
use super::init::{init_params, ScorerShape};
use super::params::ScorerParams;
use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;
pub const REL_TOLERANCE: f64 = 1e-5;
/// Smallest denominator of the relative error. Gradients below it are
/// compared in absolute terms scaled by it, since central differences carry
/// roundoff of order `f64::EPSILON / FD_STEP` whatever the gradient's size.
pub const SCALE_FLOOR: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Bilinear,
    Direct,
    Fusion,
    Task,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Bilinear, Variant::Direct, Variant::Fusion, Variant::Task];
}

/// A random scorer and a batch of pairs, owning all feature data.
#[derive(Clone, Debug)]
pub struct GradCase {
    pub variant: Variant,
    pub params: ScorerParams,
    /// Per pair, per side: model feature vectors (1 or 3), language vector, task.
    sides: Vec<[Side; 2]>,
}

#[derive(Clone, Debug)]
struct Side {
    features: Vec<Vec<f64>>,
    lang: Option<Vec<f64>>,
    task: Option<String>,
}

fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

impl GradCase {
    pub fn random(rng: &mut ChaCha8Rng, variant: Variant) -> Result<Self> {
        let model_dim = rng.random_range(1..=8);
        let lang_dim = (variant != Variant::Direct).then(|| rng.random_range(1..=6));
        let tasks: Vec<String> = if variant == Variant::Task {
            vec!["main".into(), "aux".into()]
        } else {
            Vec::new()
        };
        let shape = ScorerShape {
            model_dim,
            lang_dim,
            hidden: rng.random_range(1..=8),
            output: rng.random_range(1..=4),
            fusion: variant == Variant::Fusion,
            tasks: tasks.clone(),
            task_dim: rng.random_range(1..=3),
        };
        let mut params = init_params(&shape, rng.random())?;
        for t in params.tensors_mut() {
            for v in t.data.iter_mut() {
                *v = rng.random_range(-1.0..1.0);
            }
        }
        let n_pairs = rng.random_range(1..=5);
        let n_feat = if variant == Variant::Fusion { 3 } else { 1 };
        let mut sides = Vec::with_capacity(n_pairs);
        for _ in 0..n_pairs {
            // Both members of a pair share the language and task.
            let lang = lang_dim.map(|d| uniform_vec(rng, d));
            let task = (!tasks.is_empty()).then(|| tasks[rng.random_range(0..tasks.len())].clone());
            let mut side = || Side {
                features: (0..n_feat).map(|_| uniform_vec(rng, model_dim)).collect(),
                lang: lang.clone(),
                task: task.clone(),
            };
            sides.push([side(), side()]);
        }
        Ok(Self {
            variant,
            params,
            sides,
        })
    }

    pub fn pairs(&self) -> Vec<ScoredPair<'_>> {
        fn input(s: &Side) -> ScorerInput<'_> {
            let model = if s.features.len() == 3 {
                ModelFeatures::Fused([&s.features[0], &s.features[1], &s.features[2]])
            } else {
                ModelFeatures::Single(&s.features[0])
            };
            ScorerInput {
                model,
                lang: s.lang.as_deref(),
                task: s.task.as_deref(),
            }
        }
        self.sides
            .iter()
            .map(|[w, l]| ScoredPair {
                winner: input(w),
                loser: input(l),
            })
            .collect()
    }
}

/// `|a - n| / max(|a|, |n|, SCALE_FLOOR)`.
pub fn component_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(SCALE_FLOOR)
}

/// Largest [`component_error`] between the analytic gradient and central
/// differences of `loss`, over every parameter component.
pub fn max_gradient_error(
    params: &ScorerParams,
    analytic: &ScorerParams,
    mut loss: impl FnMut(&ScorerParams) -> Result<f64>,
) -> Result<(f64, usize)> {
    let mut probe = params.clone();
    let grads: Vec<Vec<f64>> = analytic.tensors().iter().map(|t| t.data.to_vec()).collect();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (ti, g) in grads.iter().enumerate() {
        for (ci, &a) in g.iter().enumerate() {
            let original = probe.tensors_mut()[ti].data[ci];
            probe.tensors_mut()[ti].data[ci] = original + FD_STEP;
            let up = loss(&probe)?;
            probe.tensors_mut()[ti].data[ci] = original - FD_STEP;
            let down = loss(&probe)?;
            probe.tensors_mut()[ti].data[ci] = original;
            let numeric = (up - down) / (2.0 * FD_STEP);
            worst = worst.max(component_error(a, numeric));
            count += 1;
        }
    }
    Ok((worst, count))
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub cases: usize,
    pub components: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < REL_TOLERANCE
    }
}

/// Checks `n_cases` random scorers, cycling through every variant.
pub fn gradcheck(seed: u64, n_cases: usize) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport {
        cases: 0,
        components: 0,
        max_rel_error: 0.0,
    };
    for i in 0..n_cases {
        let case = GradCase::random(&mut rng, Variant::ALL[i % Variant::ALL.len()])?;
        let pairs = case.pairs();
        let (_, grad) = loss_and_grad(&case.params, &pairs)?;
        let (err, n) = max_gradient_error(&case.params, &grad, |p| batch_loss(p, &pairs))?;
        report.cases += 1;
        report.components += n;
        report.max_rel_error = report.max_rel_error.max(err);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_variant_passes() {
        let r = gradcheck(9, 24).unwrap();
        assert!(r.passed(), "max relative error {}", r.max_rel_error);
        assert!(r.components > 100);
    }

    #[test]
    fn a_wrong_gradient_is_caught() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let case = GradCase::random(&mut rng, Variant::Bilinear).unwrap();
        let pairs = case.pairs();
        let (_, mut grad) = loss_and_grad(&case.params, &pairs).unwrap();
        grad.tensors_mut()[0].data[0] += 0.1;
        let (err, _) = max_gradient_error(&case.params, &grad, |p| batch_loss(p, &pairs)).unwrap();
        assert!(err > REL_TOLERANCE);
    }
}
