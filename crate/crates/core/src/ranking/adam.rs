use crate::scorer::ScorerParams;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled weight decay, applied as `p -= lr * weight_decay * p`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// First and second moment estimates, one buffer per tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ScorerParams) -> Self {
        Self::with_sizes(params.tensors().iter().map(|t| t.data.len()))
    }

    pub fn with_sizes(sizes: impl IntoIterator<Item = usize>) -> Self {
        let m: Vec<Vec<f64>> = sizes.into_iter().map(|n| vec![0.0; n]).collect();
        Self {
            v: m.clone(),
            m,
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update over flat buffers, one slice per tensor.
pub fn adam_update(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, cfg: &AdamConfig, lr: f64) {
    assert_eq!(params.len(), state.m.len(), "tensor count differs from optimizer state");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (k, p) in params.iter_mut().enumerate() {
        let (g, m, v) = (grads[k], &mut state.m[k], &mut state.v[k]);
        assert_eq!(p.len(), g.len(), "gradient shape differs from parameter shape");
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            if cfg.weight_decay != 0.0 {
                p[i] -= lr * cfg.weight_decay * p[i];
            }
            p[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

pub fn adam_step(params: &mut ScorerParams, grads: &ScorerParams, state: &mut AdamState, cfg: &AdamConfig, lr: f64) {
    let g_tensors = grads.tensors();
    let g: Vec<&[f64]> = g_tensors.iter().map(|t| t.data).collect();
    let mut p_tensors = params.tensors_mut();
    let mut p: Vec<&mut [f64]> = p_tensors.iter_mut().map(|t| &mut *t.data).collect();
    adam_update(&mut p, &g, state, cfg, lr);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(p: &mut f64, g: f64, state: &mut AdamState, lr: f64) {
        let mut buf = [*p];
        adam_update(&mut [&mut buf[..]], &[&[g]], state, &AdamConfig::default(), lr);
        *p = buf[0];
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::with_sizes([1]);
        let mut p = 0.37;
        run(&mut p, 0.0, &mut state, 0.1);
        assert_eq!(p, 0.37);
    }

    #[test]
    fn first_step_is_lr_over_one_plus_eps() {
        let mut state = AdamState::with_sizes([1]);
        let mut p = 0.0;
        run(&mut p, 1.0, &mut state, 0.1);
        assert!((p - (-0.1 / (1.0 + 1e-8))).abs() < 1e-15, "{p}");
        assert!((p + 0.09999999900).abs() < 1e-11);
    }

    #[test]
    fn constant_gradient_repeats_step() {
        let mut state = AdamState::with_sizes([1]);
        let mut p = 0.0;
        run(&mut p, 1.0, &mut state, 0.1);
        let first = p;
        run(&mut p, 1.0, &mut state, 0.1);
        assert!(((p - first) - first).abs() < 1e-12);
        assert_eq!(state.step(), 2);
    }

    #[test]
    fn decoupled_decay_shrinks_toward_zero() {
        let mut state = AdamState::with_sizes([1]);
        let mut buf = [2.0];
        let cfg = AdamConfig {
            weight_decay: 0.5,
            ..AdamConfig::default()
        };
        adam_update(&mut [&mut buf[..]], &[&[0.0]], &mut state, &cfg, 0.1);
        assert_eq!(buf[0], 2.0 - 0.1 * 0.5 * 2.0);
    }
}
