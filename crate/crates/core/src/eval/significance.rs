use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest input the exhaustive bootstrap enumerates (`n^n` resamples).
pub const EXHAUSTIVE_MAX_LEN: usize = 8;

fn check_deltas(delta: &[f64]) -> Result<()> {
    if delta.is_empty() {
        return Err(Error::Invalid("paired bootstrap needs at least one delta".into()));
    }
    if delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::Invalid("deltas must be finite".into()));
    }
    Ok(())
}

/// One-sided paired bootstrap for "A beats B": the fraction of `b`
/// resamples (with replacement, ChaCha8 seeded with `seed`) whose mean
/// delta is at most zero.
pub fn paired_bootstrap(delta: &[f64], b: usize, seed: u64) -> Result<f64> {
    check_deltas(delta)?;
    if b == 0 {
        return Err(Error::Invalid("B must be at least 1".into()));
    }
    let n = delta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0usize;
    for _ in 0..b {
        let sum: f64 = (0..n).map(|_| delta[rng.random_range(0..n)]).sum();
        if sum <= 0.0 {
            hits += 1;
        }
    }
    Ok(hits as f64 / b as f64)
}

/// The same p-value computed over all `n^n` equally likely resamples.
pub fn paired_bootstrap_exhaustive(delta: &[f64]) -> Result<f64> {
    check_deltas(delta)?;
    let n = delta.len();
    if n > EXHAUSTIVE_MAX_LEN {
        return Err(Error::Invalid(format!(
            "exhaustive enumeration is limited to {EXHAUSTIVE_MAX_LEN} deltas"
        )));
    }
    let total = n.pow(n as u32);
    let mut idx = vec![0usize; n];
    let mut hits = 0usize;
    for _ in 0..total {
        let sum: f64 = idx.iter().map(|&i| delta[i]).sum();
        if sum <= 0.0 {
            hits += 1;
        }
        for d in idx.iter_mut() {
            *d += 1;
            if *d < n {
                break;
            }
            *d = 0;
        }
    }
    Ok(hits as f64 / total as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZTest {
    pub z: f64,
    /// One-sided `P(Z >= z)` for "A beats B".
    pub p: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Z statistic on per-split scores, `z = (mean_a - mean_b) / sqrt(s_a^2 + s_b^2)`
/// with unbiased sample variances. Zero spread: equal means give `z = 0`,
/// `p = 0.5`; otherwise `z` is infinite and `p` is 0 or 1.
pub fn z_test(a: &[f64], b: &[f64]) -> Result<ZTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Invalid("z test needs at least two scores per side".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let spread = (va + vb).sqrt();
    let diff = ma - mb;
    if spread == 0.0 {
        return Ok(if diff == 0.0 {
            ZTest { z: 0.0, p: 0.5 }
        } else if diff > 0.0 {
            ZTest { z: f64::INFINITY, p: 0.0 }
        } else {
            ZTest {
                z: f64::NEG_INFINITY,
                p: 1.0,
            }
        });
    }
    let z = diff / spread;
    let normal = Normal::standard();
    Ok(ZTest { z, p: normal.sf(z) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bootstrap_edge_cases() {
        assert_eq!(paired_bootstrap(&[1.0; 5], 200, 1).unwrap(), 0.0);
        assert_eq!(paired_bootstrap(&[0.0; 5], 200, 1).unwrap(), 1.0);
        assert!(paired_bootstrap(&[], 10, 1).is_err());
        assert!(paired_bootstrap(&[1.0], 0, 1).is_err());
    }

    #[test]
    fn exhaustive_two_deltas() {
        assert_eq!(paired_bootstrap_exhaustive(&[1.0, -1.0]).unwrap(), 0.75);
    }

    #[test]
    fn sampled_agrees_with_exhaustive() {
        let d = [0.5, -0.2, 0.1];
        let exact = paired_bootstrap_exhaustive(&d).unwrap();
        let approx = paired_bootstrap(&d, 20_000, 3).unwrap();
        assert!((exact - approx).abs() < 0.01, "{exact} vs {approx}");
    }

    #[test]
    fn z_examples() {
        let t = z_test(&[2.0, 4.0], &[1.0, 3.0]).unwrap();
        assert!((t.z - 0.5).abs() < 1e-15);
        assert!((t.p - 0.3085375387259869).abs() < 1e-12);
        assert_eq!(z_test(&[1.0, 2.0], &[1.0, 2.0]).unwrap().p, 0.5);
        let same = z_test(&[3.0, 3.0], &[3.0, 3.0]).unwrap();
        assert_eq!((same.z, same.p), (0.0, 0.5));
        assert_eq!(z_test(&[1.0; 4], &[0.0; 4]).unwrap().p, 0.0);
        assert_eq!(z_test(&[0.0; 4], &[1.0; 4]).unwrap().p, 1.0);
    }
}
