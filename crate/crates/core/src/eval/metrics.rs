use std::collections::HashMap;

use crate::error::{Error, Result};

/// Fraction of strictly ordered gold pairs whose predicted difference has
/// the same sign. Predicted ties count as wrong. `None` with fewer than two
/// candidates or no strictly ordered gold pair.
pub fn pairwise_accuracy(predicted: &[f64], gold: &[f64]) -> Result<Option<f64>> {
    if predicted.len() != gold.len() {
        return Err(Error::contract("predicted and gold score lists differ in length"));
    }
    let (mut right, mut total) = (0usize, 0usize);
    for i in 0..gold.len() {
        for j in i + 1..gold.len() {
            let g = gold[i] - gold[j];
            if g == 0.0 {
                continue;
            }
            total += 1;
            let p = predicted[i] - predicted[j];
            if (g > 0.0 && p > 0.0) || (g < 0.0 && p < 0.0) {
                right += 1;
            }
        }
    }
    Ok((total > 0).then(|| right as f64 / total as f64))
}

/// Kendall tau-a between two scorings of the same items:
/// `(concordant - discordant) / C(n, 2)`. Pairs tied in either scoring
/// count as neither.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::contract("rankings differ in length"));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::contract("kendall tau needs at least two items"));
    }
    let mut s: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let x = (a[i] - a[j]).partial_cmp(&0.0).map(|o| o as i64).unwrap_or(0);
            let y = (b[i] - b[j]).partial_cmp(&0.0).map(|o| o as i64).unwrap_or(0);
            s += x * y;
        }
    }
    Ok(s as f64 / (n * (n - 1) / 2) as f64)
}

/// Kendall tau-a between two orderings (best first) of the same items.
pub fn kendall_tau_orders<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    let pos: HashMap<&str, usize> = b.iter().enumerate().map(|(i, s)| (s.as_ref(), i)).collect();
    if a.len() != b.len() || pos.len() != b.len() {
        return Err(Error::contract("orderings must hold the same distinct items"));
    }
    let mut rank_b = Vec::with_capacity(a.len());
    for item in a {
        let p = pos
            .get(item.as_ref())
            .ok_or_else(|| Error::contract(format!("item `{}` missing from the second ordering", item.as_ref())))?;
        rank_b.push(-(*p as f64));
    }
    let rank_a: Vec<f64> = (0..a.len()).map(|i| -(i as f64)).collect();
    kendall_tau(&rank_a, &rank_b)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Equal-width bins over `[min, max]`; the top edge falls in the last bin.
/// When all scores are equal there is a single bin holding them.
pub fn score_histogram(scores: &[f64], bins: usize) -> Result<Vec<HistBin>> {
    if bins == 0 {
        return Err(Error::Invalid("bins must be at least 1".into()));
    }
    if scores.is_empty() {
        return Err(Error::Invalid("no scores to bin".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Invalid("scores must be finite".into()));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min == max {
        return Ok(vec![HistBin {
            low: min,
            high: max,
            count: scores.len(),
        }]);
    }
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistBin> = (0..bins)
        .map(|i| HistBin {
            low: min + i as f64 * width,
            high: if i + 1 == bins { max } else { min + (i + 1) as f64 * width },
            count: 0,
        })
        .collect();
    for &s in scores {
        let i = (((s - min) / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    Ok(out)
}

pub fn histogram_to_tsv(bins: &[HistBin]) -> String {
    let mut out = String::from("bin_low\tbin_high\tcount\n");
    for b in bins {
        out.push_str(&format!("{}\t{}\t{}\n", b.low, b.high, b.count));
    }
    out
}
