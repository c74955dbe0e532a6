#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// |count/trials − p| ≤ k·σ with σ the binomial standard error at p.
pub fn within_sigma(count: u64, trials: u64, p: f64, k: f64) -> bool {
    let observed = count as f64 / trials as f64;
    let sigma = (p * (1.0 - p) / trials as f64).sqrt();
    (observed - p).abs() <= k * sigma + 1e-12
}

/// Pearson goodness-of-fit p-value.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> f64 {
    assert_eq!(observed.len(), probs.len());
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    upper_tail(stat, observed.len() - 1)
}

/// Pearson homogeneity p-value for two histograms over the same categories.
/// Categories empty in both rows are dropped.
pub fn chi_square_homogeneity(a: &[u64], b: &[u64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let cols: Vec<(u64, u64)> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x, y))
        .filter(|&(x, y)| x + y > 0)
        .collect();
    let (na, nb) = (
        cols.iter().map(|c| c.0).sum::<u64>() as f64,
        cols.iter().map(|c| c.1).sum::<u64>() as f64,
    );
    let n = na + nb;
    let stat: f64 = cols
        .iter()
        .map(|&(x, y)| {
            let col = (x + y) as f64;
            let (ea, eb) = (na * col / n, nb * col / n);
            (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb
        })
        .sum();
    upper_tail(stat, cols.len() - 1)
}

fn upper_tail(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    1.0 - ChiSquared::new(df as f64).unwrap().cdf(stat)
}
