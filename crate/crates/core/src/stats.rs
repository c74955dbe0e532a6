//! Small exact tests used by the security check and by the estimators.

use statrs::distribution::{Binomial, Discrete, DiscreteCDF, Hypergeometric};

/// Two-sided exact binomial test of `successes` out of `trials` against
/// success probability 1/2. The distribution is symmetric, so the p-value is
/// twice the smaller tail, capped at 1.
pub fn binomial_half_two_sided(successes: u64, trials: u64) -> f64 {
    if trials == 0 {
        return 1.0;
    }
    let tail = successes.min(trials - successes);
    let dist = Binomial::new(0.5, trials).expect("valid binomial");
    (2.0 * dist.cdf(tail)).min(1.0)
}

/// P(J = j) for J the number of marked items among `draws` taken without
/// replacement from `population` items of which `marked` are marked.
pub fn hypergeometric_pmf(population: u64, marked: u64, draws: u64, j: u64) -> f64 {
    if population == 0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    Hypergeometric::new(population, marked, draws)
        .map(|d| d.pmf(j))
        .unwrap_or(0.0)
}

/// Binomial standard error of an estimated proportion.
pub fn proportion_stderr(p: f64, trials: u64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    (p * (1.0 - p) / trials as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_p_values() {
        assert_eq!(binomial_half_two_sided(5, 10), 1.0);
        assert_eq!(binomial_half_two_sided(0, 0), 1.0);
        // 2 * 2^-10
        assert!((binomial_half_two_sided(0, 10) - 2.0 / 1024.0).abs() < 1e-15);
        assert!((binomial_half_two_sided(10, 10) - 2.0 / 1024.0).abs() < 1e-15);
        // 2 * (1 + 10 + 45) / 1024
        assert!((binomial_half_two_sided(2, 10) - 112.0 / 1024.0).abs() < 1e-12);
    }

    #[test]
    fn hypergeometric_sums_to_one() {
        let total: f64 = (0..=4).map(|j| hypergeometric_pmf(20, 10, 4, j)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // C(10,4)/C(20,4)
        assert!((hypergeometric_pmf(20, 10, 4, 4) - 210.0 / 4845.0).abs() < 1e-12);
    }
}
