//! Small statistics helpers for Monte Carlo reports.

use statrs::function::beta::beta_reg;

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    assert!(trials > 0 && successes <= trials);
    let alpha = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let lo = if successes == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, k, n - k + 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, k + 1.0, n - k)
    };
    (lo, hi)
}

/// Half-width of the 95% Clopper–Pearson interval, measured from the point estimate
/// to the farther endpoint.
pub fn ci95_halfwidth(successes: u64, trials: u64) -> f64 {
    let (lo, hi) = clopper_pearson(successes, trials, 0.95);
    let p = successes as f64 / trials as f64;
    (p - lo).max(hi - p)
}

fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided normal tail beyond three standard deviations.
pub const THREE_SIGMA_TAIL: f64 = 0.001_349_898_031_630_094_6;

/// Whether `successes` out of `trials` is consistent with success probability `p`
/// at the three-sigma level, using exact binomial tails rather than the normal
/// approximation (which misjudges counts near zero).
pub fn binomial_consistent_3sigma(successes: u64, trials: u64, p: f64) -> bool {
    assert!(trials > 0 && successes <= trials && (0.0..=1.0).contains(&p));
    let (k, n) = (successes as f64, trials as f64);
    // P(X >= k) = I_p(k, n - k + 1), P(X <= k) = 1 - I_p(k + 1, n - k)
    let upper = if successes == 0 {
        1.0
    } else {
        beta_reg(k, n - k + 1.0, p)
    };
    let lower = if successes == trials {
        1.0
    } else {
        1.0 - beta_reg(k + 1.0, n - k, p)
    };
    upper > THREE_SIGMA_TAIL && lower > THREE_SIGMA_TAIL
}

/// Binomial standard deviation of a proportion.
pub fn proportion_sigma(p: f64, trials: u64) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; `None` when either
/// side is constant or the lengths differ.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(xs), average_ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clopper_pearson_reference_values() {
        // 5/20 at 95%: (0.0865715, 0.4910459)
        let (lo, hi) = clopper_pearson(5, 20, 0.95);
        assert!((lo - 0.086_571_5).abs() < 1e-6);
        assert!((hi - 0.491_045_9).abs() < 1e-6);
        let (lo, hi) = clopper_pearson(0, 10, 0.95);
        assert_eq!(lo, 0.0);
        assert!((hi - 0.308_497_1).abs() < 1e-6);
    }

    #[test]
    fn binomial_three_sigma_consistency() {
        // one error where 0.076 are expected is unremarkable
        assert!(binomial_consistent_3sigma(1, 20_000, 3.8e-6));
        assert!(!binomial_consistent_3sigma(5, 20_000, 3.8e-6));
        assert!(binomial_consistent_3sigma(0, 20_000, 3.8e-6));
        assert!(binomial_consistent_3sigma(5_000, 10_000, 0.5));
        assert!(!binomial_consistent_3sigma(5_200, 10_000, 0.5));
        assert!(!binomial_consistent_3sigma(0, 100, 0.5));
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        assert_eq!(spearman(&[1.0, 2.0], &[5.0, 5.0]), None);
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }
}
