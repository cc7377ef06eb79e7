use super::rng::{parallel_trials, SeededRng};
use crate::error::{invalid, Result};
use crate::numeric::{binomial_pmf_table, neumaier_sum};
use crate::stats::{binomial_consistent_3sigma, ci95_halfwidth};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One sample-size row of the biased-coin experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoinRow {
    pub samples: u64,
    pub trials: u64,
    pub error: f64,
    pub ci95_halfwidth: f64,
    pub exact_error: f64,
    /// The error count lies inside the exact binomial three-sigma tails around `exact_error`.
    pub within_3sigma: bool,
}

/// Error of the majority-vote distinguisher with `s` flips: the guess is
/// "heads-biased" iff heads > s/2, so a tie always counts as an error.
pub fn coin_exact_error(eps: f64, s: u64) -> f64 {
    let table = binomial_pmf_table(s, 0.5 + eps);
    // by symmetry both coins err with the same probability
    neumaier_sum(table.iter().take((s / 2) as usize + 1).cloned())
}

/// Distinguishes heads-probability 1/2 + eps from 1/2 - eps (each with
/// probability 1/2) by majority vote over `s` flips, for each `s` in the grid.
pub fn coin_distinguisher_experiment(
    eps: f64,
    sample_grid: &[u64],
    trials: u64,
    rng: &mut SeededRng,
) -> Result<Vec<CoinRow>> {
    if !(eps > 0.0 && eps < 0.5) {
        return invalid(format!("need 0 < eps < 1/2, got {eps}"));
    }
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let mut rows = Vec::with_capacity(sample_grid.len());
    for &s in sample_grid {
        if s == 0 {
            return invalid("sample counts must be positive");
        }
        let outcomes = parallel_trials(rng, trials, |r, _| {
            let heads_biased = r.random::<bool>();
            let p = if heads_biased { 0.5 + eps } else { 0.5 - eps };
            let heads = (0..s).filter(|_| r.random::<f64>() < p).count() as u64;
            let guess = 2 * heads > s;
            let tie = 2 * heads == s;
            tie || guess != heads_biased
        });
        let errors = outcomes.iter().filter(|&&e| e).count() as u64;
        let error = errors as f64 / trials as f64;
        let exact = coin_exact_error(eps, s);
        rows.push(CoinRow {
            samples: s,
            trials,
            error,
            ci95_halfwidth: ci95_halfwidth(errors, trials),
            exact_error: exact,
            within_3sigma: binomial_consistent_3sigma(errors, trials, exact),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_errors() {
        assert!((coin_exact_error(0.1, 1) - 0.4).abs() < 1e-15);
        assert!((coin_exact_error(0.1, 10) - 0.366_896_742_4).abs() < 1e-9);
        assert!(coin_exact_error(0.1, 500) < 1e-5);
    }

    #[test]
    fn experiment_rows() {
        let mut rng = SeededRng::from_seed(12);
        let rows = coin_distinguisher_experiment(0.1, &[1, 10, 500], 20_000, &mut rng).unwrap();
        assert!(rows.iter().all(|r| r.within_3sigma));
        assert!(rows[1].error > 1.0 / 3.0);
        assert!(rows[2].error < 1.0 / 3.0);
        let again = coin_distinguisher_experiment(
            0.1,
            &[1, 10, 500],
            20_000,
            &mut SeededRng::from_seed(12),
        )
        .unwrap();
        assert_eq!(rows, again);
        assert!(coin_distinguisher_experiment(0.5, &[1], 10, &mut rng).is_err());
    }
}
