//! Input distributions, exact tail probabilities and the numeric checks of
//! the analytic bounds built on them.

mod appendix;
mod coin;
mod rng;
mod tails;

pub use appendix::{
    appendix_suite, claim_hyp_min_gamma, feller_bracket_check, fraction_defined,
    fraction_defined_exhaustive, fraction_defined_report, hush_scovel_check, verify_claim_hyp,
    verify_claim_tooclose,
};
pub use coin::{coin_distinguisher_experiment, coin_exact_error, CoinRow};
pub use rng::{mix64, parallel_trials, SeededRng};
pub use tails::{
    binom_range_prob, binomial_interval, binomial_interval_exact, hush_scovel_bound, hypergeom_pmf,
    hypergeom_tail_gt, hypergeom_tail_le, inverse_t, ln_tail_t_limit, tail_bracket_check,
    tail_t_limit, tail_tn, tail_tn_exact, RangeProb, TailResult, EXACT_TAIL_MAX_N,
    FLOAT_TAIL_MAX_N,
};

use crate::bitstring::{BitString, GhdParams};
use crate::error::{invalid, Result};
use rand::RngCore;
use serde::{Deserialize, Serialize};

/// Input distribution for error measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Distribution {
    /// U_n x U_n.
    Uniform,
    /// μ_{c,n}: uniform over pairs where GHD is defined.
    Mu,
}

/// A uniform string of length `n`.
pub fn sample_uniform<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> BitString {
    let words = (0..n.div_ceil(64)).map(|_| rng.next_u64()).collect();
    BitString::from_words(n, words)
}

/// A pair drawn from μ_{c,n} by rejection from U_n x U_n.
pub fn sample_mu<R: RngCore + ?Sized>(
    p: &GhdParams,
    rng: &mut R,
) -> Result<(BitString, BitString)> {
    if !p.has_defined_inputs() {
        return invalid(format!("μ has empty support at n = {}, c = {}", p.n, p.gap));
    }
    loop {
        let x = sample_uniform(p.n, rng);
        let y = sample_uniform(p.n, rng);
        if p.classify_distance(crate::bitstring::distance_unchecked(&x, &y))
            .is_defined()
        {
            return Ok((x, y));
        }
    }
}

/// Like [`sample_mu`], also returning how many candidate pairs were drawn.
pub fn sample_mu_counted<R: RngCore + ?Sized>(
    p: &GhdParams,
    rng: &mut R,
) -> Result<((BitString, BitString), u64)> {
    if !p.has_defined_inputs() {
        return invalid(format!("μ has empty support at n = {}, c = {}", p.n, p.gap));
    }
    let mut draws = 0;
    loop {
        draws += 1;
        let x = sample_uniform(p.n, rng);
        let y = sample_uniform(p.n, rng);
        if p.classify_distance(crate::bitstring::distance_unchecked(&x, &y))
            .is_defined()
        {
            return Ok(((x, y), draws));
        }
    }
}
