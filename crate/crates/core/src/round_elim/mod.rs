//! Round elimination at desk scale: good inputs, message classes, shattered
//! index sets, the protocol transformation, the parameter recurrence, and the
//! zero-round endpoint.

mod eliminate;
mod recurrence;
mod vc;

pub use eliminate::{
    eliminate_round, eliminate_round_with, two_round_reference, EliminationConfig,
    EliminationDiagnostics,
};
pub use recurrence::{
    check_recurrences, recurrence_table, ClosingArithmetic, Log2Value, RecurrenceRow,
    RecurrenceTable,
};
pub use vc::{
    binomial_prefix_sum, sauer_bound_check, shattered_set, vc_dimension, PatternEntry,
    ShatterCertificate, VC_MAX_N, VC_MAX_SET,
};

use crate::bitstring::{BitString, GhdParams};
use crate::distributions::Distribution;
use crate::error::{invalid, Result};
use crate::limits::check_pairs;
use crate::protocols::{error_exact, DeterministicProtocol};
use crate::report::CheckReport;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Per-input exact conditional error of a protocol under μ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodInputs {
    pub eps: f64,
    /// x0 with Pr_μ[P errs | x = x0] <= 2 eps.
    pub good: Vec<BitString>,
    /// x0 with no defined partner y (μ conditioned on them is undefined).
    pub excluded: Vec<BitString>,
    /// Overall μ-error of the protocol.
    pub overall_error: f64,
}

/// The good inputs of P: exact conditional errors over all pairs.
pub fn good_inputs(proto: &DeterministicProtocol, p: &GhdParams, eps: f64) -> Result<GoodInputs> {
    if proto.n() != p.n {
        return invalid("protocol and instance lengths differ");
    }
    if !(0.0..=1.0).contains(&eps) {
        return invalid("eps must lie in [0, 1]");
    }
    check_pairs(p.n)?;
    let n = p.n;
    let per_x: Vec<(u64, u64)> = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            let x = BitString::from_u64(a, n);
            let (mut errors, mut defined) = (0u64, 0u64);
            for b in 0..1u64 << n {
                if let Some(bit) = p.classify_distance((a ^ b).count_ones() as usize).as_bit() {
                    defined += 1;
                    errors += (proto.run(&x, &BitString::from_u64(b, n))? != bit) as u64;
                }
            }
            Ok((errors, defined))
        })
        .collect::<Result<_>>()?;
    let mut out = GoodInputs {
        eps,
        good: Vec::new(),
        excluded: Vec::new(),
        overall_error: 0.0,
    };
    let (mut errs, mut total) = (0u64, 0u64);
    for (a, &(e, d)) in per_x.iter().enumerate() {
        let x = BitString::from_u64(a as u64, n);
        errs += e;
        total += d;
        if d == 0 {
            out.excluded.push(x);
        } else if e as f64 <= 2.0 * eps * d as f64 {
            out.good.push(x);
        }
    }
    out.overall_error = if total == 0 {
        0.0
    } else {
        errs as f64 / total as f64
    };
    Ok(out)
}

/// Both constant protocols have μ-error exactly 1/2.
pub fn zero_round_check(p: &GhdParams) -> Result<CheckReport> {
    if p.n < 2 {
        return invalid("the zero-round lemma needs n > 1");
    }
    if !p.has_defined_inputs() {
        return invalid(format!("μ has empty support at n = {}, c = {}", p.n, p.gap));
    }
    let zero = error_exact(
        &DeterministicProtocol::constant(p.n, false),
        p,
        Distribution::Mu,
    )?;
    let one = error_exact(
        &DeterministicProtocol::constant(p.n, true),
        p,
        Distribution::Mu,
    )?;
    let half = |r: &crate::protocols::ErrorReport| 2 * r.errors == r.total;
    Ok(CheckReport::new(
        "zero_round",
        json!({ "n": p.n, "c": p.gap.to_string() }),
        zero.error,
        0.5,
        half(&zero) && half(&one),
    )
    .detail("error_constant_0", json!([zero.errors, zero.total]))
    .detail("error_constant_1", json!([one.errors, one.total])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::Gap;
    use std::sync::Arc;

    #[test]
    fn zero_round_small_n() {
        for n in 2..=8 {
            let p = GhdParams::new(n, Gap::from_c(1, 2).unwrap()).unwrap();
            assert!(zero_round_check(&p).unwrap().pass, "n={n}");
        }
        let p = GhdParams::new(8, Gap::integer(1)).unwrap();
        assert!(zero_round_check(&p).unwrap().pass);
        assert!(zero_round_check(&GhdParams::new(1, Gap::integer(1)).unwrap()).is_err());
        assert!(zero_round_check(&GhdParams::new(4, Gap::integer(2)).unwrap()).is_err());
    }

    #[test]
    fn good_inputs_examples() {
        let p = GhdParams::new(6, Gap::integer(1)).unwrap();
        let exact = DeterministicProtocol::alice_sends_input(&p);
        assert_eq!(good_inputs(&exact, &p, 0.0).unwrap().good.len(), 64);
        // wrong exactly when x = 0^n
        let base = exact.clone();
        let bad_at_zero = DeterministicProtocol::from_callbacks(
            6,
            vec![6],
            crate::protocols::Speaker::Alice,
            vec![Arc::new(|x, _| Ok(x.clone()))],
            Arc::new(move |y, t| {
                let v = base.output(y, t)?;
                Ok(if t[0].weight() == 0 { !v } else { v })
            }),
        )
        .unwrap();
        let g = good_inputs(&bad_at_zero, &p, 0.01).unwrap();
        assert_eq!(g.good.len(), 63);
        assert!(!g.good.contains(&BitString::zeros(6)));
    }

    #[test]
    fn markov_on_random_tables() {
        use crate::distributions::SeededRng;
        let p = GhdParams::new(10, Gap::integer(1)).unwrap();
        let mut rng = SeededRng::from_seed(11);
        for _ in 0..3 {
            let proto = DeterministicProtocol::random_table(10, 3, &mut rng).unwrap();
            let g = good_inputs(&proto, &p, 0.5).unwrap();
            if g.overall_error <= 0.5 {
                assert!(g.good.len() >= 512);
            }
            let g = good_inputs(&proto, &p, g.overall_error).unwrap();
            assert!(g.good.len() >= 512);
        }
    }
}
