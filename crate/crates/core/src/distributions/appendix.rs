use super::tails::{
    binomial_interval, hush_scovel_bound, hypergeom_tail_gt, hypergeom_tail_le, tail_tn, TailResult,
};
use crate::bitstring::{BitString, Gap, GhdParams};
use crate::error::{invalid, GhdError, Result};
use crate::numeric::{normal_phi, normal_tail};
use crate::report::{CheckReport, TailMethod};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::json;

/// Floor that forgives rounding just below an integer.
fn floor_tol(v: f64) -> f64 {
    (v + 1e-9).floor()
}

fn ratio(num: TailResult, den: TailResult) -> (f64, f64) {
    let value = num.value / den.value;
    let err = (num.abs_error_bound + value * den.abs_error_bound) / den.value;
    (value, err)
}

/// Smallest w with w >= n/2 - a sqrt(n), decided exactly.
fn first_weight_at_least(n: u64, a: Gap) -> u64 {
    match a.thresholds(n).close_max {
        None => 0,
        Some(w) => {
            // w <= n/2 - a sqrt(n); equality keeps w inside
            let dev = (n - 2 * w) as u128;
            let on_boundary =
                dev * dev * a.c_squared_den as u128 == 4 * a.c_squared_num as u128 * n as u128;
            if on_boundary {
                w
            } else {
                w + 1
            }
        }
    }
}

/// Pr[|y| >= n/2 - 2.1 sqrt(n) | |y| <= n/2 - 2 sqrt(n)] under U_n, against 1/3.
pub fn verify_claim_tooclose(n: u64) -> Result<CheckReport> {
    if n < 1000 {
        return invalid(format!("the claim is asymptotic; need n >= 1000, got {n}"));
    }
    let top = Gap::integer(2)
        .thresholds(n)
        .close_max
        .expect("n >= 1000 has weights below n/2 - 2 sqrt(n)");
    let bottom = first_weight_at_least(n, Gap::from_c(21, 10)?);
    let band = binomial_interval(n, bottom, top);
    let below = binomial_interval(n, 0, top);
    let (value, err) = ratio(band, below);
    let normal = (normal_tail(4.0) - normal_tail(4.2)) / normal_tail(4.0);
    Ok(CheckReport::new(
        "verify_claim_tooclose",
        json!({ "n": n }),
        value,
        1.0 / 3.0,
        value + err <= 1.0 / 3.0,
    )
    .with_method(band.method, err)
    .detail("band", json!([bottom, top]))
    .detail("normal_ratio", normal)
    .detail(
        "within_15pct_of_normal_ratio",
        (value / normal - 1.0).abs() <= 0.15,
    ))
}

/// Smallest γ >= 1 - (1 - c/α)/4 with γn integral.
pub fn claim_hyp_min_gamma(n: u64, c: f64, alpha: f64) -> f64 {
    let lower = 1.0 - (1.0 - c / alpha) / 4.0;
    (lower * n as f64 - 1e-9).ceil() / n as f64
}

/// Exact Pr[K <= γn/2 - ((α+c)/2) sqrt(n)] for K ~ Hyp(n, γn, n/2 - α sqrt(n)):
/// the probability that a string at distance n/2 - α sqrt(n) below the centre
/// lands at distance >= n/2 + c sqrt(n) from x with |x| = γn.
pub fn verify_claim_hyp(n: u64, c: f64, alpha: f64, gamma: f64) -> Result<CheckReport> {
    if !(c > 0.0 && alpha > c) {
        return invalid(format!("need 0 < c < alpha, got c={c}, alpha={alpha}"));
    }
    let lower = 1.0 - (1.0 - c / alpha) / 4.0;
    if !(gamma >= lower - 1e-12 && gamma <= 1.0) {
        return invalid(format!("need {lower} <= gamma <= 1, got {gamma}"));
    }
    let m_real = gamma * n as f64;
    if (m_real - m_real.round()).abs() > 1e-9 * n as f64 {
        return invalid(format!("gamma * n = {m_real} is not an integer"));
    }
    let m = m_real.round() as u64;
    let root = (n as f64).sqrt();
    let n1_real = floor_tol(n as f64 / 2.0 - alpha * root);
    if n1_real < 0.0 {
        return invalid("n/2 - alpha sqrt(n) is negative");
    }
    let n1 = n1_real as u64;
    let kmax = floor_tol(m as f64 / 2.0 - (alpha + c) / 2.0 * root) as i64;
    let value = hypergeom_tail_le(kmax, n, m, n1)?;
    let closed = 1.0 - (-2.0 * (alpha - c) * alpha * alpha / (3.0 * alpha + c)).exp();
    let closed_ok = value >= closed - 0.02;
    Ok(CheckReport::new(
        "verify_claim_hyp",
        json!({ "n": n, "c": c, "alpha": alpha, "gamma": gamma }),
        value,
        0.95,
        value >= 0.95 && closed_ok,
    )
    .with_method(TailMethod::LogSpaceFloat, 1e-12)
    .detail("m", m)
    .detail("n1", n1)
    .detail("kmax", kmax)
    .detail("meets_0_95", value >= 0.95)
    .detail("closed_form", closed)
    .detail("closed_form_pass", closed_ok))
}

/// Fraction of y for which GHD(x, y) is defined; equal to T_n(c) for every x.
pub fn fraction_defined(p: &GhdParams) -> Result<TailResult> {
    tail_tn(p.n as u64, p.gap)
}

/// Exhaustive count of the y with GHD(x, y) defined, over all 2^n strings.
pub fn fraction_defined_exhaustive(p: &GhdParams, x: &BitString) -> Result<BigRational> {
    if p.n > 24 || x.len() != p.n {
        return invalid("exhaustive count needs n <= 24 and |x| = n");
    }
    let base = x.to_u64();
    let defined = (0..1u64 << p.n)
        .filter(|y| {
            p.classify_distance((y ^ base).count_ones() as usize)
                .is_defined()
        })
        .count();
    Ok(BigRational::new(
        BigInt::from(defined),
        BigInt::from(1u64 << p.n),
    ))
}

/// fraction_defined against the appendix lower bound e^{-2c^2}/(5c).
pub fn fraction_defined_report(p: &GhdParams) -> Result<CheckReport> {
    let f = fraction_defined(p)?;
    let c = p.c();
    let bound = (-2.0 * c * c).exp() / (5.0 * c);
    Ok(CheckReport::new(
        "fraction_defined",
        json!({ "n": p.n, "c": p.gap.to_string() }),
        f.value,
        bound,
        f.value - f.abs_error_bound >= bound,
    )
    .with_method(f.method, f.abs_error_bound)
    .detail("asymptotic", true))
}

/// φ(x)(1/x - 1/x^3) < N(x) < φ(x)/x.
pub fn feller_bracket_check(x: f64) -> Result<CheckReport> {
    if !(x > 0.0) {
        return invalid("the bracket needs x > 0");
    }
    let value = normal_tail(x);
    let phi = normal_phi(x);
    let (lower, upper) = (phi * (1.0 / x - 1.0 / x.powi(3)), phi / x);
    Ok(CheckReport::new(
        "feller_bracket",
        json!({ "x": x }),
        value,
        upper,
        lower < value && value < upper,
    )
    .detail("lower", lower))
}

/// Exact Pr[K - E[K] > η] against exp(-2βη^2) with a 5% allowance for the
/// asymptotic factor.
pub fn hush_scovel_check(n: u64, m: u64, n1: u64, eta: f64) -> Result<CheckReport> {
    let bound = hush_scovel_bound(n, m, n1, eta)?;
    let mean = m as f64 * n1 as f64 / n as f64;
    let exact = hypergeom_tail_gt(floor_tol(mean + eta) as i64, n, m, n1)?;
    Ok(CheckReport::new(
        "hush_scovel_bound",
        json!({ "n": n, "m": m, "n1": n1, "eta": eta }),
        exact,
        bound * 1.05,
        exact <= bound * 1.05,
    )
    .with_method(TailMethod::LogSpaceFloat, 1e-12)
    .detail("bound_without_slack", bound)
    .detail("asymptotic", true))
}

/// Tooclose, hyp at (c, α) = (2, 2.1) with the least admissible γ, the Feller
/// bracket at x ∈ {1, 2, 4}, and fraction_defined at c = 2.
pub fn appendix_suite(n: u64) -> Result<Vec<CheckReport>> {
    let mut out = vec![
        verify_claim_tooclose(n)?,
        verify_claim_hyp(n, 2.0, 2.1, claim_hyp_min_gamma(n, 2.0, 2.1))?,
    ];
    for x in [1.0, 2.0, 4.0] {
        out.push(feller_bracket_check(x)?);
    }
    let p = GhdParams::new(
        usize::try_from(n).map_err(|_| GhdError::InvalidArgument("n too large".into()))?,
        Gap::integer(2),
    )?;
    out.push(fraction_defined_report(&p)?);
    Ok(out)
}
