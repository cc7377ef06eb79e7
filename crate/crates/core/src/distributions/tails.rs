use crate::bitstring::Gap;
use crate::error::{invalid, Result};
use crate::numeric::{binomial_mode, binomial_pmf_table, normal_tail, Hypergeometric};
use crate::report::{CheckReport, TailMethod};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use serde_json::json;

/// Largest n evaluated with exact rational arithmetic.
pub const EXACT_TAIL_MAX_N: u64 = 1_000;
/// Largest n evaluated by floating summation; beyond it the normal approximation is used.
pub const FLOAT_TAIL_MAX_N: u64 = 1 << 24;

/// A probability together with how it was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailResult {
    pub value: f64,
    pub method: TailMethod,
    pub abs_error_bound: f64,
}

impl TailResult {
    fn exact(v: &BigRational) -> Self {
        Self {
            value: v.to_f64().unwrap_or(0.0).clamp(0.0, 1.0),
            method: TailMethod::ExactBigrational,
            abs_error_bound: 0.0,
        }
    }
}

/// Sum of C(n, k) over `lo..=hi` as an exact fraction of 2^n.
pub fn binomial_interval_exact(n: u64, lo: u64, hi: u64) -> BigRational {
    let denom = BigInt::one() << n;
    if lo > hi || lo > n {
        return BigRational::zero();
    }
    let hi = hi.min(n);
    let mut binom = BigUint::one();
    let mut total = BigUint::zero();
    for k in 0..=hi {
        if k >= lo {
            total += &binom;
        }
        binom = binom * (n - k) / (k + 1);
    }
    BigRational::new(BigInt::from(total), denom)
}

/// Fair-coin binomial mass table plus per-entry rounding bound.
struct FairTable {
    mass: Vec<f64>,
    mode: u64,
}

impl FairTable {
    fn new(n: u64) -> Self {
        Self {
            mass: binomial_pmf_table(n, 0.5f64),
            mode: binomial_mode(n, 0.5f64),
        }
    }

    /// Pr[lo <= K <= hi] and an absolute error bound for it.
    fn interval(&self, lo: u64, hi: u64) -> (f64, f64) {
        let n = self.mass.len() as u64 - 1;
        let ulp = f64::EPSILON;
        // normalization spreads the error of the total over every entry
        let spread: f64 = self
            .mass
            .iter()
            .enumerate()
            .map(|(k, p)| p * 3.0 * ((k as u64).abs_diff(self.mode) as f64 + 2.0))
            .sum::<f64>()
            * ulp;
        if lo > hi || lo > n {
            return (0.0, 0.0);
        }
        let hi = hi.min(n);
        let slice = &self.mass[lo as usize..=hi as usize];
        let value = crate::numeric::neumaier_sum(slice.iter().cloned());
        let own: f64 = slice
            .iter()
            .enumerate()
            .map(|(j, p)| p * 3.0 * ((lo + j as u64).abs_diff(self.mode) as f64 + 2.0))
            .sum::<f64>()
            * ulp;
        // entries that underflowed to zero are each below f64::MIN_POSITIVE
        let underflow = n as f64 * f64::MIN_POSITIVE;
        (value.min(1.0), own + value * spread + 4.0 * ulp + underflow)
    }
}

/// Pr[lo <= W <= hi] for W ~ Binom(n, 1/2) by the size-appropriate method.
pub fn binomial_interval(n: u64, lo: u64, hi: u64) -> TailResult {
    if n <= EXACT_TAIL_MAX_N {
        return TailResult::exact(&binomial_interval_exact(n, lo, hi));
    }
    if n <= FLOAT_TAIL_MAX_N {
        let (value, err) = FairTable::new(n).interval(lo, hi);
        return TailResult {
            value,
            method: TailMethod::LogSpaceFloat,
            abs_error_bound: err,
        };
    }
    normal_interval(n, lo, hi)
}

/// Continuity-corrected normal approximation; error from the Berry–Esseen
/// bound 0.4748/sqrt(n) per endpoint for a fair coin.
fn normal_interval(n: u64, lo: u64, hi: u64) -> TailResult {
    let (mean, sd) = (n as f64 / 2.0, (n as f64).sqrt() / 2.0);
    let z = |k: f64| (k - mean) / sd;
    let value = if lo > hi {
        0.0
    } else {
        let upper = if hi >= n {
            0.0
        } else {
            normal_tail(z(hi as f64 + 0.5))
        };
        let lower = if lo == 0 {
            1.0
        } else {
            normal_tail(z(lo as f64 - 0.5))
        };
        (lower - upper).max(0.0)
    };
    TailResult {
        value,
        method: TailMethod::NormalApprox,
        abs_error_bound: 2.0 * 0.4748 / (n as f64).sqrt(),
    }
}

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return invalid("n must be at least 1");
    }
    Ok(())
}

/// T_n(c) = Pr[|W - n/2| >= c sqrt(n)] for W ~ Binom(n, 1/2).
pub fn tail_tn(n: u64, gap: Gap) -> Result<TailResult> {
    check_n(n)?;
    if n <= EXACT_TAIL_MAX_N {
        return Ok(TailResult::exact(&tail_tn_exact(n, gap)?));
    }
    let t = gap.thresholds(n);
    let pieces: Vec<TailResult> = [t.close_max.map(|c| (0, c)), t.far_min.map(|f| (f, n))]
        .into_iter()
        .flatten()
        .map(|(lo, hi)| binomial_interval(n, lo, hi))
        .collect();
    if pieces.len() == 2 && t.close_max.unwrap() + 1 >= t.far_min.unwrap() {
        // c = 0: the two sides overlap and cover everything
        return Ok(binomial_interval(n, 0, n));
    }
    let method = pieces
        .first()
        .map(|p| p.method)
        .unwrap_or(TailMethod::LogSpaceFloat);
    Ok(TailResult {
        value: pieces.iter().map(|p| p.value).sum::<f64>().min(1.0),
        method,
        abs_error_bound: pieces.iter().map(|p| p.abs_error_bound).sum(),
    })
}

/// T_n(c) as an exact fraction. Cost is O(n) big-integer operations.
pub fn tail_tn_exact(n: u64, gap: Gap) -> Result<BigRational> {
    check_n(n)?;
    if n > 1 << 16 {
        return invalid(format!("exact tail limited to n <= 65536, got {n}"));
    }
    let t = gap.thresholds(n);
    Ok(match (t.close_max, t.far_min) {
        (Some(c), Some(f)) if c + 1 >= f => BigRational::one(),
        (c, f) => {
            let low = c.map_or_else(BigRational::zero, |c| binomial_interval_exact(n, 0, c));
            let high = f.map_or_else(BigRational::zero, |f| binomial_interval_exact(n, f, n));
            low + high
        }
    })
}

/// The normal-tail bracket 2^(-3c²-2) <= T_n(c) <= 1.02 · 2^(-c²), with the
/// distance to the limit T(c) alongside.
pub fn tail_bracket_check(n: u64, gap: Gap) -> Result<CheckReport> {
    let t = tail_tn(n, gap)?;
    let c = gap.c();
    let lower = 2f64.powf(-3.0 * c * c - 2.0);
    let upper = 1.02 * 2f64.powf(-c * c);
    let limit = tail_t_limit(c);
    Ok(CheckReport::new(
        "tail_bracket",
        json!({ "n": n, "c": gap.to_string() }),
        t.value,
        upper,
        lower <= t.value - t.abs_error_bound && t.value + t.abs_error_bound <= upper,
    )
    .with_method(t.method, t.abs_error_bound)
    .detail("lower", lower)
    .detail("upper", upper)
    .detail("limit", limit)
    .detail("limit_gap", (t.value - limit).abs()))
}

/// T(c) = lim T_n(c) = 2 N(2c): weight fluctuations have standard deviation sqrt(n)/2.
pub fn tail_t_limit(c: f64) -> f64 {
    2.0 * normal_tail(2.0 * c)
}

/// ln T(c), finite even where T(c) underflows.
pub fn ln_tail_t_limit(c: f64) -> f64 {
    std::f64::consts::LN_2 + crate::numeric::ln_normal_tail(2.0 * c)
}

/// The b > 0 with T(b) = target, by bisection.
pub fn inverse_t(target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return invalid(format!("target must lie in (0, 1), got {target}"));
    }
    let mut hi = 1.0;
    while tail_t_limit(hi) > target {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tail_t_limit(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Probability that |y| lands in a normalized band, together with the
/// normal approximation it is compared to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeProb {
    pub exact: TailResult,
    /// N(z1) - N(z2).
    pub normal: f64,
    /// Integer weight range actually summed, when nonempty.
    pub weights: Option<(u64, u64)>,
}

/// Pr[n/2 + (z1/2) sqrt(n) <= |y| <= n/2 + (z2/2) sqrt(n)] under U_n.
pub fn binom_range_prob(n: u64, z1: f64, z2: f64) -> Result<RangeProb> {
    check_n(n)?;
    if z1.is_nan() || z2.is_nan() || z1 >= z2 {
        return invalid(format!("need z1 < z2, got {z1} and {z2}"));
    }
    let (half, root) = (n as f64 / 2.0, (n as f64).sqrt());
    let lo = (half + z1 / 2.0 * root).ceil().max(0.0);
    let hi = (half + z2 / 2.0 * root).floor().min(n as f64);
    let normal = normal_tail(z1) - normal_tail(z2);
    if lo > hi {
        return Ok(RangeProb {
            exact: TailResult::exact(&BigRational::zero()),
            normal,
            weights: None,
        });
    }
    let (lo, hi) = (lo as u64, hi as u64);
    Ok(RangeProb {
        exact: binomial_interval(n, lo, hi),
        normal,
        weights: Some((lo, hi)),
    })
}

fn hypergeometric(n: u64, m: u64, n1: u64) -> Result<Hypergeometric<f64>> {
    Hypergeometric::new(n, m, n1).ok_or_else(|| {
        crate::GhdError::InvalidArgument(format!("need m, n1 <= n; got n={n} m={m} n1={n1}"))
    })
}

/// Hyp(k; n, m, n1) = C(m,k) C(n-m, n1-k) / C(n, n1).
pub fn hypergeom_pmf(k: u64, n: u64, m: u64, n1: u64) -> Result<f64> {
    let h = hypergeometric(n, m, n1)?;
    let (lo, hi) = h.support();
    if k < lo || k > hi {
        return invalid(format!("k = {k} outside support [{lo}, {hi}]"));
    }
    Ok(h.pmf(k))
}

/// Pr[K <= kmax]; a `kmax` below the support gives 0.
pub fn hypergeom_tail_le(kmax: i64, n: u64, m: u64, n1: u64) -> Result<f64> {
    Ok(hypergeometric(n, m, n1)?.cdf(kmax))
}

/// Pr[K > k].
pub fn hypergeom_tail_gt(k: i64, n: u64, m: u64, n1: u64) -> Result<f64> {
    Ok(hypergeometric(n, m, n1)?.sf(k))
}

/// exp(-2 beta eta^2) with beta = n / (m (n - m)); the (1 + o(1)) factor is taken as 1.
pub fn hush_scovel_bound(n: u64, m: u64, n1: u64, eta: f64) -> Result<f64> {
    if !(m > n1 && m < n && n1 <= n) {
        return invalid(format!("need n1 < m < n, got n={n} m={m} n1={n1}"));
    }
    if !(eta >= 0.0) {
        return invalid("eta must be nonnegative");
    }
    let beta = n as f64 / (m as f64 * (n - m) as f64);
    Ok((-2.0 * beta * eta * eta).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::FromPrimitive;

    fn gap(c: f64) -> Gap {
        Gap::approximate(c).unwrap()
    }

    #[test]
    fn tail_small_cases() {
        assert_eq!(tail_tn(7, Gap::integer(0)).unwrap().value, 1.0);
        assert_eq!(
            tail_tn_exact(4, Gap::integer(1)).unwrap(),
            BigRational::new(1.into(), 8.into())
        );
        let r = tail_tn(4, Gap::integer(1)).unwrap();
        assert_eq!(r.value, 0.125);
        assert_eq!(r.method, TailMethod::ExactBigrational);
        assert_eq!(r.abs_error_bound, 0.0);
        let big = tail_tn(4096, Gap::integer(1)).unwrap().value;
        assert!((1.0 / 32.0..=0.5).contains(&big));
        assert!(tail_tn(0, Gap::integer(1)).is_err());
    }

    #[test]
    fn tail_zero_gap_is_one_at_large_n() {
        let r = tail_tn(12_345, Gap::integer(0)).unwrap();
        assert!((r.value - 1.0).abs() <= r.abs_error_bound + 1e-15);
    }

    #[test]
    fn float_method_agrees_with_exact() {
        for n in [1001u64, 2000, 5000] {
            let g = Gap::integer(1);
            let exact = tail_tn_exact(n, g).unwrap().to_f64().unwrap();
            let t = g.thresholds(n);
            let table = FairTable::new(n);
            let (a, ea) = table.interval(0, t.close_max.unwrap());
            let (b, eb) = table.interval(t.far_min.unwrap(), n);
            assert!(ea + eb < 1e-12, "bound {}", ea + eb);
            assert!(((a + b) - exact).abs() <= ea + eb, "n={n}");
            let r = tail_tn(n, g).unwrap();
            assert_eq!(r.method, TailMethod::LogSpaceFloat);
        }
    }

    #[test]
    fn tail_bracket_at_ten_thousand() {
        for c in [1.0, 1.5, 2.0] {
            let v = tail_tn(10_000, gap(c)).unwrap();
            assert!(v.abs_error_bound <= 1e-12);
            assert!(2f64.powf(-3.0 * c * c - 2.0) <= v.value);
            assert!(v.value <= 1.02 * 2f64.powf(-c * c));
        }
    }

    #[test]
    fn tail_nonincreasing_in_c() {
        for n in [10u64, 99, 400, 1000] {
            let mut prev = BigRational::one();
            for num in 0..=40u64 {
                let t = tail_tn_exact(n, Gap::from_c(num, 10).unwrap()).unwrap();
                assert!(t <= prev, "n={n} c={num}/10");
                prev = t;
            }
        }
    }

    #[test]
    fn limit_values() {
        let t1 = tail_t_limit(1.0);
        assert!((1.0 / 32.0..=0.5).contains(&t1));
        assert!((t1 - 0.045_500_263_896_358_4).abs() < 1e-15);
        let n5 = tail_tn(100_000, Gap::integer(1)).unwrap().value;
        assert!((t1 - n5).abs() <= 3e-3);
        assert!((ln_tail_t_limit(3.0) - tail_t_limit(3.0).ln()).abs() < 1e-12);
        assert!(ln_tail_t_limit(100.0).is_finite());
    }

    #[test]
    fn limit_vs_mills_form() {
        // e^{-2c^2}/(c sqrt(2 pi)) is the Mills upper bound 2 phi(2c)/(2c); T(c)
        // sits between it and its lower companion, approaching it as c grows.
        for c in [1.0f64, 2.0, 3.0] {
            let upper = (-2.0 * c * c).exp() / (c * std::f64::consts::TAU.sqrt());
            let x = 2.0 * c;
            let lower = upper * (1.0 - 1.0 / (x * x));
            let t = tail_t_limit(c);
            assert!(lower < t && t < upper);
        }
        let ratio = tail_t_limit(1.0) / ((-2.0f64).exp() / std::f64::consts::TAU.sqrt());
        assert!((ratio - 0.8427).abs() < 1e-3);
    }

    #[test]
    fn inverse_round_trip() {
        let b = inverse_t(0.125).unwrap();
        assert!((tail_t_limit(b) - 0.125).abs() < 1e-9);
        assert!((b - 0.767_060_272_176_273_4).abs() < 1e-9);
        assert!(inverse_t(0.999).unwrap() < 0.01);
        assert!(inverse_t(1.0).is_err());
        assert!(inverse_t(0.0).is_err());
    }

    #[test]
    fn range_examples() {
        let full = binom_range_prob(50, f64::NEG_INFINITY, f64::INFINITY).unwrap();
        assert_eq!(full.exact.value, 1.0);
        assert!(binom_range_prob(50, 1.0, 1.0).is_err());
        let r = binom_range_prob(10_000, 4.0, 4.2).unwrap();
        assert_eq!(r.weights, Some((5200, 5210)));
        assert!((r.exact.value - 2.023_2e-5).abs() < 1e-8);
        // 11 lattice points against a width of 10: the uncorrected normal
        // difference is about 10% low; the half-unit corrected one is close
        let ratio = r.exact.value / r.normal;
        assert!((1.09..1.12).contains(&ratio), "ratio {ratio}");
        let corrected = normal_tail(2.0 * (5199.5 - 5000.0) / 100.0)
            - normal_tail(2.0 * (5210.5 - 5000.0) / 100.0);
        assert!((r.exact.value / corrected - 1.0).abs() < 0.01);
    }

    #[test]
    fn hypergeom_identities() {
        let total: f64 = (0..=7).map(|k| hypergeom_pmf(k, 20, 7, 9).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((hypergeom_pmf(1, 4, 2, 2).unwrap() - 4.0 / 6.0).abs() < 1e-15);
        let mean: f64 = (0..=10)
            .map(|k| k as f64 * hypergeom_pmf(k, 30, 10, 12).unwrap())
            .sum();
        assert!((mean - 4.0).abs() < 1e-9);
        assert!(hypergeom_pmf(8, 20, 7, 9).is_err());
        assert!(hypergeom_pmf(0, 5, 6, 1).is_err());
        assert_eq!(hypergeom_tail_le(-1, 20, 7, 9).unwrap(), 0.0);
        assert!((hypergeom_tail_le(7, 20, 7, 9).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hypergeom_grid_against_exact_counts() {
        use num_integer::binomial;
        for (n, m, n1) in [
            (20u64, 7u64, 9u64),
            (30, 10, 12),
            (40, 25, 13),
            (60, 30, 30),
        ] {
            let denom = BigRational::from_integer(binomial(BigInt::from(n), BigInt::from(n1)));
            let lo = (m + n1).saturating_sub(n);
            let mut mean = 0.0;
            for k in lo..=m.min(n1) {
                let num = binomial(BigInt::from(m), BigInt::from(k))
                    * binomial(BigInt::from(n - m), BigInt::from(n1 - k));
                let exact = (BigRational::from_integer(num) / &denom).to_f64().unwrap();
                let got = hypergeom_pmf(k, n, m, n1).unwrap();
                assert!((got - exact).abs() < 1e-13);
                mean += k as f64 * got;
            }
            let expected = f64::from_u64(m * n1).unwrap() / n as f64;
            assert!((mean - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn hush_scovel() {
        assert_eq!(hush_scovel_bound(100, 60, 30, 0.0).unwrap(), 1.0);
        let mut prev = 2.0;
        for eta in (0..=100).step_by(10) {
            let b = hush_scovel_bound(10_000, 7000, 4790, eta as f64).unwrap();
            assert!(b < prev);
            prev = b;
        }
        let bound = hush_scovel_bound(10_000, 7000, 4790, 50.0).unwrap();
        // E[K] = 3353, so K - E[K] > 50 means K > 3403
        let exact = hypergeom_tail_gt(3403, 10_000, 7000, 4790).unwrap();
        assert!(exact <= bound * 1.05);
        assert!(hush_scovel_bound(100, 30, 30, 1.0).is_err());
    }
}
