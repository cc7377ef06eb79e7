//! Scalar-generic numerical kernels: normal density and tail, binary entropy,
//! binomial and hypergeometric mass tables.
//!
//! Everything here is written against [`Real`] so the same code runs in `f32`
//! and `f64`. The rest of the crate instantiates it at [`crate::Prob`].

use num_traits::{Float, FloatConst, FromPrimitive};
use std::fmt::Debug;

/// Floating point scalar: `f32` or `f64`.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Send + Sync + 'static {}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub(crate) fn lit<F: Real>(v: f64) -> F {
    F::from_f64(v).expect("literal representable")
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<F: Real, I: IntoIterator<Item = F>>(values: I) -> F {
    let mut sum = F::zero();
    let mut comp = F::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp = comp + ((sum - t) + v);
        } else {
            comp = comp + ((v - t) + sum);
        }
        sum = t;
    }
    sum + comp
}

/// H(a) = -a log2 a - (1-a) log2 (1-a), with H(0) = H(1) = 0.
pub fn binary_entropy<F: Real>(a: F) -> Option<F> {
    if !(a >= F::zero() && a <= F::one()) {
        return None;
    }
    let term = |p: F| {
        if p == F::zero() {
            F::zero()
        } else {
            -p * p.log2()
        }
    };
    Some(term(a) + term(F::one() - a))
}

/// Standard normal density e^{-x^2/2}/sqrt(2 pi).
pub fn normal_phi<F: Real>(x: F) -> F {
    (-(x * x) / lit(2.0)).exp() / (F::TAU()).sqrt()
}

/// Continued fraction x + (1/2)/(x + 1/(x + (3/2)/(x + ...))) via modified Lentz.
/// erfc(x) = e^{-x^2} / (sqrt(pi) * cf(x)) for x > 0.
fn erfc_continued_fraction<F: Real>(x: F) -> F {
    let tiny = F::min_positive_value() / F::epsilon();
    let half = lit::<F>(0.5);
    let mut f = x;
    if f == F::zero() {
        f = tiny;
    }
    let mut c = f;
    let mut d = F::zero();
    for k in 1..10_000u32 {
        let a = half * F::from_u32(k).unwrap();
        d = x + a * d;
        if d == F::zero() {
            d = tiny;
        }
        c = x + a / c;
        if c == F::zero() {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f = f * delta;
        if (delta - F::one()).abs() < F::epsilon() {
            break;
        }
    }
    f
}

/// erf(x) for moderate |x| via the positive-term series
/// erf(x) = 2/sqrt(pi) e^{-x^2} sum_k (2x^2)^k x / (1*3*...*(2k+1)).
fn erf_series<F: Real>(x: F) -> F {
    let two_x2 = lit::<F>(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    for k in 1..10_000u32 {
        term = term * two_x2 / F::from_u32(2 * k + 1).unwrap();
        sum = sum + term;
        if term.abs() <= sum.abs() * F::epsilon() {
            break;
        }
    }
    lit::<F>(2.0) / F::PI().sqrt() * (-(x * x)).exp() * sum
}

const ERFC_SWITCH: f64 = 2.5;

/// Complementary error function.
pub fn erfc<F: Real>(x: F) -> F {
    if x < F::zero() {
        return lit::<F>(2.0) - erfc(-x);
    }
    if x < lit(ERFC_SWITCH) {
        F::one() - erf_series(x)
    } else {
        (-(x * x)).exp() / (F::PI().sqrt() * erfc_continued_fraction(x))
    }
}

/// Upper normal tail N(x) = integral_x^inf phi.
pub fn normal_tail<F: Real>(x: F) -> F {
    if x == F::infinity() {
        return F::zero();
    }
    if x == F::neg_infinity() {
        return F::one();
    }
    erfc(x / F::SQRT_2()) / lit(2.0)
}

/// ln N(x), finite far beyond the point where N(x) underflows.
pub fn ln_normal_tail<F: Real>(x: F) -> F {
    let u = x / F::SQRT_2();
    if u < lit(ERFC_SWITCH) {
        return normal_tail(x).ln();
    }
    -(u * u) - (lit::<F>(2.0) * F::PI().sqrt() * erfc_continued_fraction(u)).ln()
}

/// Mode of Binom(n, p): floor((n + 1) p), clamped to n.
pub fn binomial_mode<F: Real>(n: u64, p: F) -> u64 {
    let nf = F::from_u64(n).unwrap();
    ((nf + F::one()) * p).floor().to_u64().unwrap_or(0).min(n)
}

/// Mass table of Binom(n, p); entry `k` is Pr[K = k].
///
/// Built by the multiplicative ratio recurrence outward from the mode, which
/// starts at 1, then normalized. Entry `k` carries relative rounding error of
/// at most about `3 (|k - mode| + 2)` ulps; far-tail entries may underflow to 0.
pub fn binomial_pmf_table<F: Real>(n: u64, p: F) -> Vec<F> {
    let len = n as usize + 1;
    if p <= F::zero() || p >= F::one() {
        let mut v = vec![F::zero(); len];
        v[if p <= F::zero() { 0 } else { len - 1 }] = F::one();
        return v;
    }
    let odds = p / (F::one() - p);
    let mode = binomial_mode(n, p);
    let f = |v: u64| F::from_u64(v).unwrap();
    let mut mass = vec![F::zero(); len];
    mass[mode as usize] = F::one();
    // pmf(k+1) / pmf(k) = (n-k)/(k+1) * p/q
    for k in mode..n {
        mass[(k + 1) as usize] = mass[k as usize] * f(n - k) / f(k + 1) * odds;
    }
    for k in (0..mode).rev() {
        mass[k as usize] = mass[(k + 1) as usize] * f(k + 1) / f(n - k) / odds;
    }
    normalize(mass)
}

fn normalize<F: Real>(mass: Vec<F>) -> Vec<F> {
    let total = neumaier_sum(mass.iter().cloned());
    mass.into_iter().map(|v| v / total).collect()
}

/// Hypergeometric law: draw `n1` items from `n`, of which `m` are marked;
/// K counts marked draws.
#[derive(Debug, Clone)]
pub struct Hypergeometric<F> {
    pub n: u64,
    pub m: u64,
    pub n1: u64,
    lo: u64,
    pmf: Vec<F>,
}

impl<F: Real> Hypergeometric<F> {
    pub fn new(n: u64, m: u64, n1: u64) -> Option<Self> {
        if m > n || n1 > n {
            return None;
        }
        let lo = (m + n1).saturating_sub(n);
        let hi = m.min(n1);
        let f = |v: u64| F::from_u64(v).unwrap();
        // mode of the hypergeometric law
        let mode_f = ((f(n1) + F::one()) * (f(m) + F::one()) / (f(n) + lit(2.0))).floor();
        let mode = mode_f.to_u64().unwrap().clamp(lo, hi);
        let len = (hi - lo + 1) as usize;
        let mut mass = vec![F::zero(); len];
        mass[(mode - lo) as usize] = F::one();
        // pmf(k+1)/pmf(k) = (m-k)(n1-k) / ((k+1)(n-m-n1+k+1))
        let ratio = |k: u64| f(m - k) * f(n1 - k) / (f(k + 1) * f(n + k + 1 - m - n1));
        for k in mode..hi {
            mass[(k + 1 - lo) as usize] = mass[(k - lo) as usize] * ratio(k);
        }
        for k in (lo..mode).rev() {
            mass[(k - lo) as usize] = mass[(k + 1 - lo) as usize] / ratio(k);
        }
        Some(Self {
            n,
            m,
            n1,
            lo,
            pmf: normalize(mass),
        })
    }

    pub fn support(&self) -> (u64, u64) {
        (self.lo, self.lo + self.pmf.len() as u64 - 1)
    }

    pub fn pmf(&self, k: u64) -> F {
        let (lo, hi) = self.support();
        if k < lo || k > hi {
            F::zero()
        } else {
            self.pmf[(k - lo) as usize]
        }
    }

    /// Pr[K <= kmax]; `kmax` may lie below the support.
    pub fn cdf(&self, kmax: i64) -> F {
        let (lo, hi) = self.support();
        if kmax < lo as i64 {
            return F::zero();
        }
        let top = (kmax as u64).min(hi);
        neumaier_sum((lo..=top).map(|k| self.pmf(k)))
    }

    /// Pr[K > k] summed directly over the upper support.
    pub fn sf(&self, k: i64) -> F {
        let (lo, hi) = self.support();
        let start = if k < lo as i64 { lo } else { k as u64 + 1 };
        if start > hi {
            return F::zero();
        }
        neumaier_sum((start..=hi).map(|j| self.pmf(j)))
    }

    pub fn mean(&self) -> F {
        let (lo, hi) = self.support();
        neumaier_sum((lo..=hi).map(|k| F::from_u64(k).unwrap() * self.pmf(k)))
    }

    pub fn total_mass(&self) -> F {
        neumaier_sum(self.pmf.iter().cloned())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5f64), Some(1.0));
        assert_eq!(binary_entropy(0.0f64), Some(0.0));
        assert_eq!(binary_entropy(1.0f64), Some(0.0));
        assert!(binary_entropy(1.5f64).is_none());
        assert!(binary_entropy(-0.1f64).is_none());
        // -(1/3)log2(1/3) - (2/3)log2(2/3) = log2 3 - 2/3
        let expected = 3f64.log2() - 2.0 / 3.0;
        let got = binary_entropy(1.0f64 / 3.0).unwrap();
        assert!(((got - expected) / expected).abs() < 1e-12);
        assert!((got - 0.918_295_834_054_489_6).abs() < 1e-12);
    }

    #[test]
    fn normal_basics() {
        assert_eq!(normal_tail(0.0f64), 0.5);
        assert!((normal_phi(0.0f64) - 0.398_942_280_401_432_7).abs() < 1e-15);
        assert_eq!(normal_tail(f64::INFINITY), 0.0);
        assert_eq!(normal_tail(f64::NEG_INFINITY), 1.0);
    }

    #[test]
    fn erfc_matches_high_precision_values() {
        // reference values from 30-digit arithmetic
        let golden = [
            (-4.5, 1.999_999_999_803_383_955_8),
            (-1.412, 1.954_160_644_219_514_704_6),
            (-0.3, 1.328_626_759_459_127_416_2),
            (0.0, 1.0),
            (0.2, 0.777_297_410_789_521_533_82),
            (0.9, 0.203_091_787_577_167_860_34),
            (1.7, 0.016_209_541_409_225_439_159),
            (2.4, 6.885_138_966_450_788_855_5e-4),
            (2.6, 2.360_344_165_293_490_878_1e-4),
            (3.3, 3.057_709_796_438_165_198_8e-6),
            (5.0, 1.537_459_794_428_034_850_2e-12),
            (8.0, 1.122_429_717_298_292_708e-29),
            (15.0, 7.212_994_172_451_206_666_6e-100),
            (26.0, 5.663_192_408_856_142_846_5e-296),
        ];
        for (x, reference) in golden {
            let rel = ((erfc(x) - reference) / reference).abs();
            assert!(rel < 1e-12, "x={x} rel={rel}");
        }
    }

    #[test]
    fn erfc_close_to_statrs_on_grid() {
        // statrs is only good to about 1e-10 near x = 0.5
        let mut x = -6.0f64;
        while x < 26.0 {
            let reference = statrs::function::erf::erfc(x);
            let rel = ((erfc(x) - reference) / reference).abs();
            assert!(rel < 1e-9, "x={x} rel={rel}");
            x += 0.037;
        }
    }

    #[test]
    fn ln_tail_continuous_across_switch() {
        for &x in &[3.0f64, 3.5, 3.53, 3.54, 5.0, 10.0, 30.0] {
            let direct = normal_tail(x).ln();
            let logged = ln_normal_tail(x);
            assert!((direct - logged).abs() < 1e-11, "x={x}");
        }
        // far tail does not underflow
        let l = ln_normal_tail(200.0f64);
        assert!(l.is_finite() && l < -19_000.0);
    }

    #[test]
    fn feller_mills_bracket() {
        for &x in &[1.0f64, 2.0, 4.0] {
            let n = normal_tail(x);
            let phi = normal_phi(x);
            assert!(phi * (1.0 / x - 1.0 / x.powi(3)) < n);
            assert!(n < phi / x);
        }
    }

    #[test]
    fn f32_instantiation_agrees() {
        for &x in &[0.3f32, 1.0, 2.0, 3.0] {
            let a = normal_tail(x) as f64;
            let b = normal_tail(x as f64);
            assert!(((a - b) / b).abs() < 1e-4, "x={x}");
        }
        assert!((binary_entropy(0.25f32).unwrap() - 0.811_278_1).abs() < 1e-6);
    }

    #[test]
    fn binomial_table_small_exact() {
        let t: Vec<f64> = binomial_pmf_table(4, 0.5);
        let expected = [1.0, 4.0, 6.0, 4.0, 1.0].map(|v| v / 16.0);
        for (a, b) in t.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let t: Vec<f64> = binomial_pmf_table(3, 0.0);
        assert_eq!(t, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn hypergeometric_small_case() {
        let h = Hypergeometric::<f64>::new(4, 2, 2).unwrap();
        assert!((h.pmf(1) - 4.0 / 6.0).abs() < 1e-15);
        assert!((h.pmf(0) - 1.0 / 6.0).abs() < 1e-15);
        assert!((h.total_mass() - 1.0).abs() < 1e-15);
        assert_eq!(h.cdf(-3), 0.0);
        assert!(Hypergeometric::<f64>::new(4, 5, 2).is_none());
    }
}
