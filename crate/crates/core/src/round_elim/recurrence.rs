use crate::distributions::{inverse_t, ln_tail_t_limit};
use crate::error::{invalid, Result};
use crate::oneway::log2_big;
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

/// log2 of a tiny positive number: `whole + frac`, with the huge integer
/// part kept exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Log2Value {
    #[serde(with = "bigint_string")]
    pub whole: BigInt,
    pub frac: f64,
}

impl Log2Value {
    pub fn approx(&self) -> f64 {
        self.whole.to_f64().unwrap_or(f64::NEG_INFINITY) + self.frac
    }

    /// Is the value strictly below `bound` (an integer exponent)?
    pub fn less_than(&self, bound: &BigInt) -> bool {
        let slack = bound - &self.whole;
        match slack.to_f64() {
            Some(s) if s.abs() < 1e15 => self.frac < s,
            _ => slack.is_positive(),
        }
    }

    pub fn at_most(&self, bound: &BigInt) -> bool {
        let slack = bound - &self.whole;
        match slack.to_f64() {
            Some(s) if s.abs() < 1e15 => self.frac <= s,
            _ => slack.is_positive(),
        }
    }
}

mod bigint_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row (n_i, s_i, c_i, eps_i) of the parameter recurrence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceRow {
    pub i: usize,
    /// n_i as a reduced fraction "p/q".
    pub n_i: String,
    pub log2_n_i: f64,
    pub s_i: String,
    pub log2_s_i: f64,
    pub c_i: u64,
    pub log2_eps_i: Log2Value,
    /// -log2 T(c_i) added at this step (0 on row 0).
    pub step_log2: f64,
    /// s_i <= n_i / 20, the hypothesis for eliminating the next round.
    pub s_le_n_over_20: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub k: usize,
    pub n: String,
    pub s: u64,
    pub t0: String,
    pub t: String,
    pub b: f64,
    pub rows: Vec<RecurrenceRow>,
    /// Closing arithmetic of the multi-round bound.
    pub closing: ClosingArithmetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosingArithmetic {
    /// log2(48 ln 2) + 15k² + 11k + log2 s.
    pub log2_s_k_theorem: f64,
    pub log2_s_k: f64,
    /// s_k / s_0 = 2^{15k²} holds exactly.
    pub s_ratio_exact: bool,
    /// -2^{11k} + 300k 2^{2k} + 2k.
    pub log2_eps_bound: String,
    pub eps_k_within_bound: bool,
    pub eps_k_below_half: bool,
    pub n_k_above_one: bool,
    pub n_at_least_2_pow_4k2: bool,
    pub c_k: u64,
}

fn big_pow2(e: u64) -> BigUint {
    BigUint::one() << e
}

fn ratio_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn log2_ratio(r: &BigRational) -> f64 {
    log2_big(&r.numer().to_biguint().expect("positive"))
        - log2_big(&r.denom().to_biguint().expect("positive"))
}

/// -log2 T(c) for the limiting tail T(c) = 2 N(2c).
fn step_log2(c: u64) -> f64 {
    -ln_tail_t_limit(c as f64) / LN_2
}

/// Materializes the recurrence for k rounds starting from (n, s).
pub fn recurrence_table(n: &BigUint, s: u64, k: usize) -> Result<RecurrenceTable> {
    if k == 0 {
        return invalid("k must be at least 1");
    }
    if n.is_zero() || s == 0 {
        return invalid("n and s must be positive");
    }
    let k64 = k as u64;
    let t0_real = 48.0 * LN_2 * 2f64.powi(11 * k as i32);
    let t0 = BigUint::from(t0_real.ceil() as u128);
    let t = big_pow2(15 * k64);
    let b = inverse_t(1.0 / 8.0)?;
    let mut rows = Vec::with_capacity(k + 1);
    let mut n_i = BigRational::from_integer(BigInt::from(n.clone()));
    let mut s_i = &t0 * s;
    let mut c_i = 10u64;
    let mut eps = Log2Value {
        whole: -BigInt::from(big_pow2(11 * k64)),
        frac: 0.0,
    };
    for i in 0..=k {
        let step = if i == 0 { 0.0 } else { step_log2(c_i) };
        if i > 0 {
            eps.frac += step;
        }
        let cmp = BigRational::from_integer(BigInt::from(s_i.clone())) * BigInt::from(20);
        rows.push(RecurrenceRow {
            i,
            n_i: ratio_string(&n_i),
            log2_n_i: log2_ratio(&n_i),
            s_i: s_i.to_string(),
            log2_s_i: log2_big(&s_i),
            c_i,
            log2_eps_i: eps.clone(),
            step_log2: step,
            s_le_n_over_20: cmp <= n_i,
        });
        n_i /= BigInt::from(3);
        s_i *= &t;
        c_i *= 2;
    }
    let last = rows.last().expect("k + 1 rows");
    let s0 = &t0 * s;
    let s_k: BigUint = last.s_i.parse().expect("decimal");
    let log2_s_k_theorem = (48.0 * LN_2).log2() + (15 * k * k + 11 * k) as f64 + (s as f64).log2();
    let bound = -BigInt::from(big_pow2(11 * k64))
        + BigInt::from(300u64 * k64) * BigInt::from(big_pow2(2 * k64))
        + BigInt::from(2 * k64);
    let n_k = BigRational::from_integer(BigInt::from(n.clone())) / BigInt::from(3u64.pow(k as u32));
    let closing = ClosingArithmetic {
        log2_s_k_theorem,
        log2_s_k: log2_big(&s_k),
        s_ratio_exact: s_k == &s0 * big_pow2(15 * k64 * k64),
        log2_eps_bound: bound.to_string(),
        eps_k_within_bound: last.log2_eps_i.at_most(&bound),
        eps_k_below_half: last.log2_eps_i.less_than(&BigInt::from(-1)),
        n_k_above_one: n_k > BigRational::one(),
        n_at_least_2_pow_4k2: *n >= big_pow2(4 * k64 * k64),
        c_k: last.c_i,
    };
    Ok(RecurrenceTable {
        k,
        n: n.to_string(),
        s,
        t0: t0.to_string(),
        t: t.to_string(),
        b,
        rows,
        closing,
    })
}

/// Checks n_{i+1} = n_i/3, s_{i+1} = t s_i, c_{i+1} = 2 c_i and
/// log2 eps_{i+1} = log2 eps_i - log2 T(c_{i+1}), all exactly.
pub fn check_recurrences(table: &RecurrenceTable) -> bool {
    let t: BigUint = table.t.parse().expect("decimal");
    let parse_ratio = |s: &str| -> BigRational {
        match s.split_once('/') {
            Some((a, b)) => BigRational::new(a.parse().unwrap(), b.parse().unwrap()),
            None => BigRational::from_integer(s.parse().unwrap()),
        }
    };
    let n0: BigUint = table.n.parse().expect("decimal");
    let t0: BigUint = table.t0.parse().expect("decimal");
    let first = &table.rows[0];
    let mut ok = parse_ratio(&first.n_i) == BigRational::from_integer(BigInt::from(n0))
        && first.s_i == (&t0 * table.s).to_string()
        && first.c_i == 10
        && first.log2_eps_i.whole == -BigInt::from(big_pow2(11 * table.k as u64))
        && first.log2_eps_i.frac == 0.0;
    for w in table.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let sa: BigUint = a.s_i.parse().unwrap();
        let sb: BigUint = b.s_i.parse().unwrap();
        ok &= parse_ratio(&a.n_i) == parse_ratio(&b.n_i) * BigInt::from(3)
            && sb == sa * &t
            && b.c_i == 2 * a.c_i
            && b.log2_eps_i.whole == a.log2_eps_i.whole
            && b.log2_eps_i.frac == a.log2_eps_i.frac + step_log2(b.c_i);
    }
    ok
}

impl RecurrenceTable {
    pub const CSV_HEADER: &'static str =
        "i,n_i,log2_n_i,s_i,log2_s_i,c_i,log2_eps_i,log2_eps_i_whole,log2_eps_i_frac";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.i,
                r.n_i,
                r.log2_n_i,
                r.s_i,
                r.log2_s_i,
                r.c_i,
                r.log2_eps_i.approx(),
                r.log2_eps_i.whole,
                r.log2_eps_i.frac
            ));
        }
        out
    }
}
