//! Boolean strings, Hamming geometry and the Gap-Hamming-Distance partial
//! function with exact integer threshold tests.

use crate::error::{invalid, GhdError, Result};
use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

const WORD: usize = 64;

/// Longest supported string.
pub const MAX_LEN: usize = 1 << 20;

/// Fixed-length bit vector, packed least-significant-bit first.
/// Bits past `len` are always zero, so derived equality and hashing only see
/// the logical content.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitString {
    len: usize,
    words: Vec<u64>,
}

fn word_count(len: usize) -> usize {
    len.div_ceil(WORD)
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= MAX_LEN, "length {len} exceeds {MAX_LEN}");
        Self {
            len,
            words: vec![0; word_count(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut s = Self::zeros(len);
        for w in s.words.iter_mut() {
            *w = u64::MAX;
        }
        s.clear_tail();
        s
    }

    /// Bit `i` of the result is bit `i` of `value`; `len <= 64`.
    pub fn from_u64(value: u64, len: usize) -> Self {
        assert!(len <= WORD);
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = value;
            s.clear_tail();
        }
        s
    }

    /// Inverse of [`BitString::from_u64`]; `len <= 64`.
    pub fn to_u64(&self) -> u64 {
        assert!(self.len <= WORD);
        self.words.first().copied().unwrap_or(0)
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let bits: Vec<bool> = bits.into_iter().collect();
        let mut s = Self::zeros(bits.len());
        for (i, b) in bits.into_iter().enumerate() {
            if b {
                s.set(i, true);
            }
        }
        s
    }

    pub fn from_words(len: usize, mut words: Vec<u64>) -> Self {
        words.resize(word_count(len), 0);
        let mut s = Self { len, words };
        s.clear_tail();
        s
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    fn clear_tail(&mut self) {
        let rem = self.len % WORD;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        (self.words[i / WORD] >> (i % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % WORD);
        if bit {
            self.words[i / WORD] |= mask;
        } else {
            self.words[i / WORD] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len);
        self.words[i / WORD] ^= 1u64 << (i % WORD);
    }

    /// Hamming weight |x|.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut s = Self {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        s.clear_tail();
        s
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        check_same_len(self, other)?;
        Ok(Self {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Restriction to the listed coordinates, in the listed order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self::from_bits(indices.iter().map(|&i| self.get(i)))
    }

    /// Plugs `inner` into the coordinates `indices` (ascending) and `outer`
    /// into the remaining coordinates, both in order.
    pub fn interleave(indices: &[usize], inner: &Self, outer: &Self) -> Result<Self> {
        let len = inner.len() + outer.len();
        if indices.len() != inner.len() {
            return invalid("index set size differs from inner string length");
        }
        let mut s = Self::zeros(len);
        let mut in_set = vec![false; len];
        for (j, &i) in indices.iter().enumerate() {
            if i >= len || in_set[i] {
                return invalid(format!("bad coordinate {i} in index set"));
            }
            in_set[i] = true;
            s.set(i, inner.get(j));
        }
        let mut k = 0;
        for (i, &inside) in in_set.iter().enumerate() {
            if !inside {
                s.set(i, outer.get(k));
                k += 1;
            }
        }
        Ok(s)
    }
}

fn check_same_len(x: &BitString, y: &BitString) -> Result<()> {
    if x.len != y.len {
        return invalid(format!("length mismatch: {} vs {}", x.len, y.len));
    }
    Ok(())
}

/// Lexicographic order on the text form (index 0 most significant, '0' < '1').
impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.words.iter().zip(&other.words) {
            if a != b {
                // lowest differing index decides; the string with 0 there is smaller
                let low = (a ^ b).trailing_zeros();
                return if (a >> low) & 1 == 0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                };
            }
        }
        self.len.cmp(&other.len)
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.iter().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitString {
    type Err = GhdError;

    fn from_str(s: &str) -> Result<Self> {
        if s.len() > MAX_LEN {
            return Err(GhdError::InvalidArgument(format!(
                "bit string longer than {MAX_LEN}"
            )));
        }
        let mut out = Self::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => out.set(i, true),
                other => {
                    return Err(GhdError::InvalidArgument(format!(
                        "bit strings contain only '0' and '1', found {other:?}"
                    )))
                }
            }
        }
        Ok(out)
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Δ(x, y): number of coordinates where x and y differ.
pub fn hamming_distance(x: &BitString, y: &BitString) -> Result<usize> {
    check_same_len(x, y)?;
    Ok(distance_unchecked(x, y))
}

#[inline]
pub(crate) fn distance_unchecked(x: &BitString, y: &BitString) -> usize {
    x.words
        .iter()
        .zip(&y.words)
        .map(|(a, b)| (a ^ b).count_ones() as usize)
        .sum()
}

/// The gap constant c, held exactly through c² = num/den in lowest terms.
/// c = 0 is representable for tail computations; [`GhdParams`] needs c > 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Gap {
    pub c_squared_num: u64,
    pub c_squared_den: u64,
}

impl Gap {
    pub fn from_c_squared(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return invalid("zero denominator in c^2");
        }
        let g = num.gcd(&den).max(1);
        Ok(Self {
            c_squared_num: num / g,
            c_squared_den: den / g,
        })
    }

    /// c = num/den.
    pub fn from_c(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return invalid("zero denominator in c");
        }
        let g = num.gcd(&den).max(1);
        let (p, q) = (num / g, den / g);
        match (p.checked_mul(p), q.checked_mul(q)) {
            (Some(a), Some(b)) => Self::from_c_squared(a, b),
            _ => invalid("c numerator/denominator too large"),
        }
    }

    pub fn integer(c: u64) -> Self {
        Self::from_c(c, 1).expect("small integer gap")
    }

    /// Rational approximation of an irrational c: c² rounded to a multiple of 2^-32.
    pub fn approximate(c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return invalid(format!("gap constant must be finite and >= 0, got {c}"));
        }
        let den = 1u64 << 32;
        let num = (c * c * den as f64).round();
        if num >= u64::MAX as f64 {
            return invalid("gap constant too large");
        }
        Self::from_c_squared(num as u64, den)
    }

    pub fn is_zero(&self) -> bool {
        self.c_squared_num == 0
    }

    pub fn c(&self) -> f64 {
        (self.c_squared_num as f64 / self.c_squared_den as f64).sqrt()
    }

    /// Is |2Δ - n| ≥ 2c√n, i.e. (2Δ-n)² den ≥ 4 num n?
    fn deviation_reaches(&self, n: u64, twice_dev: u64) -> bool {
        let lhs = (twice_dev as u128) * (twice_dev as u128) * self.c_squared_den as u128;
        let rhs = 4u128 * self.c_squared_num as u128 * n as u128;
        lhs >= rhs
    }

    /// Δ ≥ n/2 + c√n.
    pub fn is_far(&self, n: u64, dist: u64) -> bool {
        2 * dist >= n && self.deviation_reaches(n, 2 * dist - n)
    }

    /// Δ ≤ n/2 - c√n.
    pub fn is_close(&self, n: u64, dist: u64) -> bool {
        2 * dist <= n && self.deviation_reaches(n, n - 2 * dist)
    }

    /// d ≥ 2c√n, i.e. d² den ≥ 4 num n.
    pub fn at_least_two_c_sqrt_n(&self, n: u64, d: u64) -> bool {
        self.deviation_reaches(n, d)
    }

    /// ⌊c√n⌋: the largest r with r² den ≤ num n.
    pub fn floor_c_sqrt_n(&self, n: u64) -> u64 {
        let target = self.c_squared_num as u128 * n as u128;
        let den = self.c_squared_den as u128;
        let mut r = (self.c() * (n as f64).sqrt()).floor() as u128;
        while r > 0 && r * r * den > target {
            r -= 1;
        }
        while (r + 1) * (r + 1) * den <= target {
            r += 1;
        }
        r as u64
    }

    pub fn thresholds(&self, n: u64) -> Thresholds {
        // largest Δ with Δ ≤ n/2 - c√n
        let close_max = (0..=n / 2).rev().find(|&d| self.is_close(n, d));
        // smallest Δ with Δ ≥ n/2 + c√n
        let far_min = (n.div_ceil(2)..=n).find(|&d| self.is_far(n, d));
        Thresholds {
            n,
            close_max,
            far_min,
        }
    }
}

impl fmt::Display for Gap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = (self.c_squared_num, self.c_squared_den);
        let (ra, rb) = (a.isqrt(), b.isqrt());
        if ra * ra == a && rb * rb == b {
            if rb == 1 {
                write!(f, "{ra}")
            } else {
                write!(f, "{ra}/{rb}")
            }
        } else {
            write!(f, "sqrt({a}/{b})")
        }
    }
}

impl FromStr for Gap {
    type Err = GhdError;

    /// Accepts `3`, `3/2`, `1.5` (exact decimal) or `sqrt(2)` / `sqrt(p/q)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            let (num, den) = parse_ratio(inner)?;
            return Self::from_c_squared(num, den);
        }
        let (num, den) = parse_ratio(s)?;
        Self::from_c(num, den)
    }
}

fn parse_ratio(s: &str) -> Result<(u64, u64)> {
    let bad = || GhdError::InvalidArgument(format!("cannot parse rational {s:?}"));
    if let Some((a, b)) = s.split_once('/') {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return Ok((a, b));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.len() > 9 {
            return Err(bad());
        }
        let scale = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        return Ok((int * scale + frac, scale));
    }
    Ok((s.parse().map_err(|_| bad())?, 1))
}

/// Integer cut points of GHD at a given length.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub n: u64,
    /// Largest Δ with output 0, if any.
    pub close_max: Option<u64>,
    /// Smallest Δ with output 1, if any.
    pub far_min: Option<u64>,
}

impl Thresholds {
    #[inline]
    pub fn classify(&self, dist: u64) -> Ternary {
        if self.far_min.is_some_and(|f| dist >= f) {
            Ternary::One
        } else if self.close_max.is_some_and(|c| dist <= c) {
            Ternary::Zero
        } else {
            Ternary::Star
        }
    }

    /// Smallest Δ(x1, x2) for which some y has GHD(x1,y) and GHD(x2,y)
    /// defined and different: far_min - close_max.
    pub fn witness_distance(&self) -> Option<u64> {
        match (self.close_max, self.far_min) {
            (Some(c), Some(f)) => Some(f - c),
            _ => None,
        }
    }
}

/// GHD_{c,n} instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhdParams {
    pub n: usize,
    pub gap: Gap,
    thresholds: Thresholds,
}

impl GhdParams {
    pub fn new(n: usize, gap: Gap) -> Result<Self> {
        if n == 0 {
            return invalid("n must be at least 1");
        }
        if n > MAX_LEN {
            return invalid(format!("n = {n} exceeds {MAX_LEN}"));
        }
        if gap.is_zero() {
            return invalid("c must be positive");
        }
        Ok(Self {
            n,
            gap,
            thresholds: gap.thresholds(n as u64),
        })
    }

    pub fn with_c(n: usize, c_num: u64, c_den: u64) -> Result<Self> {
        Self::new(n, Gap::from_c(c_num, c_den)?)
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn c(&self) -> f64 {
        self.gap.c()
    }

    #[inline]
    pub fn classify_distance(&self, dist: usize) -> Ternary {
        self.thresholds.classify(dist as u64)
    }

    /// μ_{c,n} is nonempty iff some distance gets a defined output.
    pub fn has_defined_inputs(&self) -> bool {
        self.thresholds.close_max.is_some() || self.thresholds.far_min.is_some()
    }

    fn check(&self, x: &BitString, y: &BitString) -> Result<()> {
        check_same_len(x, y)?;
        if x.len() != self.n {
            return invalid(format!(
                "inputs have length {}, expected n = {}",
                x.len(),
                self.n
            ));
        }
        Ok(())
    }
}

/// Output of a partial Boolean function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ternary {
    Zero,
    One,
    Star,
}

impl Ternary {
    /// Star matches both bits.
    pub fn matches(self, bit: bool) -> bool {
        match self {
            Ternary::Zero => !bit,
            Ternary::One => bit,
            Ternary::Star => true,
        }
    }

    pub fn is_defined(self) -> bool {
        self != Ternary::Star
    }

    pub fn as_bit(self) -> Option<bool> {
        match self {
            Ternary::Zero => Some(false),
            Ternary::One => Some(true),
            Ternary::Star => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Ternary::Zero => Ternary::One,
            Ternary::One => Ternary::Zero,
            Ternary::Star => Ternary::Star,
        }
    }
}

impl fmt::Display for Ternary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ternary::Zero => "0",
            Ternary::One => "1",
            Ternary::Star => "star",
        })
    }
}

impl Serialize for Ternary {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Ternary {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        match String::deserialize(deserializer)?.as_str() {
            "0" => Ok(Ternary::Zero),
            "1" => Ok(Ternary::One),
            "star" => Ok(Ternary::Star),
            other => Err(serde::de::Error::custom(format!("bad ternary {other:?}"))),
        }
    }
}

pub fn ghd_eval(p: &GhdParams, x: &BitString, y: &BitString) -> Result<Ternary> {
    p.check(x, y)?;
    Ok(p.classify_distance(distance_unchecked(x, y)))
}

/// x ⊥_c y: |Δ(x,y) - n/2| < c√n.
pub fn near_orthogonal(p: &GhdParams, x: &BitString, y: &BitString) -> Result<bool> {
    p.check(x, y)?;
    let n = p.n as u64;
    let d = distance_unchecked(x, y) as u64;
    let twice_dev = (2 * d).abs_diff(n);
    Ok(!p.gap.deviation_reaches(n, twice_dev))
}

/// |B(x, r)| = sum_{i<=r} C(n, i).
pub fn ball_volume(n: u64, r: u64) -> Result<BigUint> {
    if r > n {
        return invalid(format!("radius {r} exceeds n = {n}"));
    }
    let mut total = BigUint::zero();
    let mut binom = BigUint::one();
    for i in 0..=r {
        total += &binom;
        binom = binom * (n - i) / (i + 1);
    }
    Ok(total)
}

/// Default cap on the number of strings an enumeration may yield.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 26;

/// Every y with Δ(center, y) ≤ r, once each: by number of flips, then flip
/// sets in lexicographic order of their index lists.
pub fn ball_enumerate(center: &BitString, r: usize, cap: u64) -> Result<BallIter> {
    let n = center.len();
    if r > n {
        return invalid(format!("radius {r} exceeds length {n}"));
    }
    let volume = ball_volume(n as u64, r as u64)?;
    if volume > BigUint::from(cap) {
        return Err(GhdError::ResourceLimit(format!(
            "ball of radius {r} in dimension {n} has {volume} points, cap is {cap}"
        )));
    }
    Ok(BallIter {
        center: center.clone(),
        radius: r,
        flips: Vec::new(),
        started: false,
    })
}

pub struct BallIter {
    center: BitString,
    radius: usize,
    flips: Vec<usize>,
    started: bool,
}

impl BallIter {
    /// Next combination of the same size, or None when exhausted.
    fn advance(&mut self) -> bool {
        let n = self.center.len();
        let k = self.flips.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.flips[i] < n - k + i {
                self.flips[i] += 1;
                for j in i + 1..k {
                    self.flips[j] = self.flips[j - 1] + 1;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for BallIter {
    type Item = BitString;

    fn next(&mut self) -> Option<BitString> {
        if !self.started {
            self.started = true;
        } else if !self.advance() {
            let k = self.flips.len() + 1;
            if k > self.radius || k > self.center.len() {
                return None;
            }
            self.flips = (0..k).collect();
        }
        let mut y = self.center.clone();
        for &i in &self.flips {
            y.flip(i);
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn params(n: usize, c: u64) -> GhdParams {
        GhdParams::new(n, Gap::integer(c)).unwrap()
    }

    #[test]
    fn text_round_trip_and_order() {
        let x = bs("0110010");
        assert_eq!(x.to_string(), "0110010");
        assert!(x.get(1) && !x.get(0));
        assert!(bs("0111") < bs("1000"));
        assert!(bs("0000") < bs("0001"));
        assert!("01a".parse::<BitString>().is_err());
        let long = BitString::ones(130);
        assert_eq!(long.weight(), 130);
        assert_eq!(long.complement(), BitString::zeros(130));
    }

    #[test]
    fn distance_examples() {
        assert_eq!(hamming_distance(&bs("0000"), &bs("0000")).unwrap(), 0);
        assert_eq!(hamming_distance(&bs("0101"), &bs("1010")).unwrap(), 4);
        assert!(matches!(
            hamming_distance(&bs("01"), &bs("010")),
            Err(GhdError::InvalidArgument(_))
        ));
    }

    #[test]
    fn distance_matches_coordinate_loop() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let x = BitString::from_bits((0..64).map(|_| rng.random::<bool>()));
            let y = BitString::from_bits((0..64).map(|_| rng.random::<bool>()));
            let slow = (0..64).filter(|&i| x.get(i) != y.get(i)).count();
            assert_eq!(hamming_distance(&x, &y).unwrap(), slow);
        }
    }

    #[test]
    fn ghd_boundaries_n16() {
        let p = params(16, 1);
        let x = BitString::zeros(16);
        let with_weight = |w: usize| BitString::from_bits((0..16).map(|i| i < w));
        assert_eq!(ghd_eval(&p, &x, &with_weight(12)).unwrap(), Ternary::One);
        assert_eq!(ghd_eval(&p, &x, &with_weight(8)).unwrap(), Ternary::Star);
        assert_eq!(ghd_eval(&p, &x, &with_weight(4)).unwrap(), Ternary::Zero);
        assert_eq!(ghd_eval(&p, &x, &with_weight(11)).unwrap(), Ternary::Star);
        assert!(near_orthogonal(&p, &x, &with_weight(8)).unwrap());
        assert!(!near_orthogonal(&p, &x, &with_weight(12)).unwrap());
        assert!(ghd_eval(&p, &x, &BitString::zeros(15)).is_err());
    }

    #[test]
    fn thresholds_irrational_boundary() {
        // n = 12, c = 1: n/2 ± √12 = 6 ± 3.46...
        let t = params(12, 1).thresholds;
        assert_eq!(t.close_max, Some(2));
        assert_eq!(t.far_min, Some(10));
        assert_eq!(t.witness_distance(), Some(8));
        // c = 3/2 at n = 16: 8 ± 6
        let t = GhdParams::new(16, "3/2".parse().unwrap())
            .unwrap()
            .thresholds;
        assert_eq!((t.close_max, t.far_min), (Some(2), Some(14)));
        // c^2 = 2 at n = 8: 4 ± 4
        let t = GhdParams::new(8, "sqrt(2)".parse().unwrap())
            .unwrap()
            .thresholds;
        assert_eq!((t.close_max, t.far_min), (Some(0), Some(8)));
    }

    #[test]
    fn gap_parsing() {
        assert_eq!("1.5".parse::<Gap>().unwrap(), Gap::from_c(3, 2).unwrap());
        assert_eq!(
            Gap::from_c(2, 4).unwrap(),
            Gap::from_c_squared(1, 4).unwrap()
        );
        assert_eq!(Gap::from_c(3, 2).unwrap().to_string(), "3/2");
        assert_eq!("sqrt(2)".parse::<Gap>().unwrap().to_string(), "sqrt(2/1)");
        assert!("x".parse::<Gap>().is_err());
        assert!(GhdParams::new(4, Gap::from_c(0, 1).unwrap()).is_err());
        assert_eq!(Gap::integer(1).floor_c_sqrt_n(25), 5);
        assert_eq!(Gap::integer(1).floor_c_sqrt_n(24), 4);
        assert_eq!(Gap::from_c(3, 2).unwrap().floor_c_sqrt_n(16), 6);
    }

    #[test]
    fn near_orthogonal_iff_star_exhaustive_n10() {
        let p = params(10, 1);
        for a in 0..1u64 << 10 {
            let x = BitString::from_u64(a, 10);
            for b in 0..1u64 << 10 {
                let y = BitString::from_u64(b, 10);
                let star = ghd_eval(&p, &x, &y).unwrap() == Ternary::Star;
                assert_eq!(near_orthogonal(&p, &x, &y).unwrap(), star);
            }
        }
    }

    #[test]
    fn symmetry_and_complement_exhaustive_n8() {
        let p = params(8, 1);
        for a in 0..256u64 {
            let x = BitString::from_u64(a, 8);
            let xc = x.complement();
            for b in 0..256u64 {
                let y = BitString::from_u64(b, 8);
                let v = ghd_eval(&p, &x, &y).unwrap();
                assert_eq!(v, ghd_eval(&p, &y, &x).unwrap());
                if v.is_defined() {
                    assert_eq!(ghd_eval(&p, &xc, &y).unwrap(), v.flipped());
                }
            }
        }
    }

    #[test]
    fn ball_volume_examples() {
        assert_eq!(ball_volume(7, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(ball_volume(4, 1).unwrap(), BigUint::from(5u32));
        assert_eq!(ball_volume(16, 4).unwrap(), BigUint::from(2517u32));
        assert_eq!(ball_volume(12, 3).unwrap(), BigUint::from(299u32));
        assert!(ball_volume(3, 4).is_err());
        for n in 0..40u64 {
            assert_eq!(ball_volume(n, n).unwrap(), BigUint::one() << n);
            for r in 1..=n {
                assert!(ball_volume(n, r).unwrap() > ball_volume(n, r - 1).unwrap());
            }
        }
    }

    #[test]
    fn small_ball_bounds_n100() {
        // r = c√n with c = 2: (√n/c)^r < |B| < n^r
        let (n, r) = (100u64, 20u64);
        let v = ball_volume(n, r).unwrap();
        assert!(BigUint::from(5u32).pow(r as u32) < v);
        assert!(v < BigUint::from(n).pow(r as u32));
    }

    #[test]
    fn large_ball_entropy_bound() {
        use crate::numeric::binary_entropy;
        for n in 1..=64u64 {
            for (a, b) in [(1u64, 4u64), (1, 3), (1, 2)] {
                if (n * a) % b != 0 {
                    continue;
                }
                let r = n * a / b;
                let alpha = a as f64 / b as f64;
                let bound = 2f64.powf(n as f64 * binary_entropy(alpha).unwrap());
                let v: f64 = ball_volume(n, r).unwrap().to_string().parse().unwrap();
                assert!(v <= bound * (1.0 + 1e-12), "n={n} alpha={alpha}");
            }
        }
    }

    #[test]
    fn ball_enumeration_order() {
        let got: Vec<String> = ball_enumerate(&bs("000"), 1, 100)
            .unwrap()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, ["000", "100", "010", "001"]);
        let got: Vec<BitString> = ball_enumerate(&bs("0000"), 0, 100).unwrap().collect();
        assert_eq!(got, vec![bs("0000")]);
        let center = BitString::from_u64(0b1011_0010_0110, 12);
        let all: Vec<BitString> = ball_enumerate(&center, 3, 1000).unwrap().collect();
        assert_eq!(all.len(), 299);
        let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
        assert_eq!(distinct.len(), 299);
        assert!(all
            .iter()
            .all(|y| hamming_distance(&center, y).unwrap() <= 3));
        assert!(matches!(
            ball_enumerate(&center, 6, 100),
            Err(GhdError::ResourceLimit(_))
        ));
    }

    #[test]
    fn interleave_select_round_trip() {
        let inner = bs("101");
        let outer = bs("0011");
        let idx = [1, 4, 6];
        let x = BitString::interleave(&idx, &inner, &outer).unwrap();
        assert_eq!(x.to_string(), "0101011");
        assert_eq!(x.select(&idx), inner);
        assert_eq!(x.select(&[0, 2, 3, 5]), outer);
    }

    fn arb_triple() -> impl Strategy<Value = (BitString, BitString, BitString)> {
        (1usize..200).prop_flat_map(|n| {
            let v = || proptest::collection::vec(any::<bool>(), n).prop_map(BitString::from_bits);
            (v(), v(), v())
        })
    }

    proptest! {
        #[test]
        fn metric_axioms((x, y, z) in arb_triple()) {
            let d = |a: &BitString, b: &BitString| hamming_distance(a, b).unwrap();
            prop_assert_eq!(d(&x, &x), 0);
            prop_assert_eq!(d(&x, &y), d(&y, &x));
            prop_assert!(d(&x, &y) + d(&y, &z) >= d(&x, &z));
        }

        #[test]
        fn text_form_round_trips((x, _, _) in arb_triple()) {
            let back: BitString = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
