//! One-way communication: witnesses, d-maximal sets, covering codes and the
//! matching protocol, exact small-n one-way complexity, and the w(x) function.

mod coloring;
mod cover;

pub use coloring::{
    chromatic_number, exact_oneway_complexity, max_clique, ColoringOutcome, ConflictGraphSummary,
    Graph, DEFAULT_NODE_BUDGET,
};
pub use cover::{
    ball_masks, build_covering, cover_decode, covering_assignment, protocol_from_cover,
    random_cover_size, verify_cover, CoverStrategy, CoverVerification, CoveringCode, MAX_BUILD_N,
    MAX_SAMPLED_N,
};

use crate::bitstring::{ball_volume, distance_unchecked, BitString, GhdParams, Ternary};
use crate::error::{invalid, Result};
use crate::limits::check_singles;
use crate::numeric::neumaier_sum;
use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Does `y` witness `(x1, x2)`: both outputs defined and different?
pub fn is_witness(p: &GhdParams, x1: &BitString, x2: &BitString, y: &BitString) -> bool {
    let a = p.classify_distance(distance_unchecked(x1, y));
    let b = p.classify_distance(distance_unchecked(x2, y));
    a.is_defined() && b.is_defined() && a != b
}

/// The witness from the constructive proof: y copies x1 on the coordinates
/// where x1 and x2 differ and on ⌊|L|/2⌋ (else ⌈|L|/2⌉) of the agreeing
/// coordinates L, and flips the rest of L. Returns `None` when Δ(x1, x2) is
/// below 2c√n or neither rounding verifies.
pub fn find_witness(p: &GhdParams, x1: &BitString, x2: &BitString) -> Result<Option<BitString>> {
    if x1.len() != p.n || x2.len() != p.n {
        return invalid(format!("inputs must have length {}", p.n));
    }
    let n = p.n as u64;
    let delta = distance_unchecked(x1, x2) as u64;
    if !p.gap.at_least_two_c_sqrt_n(n, delta) {
        return Ok(None);
    }
    let agree: Vec<usize> = (0..p.n).filter(|&i| x1.get(i) == x2.get(i)).collect();
    let half = agree.len() / 2;
    for keep in [half, agree.len() - half] {
        let mut y = x1.clone();
        for &i in &agree[keep..] {
            y.flip(i);
        }
        if is_witness(p, x1, x2, &y) {
            return Ok(Some(y));
        }
    }
    Ok(None)
}

/// Brute force over all 2^n candidates.
pub fn brute_force_witness(
    p: &GhdParams,
    x1: &BitString,
    x2: &BitString,
) -> Result<Option<BitString>> {
    check_singles(p.n)?;
    if p.n > 63 {
        return invalid("brute force needs n <= 63");
    }
    Ok((0..1u64 << p.n)
        .map(|b| BitString::from_u64(b, p.n))
        .find(|y| is_witness(p, x1, x2, y)))
}

/// Size of the largest set with pairwise distance at most d (Bezrukov):
/// a ball of radius t for d = 2t, two adjacent such balls for d = 2t + 1,
/// and the whole cube for d = n.
pub fn d_maximal_size(n: u64, d: u64) -> Result<BigUint> {
    if d > n {
        return invalid(format!("d = {d} exceeds n = {n}"));
    }
    if d == n {
        return Ok(BigUint::from(1u32) << n);
    }
    if d % 2 == 0 {
        return ball_volume(n, d / 2);
    }
    if n == 0 {
        return Ok(BigUint::from(1u32));
    }
    Ok(ball_volume(n - 1, d / 2)? * 2u32)
}

/// Exhaustive maximum size of a set with diameter at most d, by clique search.
pub fn max_diameter_set_exhaustive(n: usize, d: usize) -> Result<usize> {
    if n > 10 {
        return invalid("exhaustive diameter search needs n <= 10");
    }
    let g = Graph::from_predicate(1 << n, |a, b| ((a ^ b) as u32).count_ones() as usize <= d);
    let (clique, complete) = max_clique(&g, u64::MAX, Some(0));
    debug_assert!(complete);
    Ok(clique.len())
}

/// w(x) as an exact count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WValue {
    /// y in Y with GHD(x, y) and GHD(0^n, y) both defined and different.
    pub count: u64,
    /// |Y| = |{y : GHD(0^n, y) defined}|.
    pub size: u64,
}

impl WValue {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.size as f64
    }
}

/// w(x) = Pr_{y ∈ Y}[GHD(x, y) ≠ GHD(0^n, y)], Y = {y : GHD(0^n, y) defined},
/// counting only y for which GHD(x, y) is defined too.
pub fn w_function(p: &GhdParams, x: &BitString) -> Result<WValue> {
    if p.n > 20 {
        return Err(crate::GhdError::ResourceLimit(format!(
            "w needs n <= 20, got {}",
            p.n
        )));
    }
    if x.len() != p.n {
        return invalid("x has the wrong length");
    }
    let xa = x.to_u64();
    let (mut count, mut size) = (0u64, 0u64);
    for y in 0..1u64 << p.n {
        let base = p.classify_distance(y.count_ones() as usize);
        if !base.is_defined() {
            continue;
        }
        size += 1;
        let v = p.classify_distance((xa ^ y).count_ones() as usize);
        if v.is_defined() && v != base {
            count += 1;
        }
    }
    if size == 0 {
        return invalid("Y is empty");
    }
    Ok(WValue { count, size })
}

/// Lower-side witness probability for |x| = m via hypergeometric conditioning:
/// sum over n1 <= n/2 - c√n of Pr[|y| = n1 | lower side] times
/// Pr[Hyp(n, m, n1) <= (m + n1)/2 - n/4 - (c/2)√n].
pub fn w_decomposition(p: &GhdParams, m: u64) -> Result<f64> {
    let n = p.n as u64;
    if m > n {
        return invalid(format!("m = {m} exceeds n = {n}"));
    }
    let t = p.thresholds();
    let (Some(low), Some(far)) = (t.close_max, t.far_min) else {
        return invalid("both sides of Y must be nonempty");
    };
    let weights = crate::numeric::binomial_pmf_table(n, 0.5f64);
    let side = neumaier_sum(weights[..=low as usize].iter().cloned());
    let terms = (0..=low).map(|n1| {
        // 2k <= m + n1 - (n/2 + c√n) for integer k is 2k <= m + n1 - far
        let kmax = (m as i64 + n1 as i64 - far as i64).div_euclid(2);
        let tail =
            crate::distributions::hypergeom_tail_le(kmax, n, m, n1).expect("valid parameters");
        weights[n1 as usize] / side * tail
    });
    Ok(neumaier_sum(terms))
}

/// The same lower-side fraction counted over all y.
pub fn w_lower_side_exhaustive(p: &GhdParams, x: &BitString) -> Result<f64> {
    check_singles(p.n)?;
    let xa = x.to_u64();
    let (mut hit, mut total) = (0u64, 0u64);
    for y in 0..1u64 << p.n {
        if p.classify_distance(y.count_ones() as usize) != Ternary::Zero {
            continue;
        }
        total += 1;
        if p.classify_distance((xa ^ y).count_ones() as usize) == Ternary::One {
            hit += 1;
        }
    }
    if total == 0 {
        return invalid("lower side of Y is empty");
    }
    Ok(hit as f64 / total as f64)
}

/// log2 of a big integer, accurate for any size.
pub fn log2_big(v: &BigUint) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap().log2();
    }
    let shift = bits - 60;
    (v >> shift).to_f64().unwrap().log2() + shift as f64
}
