use crate::bitstring::{ball_volume, distance_unchecked, BitString, Gap, GhdParams};
use crate::distributions::SeededRng;
use crate::error::{invalid, GhdError, Result};
use crate::limits::HARD_SINGLE_CAP;
use crate::protocols::{DeterministicProtocol, Speaker};
use num_traits::ToPrimitive;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CoverStrategy {
    Random,
    Greedy,
}

/// Radius-r Hamming balls around `centers` covering {0,1}^n.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoveringCode {
    pub n: usize,
    pub radius: usize,
    pub strategy: CoverStrategy,
    pub seed: Option<u64>,
    pub centers: Vec<BitString>,
}

impl CoveringCode {
    pub fn size(&self) -> usize {
        self.centers.len()
    }

    pub fn log2_size(&self) -> f64 {
        (self.centers.len() as f64).log2()
    }

    /// n - log2 |C|: the saving over sending x outright.
    pub fn gap(&self) -> f64 {
        self.n as f64 - self.log2_size()
    }
}

/// Outcome of a coverage check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverVerification {
    pub exhaustive: bool,
    pub points_checked: u64,
    pub uncovered: u64,
    pub first_uncovered: Option<BitString>,
}

impl CoverVerification {
    pub fn covered(&self) -> bool {
        self.uncovered == 0
    }
}

/// Largest n for which a cover can be built (the point set is a bitmap).
pub const MAX_BUILD_N: usize = HARD_SINGLE_CAP;
/// Largest n accepted by sampled verification.
pub const MAX_SAMPLED_N: usize = 40;
/// Candidates scored per step of local greedy.
const LOCAL_CANDIDATES: usize = 16;
/// Exact lazy greedy runs while 2^n |B| stays below this.
const EXACT_GREEDY_WORK: u64 = 1 << 31;

/// All masks of weight at most r over n <= 64 bits, by weight then value.
pub fn ball_masks(n: usize, r: usize) -> Vec<u64> {
    assert!(n <= 64);
    let mut out = vec![0u64];
    for w in 1..=r.min(n) {
        let mut m: u64 = if w == 64 { u64::MAX } else { (1u64 << w) - 1 };
        loop {
            out.push(m);
            if w == n {
                break;
            }
            // next mask with the same popcount
            let low = m & m.wrapping_neg();
            let ripple = m.wrapping_add(low);
            if ripple == 0 {
                break;
            }
            let next = ripple | (((m ^ ripple) >> 2) / low);
            if n < 64 && next >> n != 0 {
                break;
            }
            m = next;
        }
    }
    out
}

/// t = ⌈ln 2 (n + 1) 2^n / |B(n, r)|⌉, the number of random centers drawn.
pub fn random_cover_size(n: usize, r: usize) -> Result<u64> {
    let vol = ball_volume(n as u64, r.min(n) as u64)?
        .to_f64()
        .expect("finite");
    let t = std::f64::consts::LN_2 * (n as f64 + 1.0) * 2f64.powi(n as i32) / vol;
    Ok(t.ceil().max(1.0) as u64)
}

struct Bitmap(Vec<u64>);

impl Bitmap {
    fn new(n: usize) -> Self {
        Self(vec![0; (1usize << n).div_ceil(64)])
    }
    #[inline]
    fn get(&self, i: u64) -> bool {
        self.0[(i / 64) as usize] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: u64) -> bool {
        let w = &mut self.0[(i / 64) as usize];
        let fresh = *w >> (i % 64) & 1 == 0;
        *w |= 1 << (i % 64);
        fresh
    }
    fn first_clear(&self, from: u64, limit: u64) -> Option<u64> {
        let mut word = (from / 64) as usize;
        let mut mask = !0u64 << (from % 64);
        while word < self.0.len() {
            let free = !self.0[word] & mask;
            if free != 0 {
                let i = word as u64 * 64 + free.trailing_zeros() as u64;
                return (i < limit).then_some(i);
            }
            word += 1;
            mask = !0;
        }
        None
    }
}

fn gain(covered: &Bitmap, center: u64, masks: &[u64]) -> u64 {
    masks.iter().filter(|&&m| !covered.get(center ^ m)).count() as u64
}

fn mark(covered: &mut Bitmap, center: u64, masks: &[u64]) -> u64 {
    masks.iter().filter(|&&m| covered.set(center ^ m)).count() as u64
}

fn greedy_exact(n: usize, masks: &[u64]) -> Vec<u64> {
    let total = 1u64 << n;
    let mut covered = Bitmap::new(n);
    let mut heap: BinaryHeap<(u64, Reverse<u64>)> = (0..total)
        .map(|c| (masks.len() as u64, Reverse(c)))
        .collect();
    let mut left = total;
    let mut centers = Vec::new();
    while left > 0 {
        let (g, Reverse(c)) = heap.pop().expect("uncovered points remain");
        let fresh = gain(&covered, c, masks);
        if fresh == g {
            left -= mark(&mut covered, c, masks);
            centers.push(c);
        } else if fresh > 0 {
            heap.push((fresh, Reverse(c)));
        }
    }
    centers
}

fn greedy_local(n: usize, masks: &[u64], rng: &mut SeededRng) -> Vec<u64> {
    let total = 1u64 << n;
    let mut covered = Bitmap::new(n);
    let mut centers = Vec::new();
    let mut cursor = 0;
    while let Some(u) = covered.first_clear(cursor, total) {
        cursor = u;
        let mut best = (gain(&covered, u, masks), u);
        for _ in 1..LOCAL_CANDIDATES {
            let c = u ^ masks[rng.random_range(0..masks.len())];
            let g = gain(&covered, c, masks);
            if g > best.0 {
                best = (g, c);
            }
        }
        mark(&mut covered, best.1, masks);
        centers.push(best.1);
    }
    centers
}

/// Builds a cover of {0,1}^n by radius-⌊c√n⌋ balls and verifies it.
///
/// GREEDY runs exact lazy greedy when 2^n |B| < 2^31; above that it takes the
/// first uncovered point and the best of a few random centers near it.
pub fn build_covering(
    n: usize,
    gap: Gap,
    strategy: CoverStrategy,
    rng: &mut SeededRng,
) -> Result<CoveringCode> {
    if n == 0 || n > MAX_BUILD_N {
        return Err(GhdError::ResourceLimit(format!(
            "covering needs 1 <= n <= {MAX_BUILD_N}, got {n}"
        )));
    }
    let radius = gap.floor_c_sqrt_n(n as u64).min(n as u64) as usize;
    let seed = rng.seed();
    let code = |centers: Vec<u64>| CoveringCode {
        n,
        radius,
        strategy,
        seed: Some(seed),
        centers: centers
            .into_iter()
            .map(|c| BitString::from_u64(c, n))
            .collect(),
    };
    if radius >= n {
        return Ok(code(vec![0]));
    }
    let masks = ball_masks(n, radius);
    match strategy {
        CoverStrategy::Greedy => {
            let centers = if (masks.len() as u64) << n < EXACT_GREEDY_WORK {
                greedy_exact(n, &masks)
            } else {
                greedy_local(n, &masks, rng)
            };
            let out = code(centers);
            debug_assert!(verify_cover(&out, 0, rng)?.covered());
            Ok(out)
        }
        CoverStrategy::Random => {
            let t = random_cover_size(n, radius)?;
            let base = rng.derive_seed();
            for attempt in 0..3 {
                let mut sub = SeededRng::new(base, attempt);
                let mut seen = HashSet::new();
                let centers: Vec<u64> = (0..t)
                    .map(|_| sub.random_range(0..1u64 << n))
                    .filter(|c| seen.insert(*c))
                    .collect();
                let out = code(centers);
                if verify_cover(&out, 0, rng)?.covered() {
                    return Ok(out);
                }
            }
            Err(GhdError::ConstructionFailed(format!(
                "{t} random centers failed to cover {{0,1}}^{n} in 3 attempts"
            )))
        }
    }
}

/// Checks coverage exhaustively for n <= 28, else on `samples` uniform points
/// (n <= 40).
pub fn verify_cover(
    cover: &CoveringCode,
    samples: u64,
    rng: &mut SeededRng,
) -> Result<CoverVerification> {
    let n = cover.n;
    if cover.centers.iter().any(|c| c.len() != n) {
        return invalid("center length differs from n");
    }
    if cover.centers.iter().collect::<HashSet<_>>().len() != cover.centers.len() {
        return invalid("centers must be distinct");
    }
    if cover.radius > n {
        return invalid("radius exceeds n");
    }
    if n <= MAX_BUILD_N {
        let masks = ball_masks(n, cover.radius);
        let mut covered = Bitmap::new(n);
        for c in &cover.centers {
            mark(&mut covered, c.to_u64(), &masks);
        }
        let total = 1u64 << n;
        let first = covered.first_clear(0, total);
        let hits: u64 = covered.0.iter().map(|w| w.count_ones() as u64).sum();
        return Ok(CoverVerification {
            exhaustive: true,
            points_checked: total,
            uncovered: total - hits,
            first_uncovered: first.map(|i| BitString::from_u64(i, n)),
        });
    }
    if n > MAX_SAMPLED_N {
        return Err(GhdError::ResourceLimit(format!(
            "cover verification needs n <= {MAX_SAMPLED_N}"
        )));
    }
    let mut uncovered = 0;
    let mut first = None;
    for _ in 0..samples {
        let x = BitString::from_u64(rng.random_range(0..1u64 << n), n);
        if covering_assignment(cover, &x).is_none() {
            uncovered += 1;
            first.get_or_insert(x);
        }
    }
    Ok(CoverVerification {
        exhaustive: false,
        points_checked: samples,
        uncovered,
        first_uncovered: first,
    })
}

/// Index of the first center within the radius of x.
pub fn covering_assignment(cover: &CoveringCode, x: &BitString) -> Option<usize> {
    cover
        .centers
        .iter()
        .position(|c| distance_unchecked(c, x) <= cover.radius)
}

/// Lexicographically least x′ in B(center, r) with GHD(x′, y) defined.
pub fn cover_decode(
    p: &GhdParams,
    center: &BitString,
    radius: usize,
    y: &BitString,
) -> Option<BitString> {
    let n = p.n;
    let t = p.thresholds();
    let (low, high) = (t.close_max.map(|v| v as i64), t.far_min.map(|v| v as i64));
    let mut rem_d = (0..n).filter(|&i| center.get(i) != y.get(i)).count() as i64;
    let mut rem_s = n as i64 - rem_d;
    let d0 = rem_d;
    let (mut f_d, mut f_s) = (0i64, 0i64);
    let r = radius as i64;
    // can the undecided positions still land on a defined side?
    let feasible = |f_d: i64, f_s: i64, rem_d: i64, rem_s: i64| {
        let budget = r - f_d - f_s;
        if budget < 0 {
            return false;
        }
        let base = d0 - f_d + f_s;
        let min = base - rem_d.min(budget);
        let max = base + rem_s.min(budget);
        low.is_some_and(|l| min <= l) || high.is_some_and(|h| max >= h)
    };
    if !feasible(0, 0, rem_d, rem_s) {
        return None;
    }
    let mut out = center.clone();
    for i in 0..n {
        let differs = center.get(i) != y.get(i);
        if differs {
            rem_d -= 1;
        } else {
            rem_s -= 1;
        }
        let keep = feasible(f_d, f_s, rem_d, rem_s);
        let flip = {
            let (a, b) = if differs {
                (f_d + 1, f_s)
            } else {
                (f_d, f_s + 1)
            };
            feasible(a, b, rem_d, rem_s)
        };
        // bit 0 sorts first
        let want_flip = match (keep, flip) {
            (true, true) => center.get(i),
            (true, false) => false,
            (false, true) => true,
            (false, false) => unreachable!("feasibility is preserved"),
        };
        if want_flip {
            out.flip(i);
            if differs {
                f_d += 1;
            } else {
                f_s += 1;
            }
        }
    }
    Some(out)
}

/// One-round protocol: Alice names the first center covering x; Bob decodes
/// x′ with [`cover_decode`] and outputs GHD(x′, y), or 0 if no x′ qualifies.
pub fn protocol_from_cover(cover: &CoveringCode, p: &GhdParams) -> Result<DeterministicProtocol> {
    if cover.n != p.n {
        return invalid("cover length differs from the instance");
    }
    if cover.centers.is_empty() {
        return invalid("cover has no centers");
    }
    let count = cover.centers.len();
    let bits = (usize::BITS - (count - 1).leading_zeros()).max(1) as usize;
    let cover = Arc::new(cover.clone());
    let alice_cover = Arc::clone(&cover);
    let bob_params = *p;
    DeterministicProtocol::from_callbacks(
        p.n,
        vec![bits],
        Speaker::Alice,
        vec![Arc::new(move |x, _| {
            let i = covering_assignment(&alice_cover, x)
                .ok_or_else(|| GhdError::Protocol(format!("{x} is not covered")))?;
            Ok(BitString::from_u64(i as u64, bits))
        })],
        Arc::new(move |y, t| {
            let i = t[0].to_u64() as usize;
            let center = cover
                .centers
                .get(i)
                .ok_or_else(|| GhdError::Protocol(format!("center index {i} out of range")))?;
            Ok(match cover_decode(&bob_params, center, cover.radius, y) {
                Some(x) => bob_params
                    .classify_distance(distance_unchecked(&x, y))
                    .as_bit()
                    .unwrap_or(false),
                None => false,
            })
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::ball_enumerate;
    use crate::distributions::Distribution;
    use crate::protocols::error_exact;

    #[test]
    fn masks_match_ball_volume() {
        for n in 1..=12 {
            for r in 0..=n {
                let m = ball_masks(n, r);
                assert_eq!(
                    m.len() as u64,
                    ball_volume(n as u64, r as u64).unwrap().to_u64().unwrap()
                );
                assert!(m
                    .iter()
                    .all(|v| v.count_ones() as usize <= r && (n == 64 || v >> n == 0)));
                assert_eq!(m.iter().collect::<HashSet<_>>().len(), m.len());
            }
        }
    }

    #[test]
    fn random_size_formula() {
        let t = random_cover_size(16, 4).unwrap();
        let expect = (std::f64::consts::LN_2 * 17.0 * 65536.0 / 2517.0).ceil() as u64;
        assert_eq!(t, expect);
    }

    #[test]
    fn greedy_and_random_cover_n16() {
        let mut rng = SeededRng::from_seed(3);
        let g = build_covering(16, Gap::integer(1), CoverStrategy::Greedy, &mut rng).unwrap();
        let r = build_covering(16, Gap::integer(1), CoverStrategy::Random, &mut rng).unwrap();
        assert_eq!(g.radius, 4);
        assert!(verify_cover(&g, 0, &mut rng).unwrap().covered());
        assert!(verify_cover(&r, 0, &mut rng).unwrap().covered());
        assert!(g.centers.len() <= r.centers.len());
        assert!(r.centers.len() as u64 <= random_cover_size(16, 4).unwrap());
    }

    #[test]
    fn radius_at_least_n_uses_one_center() {
        let mut rng = SeededRng::from_seed(0);
        let g = build_covering(3, Gap::integer(2), CoverStrategy::Greedy, &mut rng).unwrap();
        assert_eq!(g.centers.len(), 1);
    }

    #[test]
    fn verification_reports_holes() {
        let mut rng = SeededRng::from_seed(0);
        let cover = CoveringCode {
            n: 4,
            radius: 1,
            strategy: CoverStrategy::Greedy,
            seed: None,
            centers: vec![BitString::zeros(4)],
        };
        let v = verify_cover(&cover, 0, &mut rng).unwrap();
        assert_eq!(v.uncovered, 11);
        assert_eq!(v.first_uncovered.unwrap().to_u64(), 3);
    }

    #[test]
    fn decode_matches_ball_enumeration() {
        let p = GhdParams::new(9, Gap::integer(1)).unwrap();
        for (zc, r) in [
            (0u64, 3usize),
            (0b1_0110_1001, 3),
            (0b1_1111_0000, 2),
            (5, 1),
        ] {
            let z = BitString::from_u64(zc, 9);
            for yv in 0..512u64 {
                let y = BitString::from_u64(yv, 9);
                let mut ball: Vec<BitString> = ball_enumerate(&z, r, 1 << 20).unwrap().collect();
                ball.sort();
                let brute = ball
                    .into_iter()
                    .find(|x| p.classify_distance(distance_unchecked(x, &y)).is_defined());
                assert_eq!(cover_decode(&p, &z, r, &y), brute, "z={z} y={y}");
            }
        }
    }

    #[test]
    fn cover_protocol_zero_error_n9() {
        let mut rng = SeededRng::from_seed(1);
        let p = GhdParams::new(9, Gap::integer(1)).unwrap();
        let cover = build_covering(9, Gap::integer(1), CoverStrategy::Greedy, &mut rng).unwrap();
        let proto = protocol_from_cover(&cover, &p).unwrap();
        assert!(proto.message_bits()[0] < 9);
        let rep = error_exact(&proto, &p, Distribution::Mu).unwrap();
        assert_eq!(rep.errors, 0);
    }
}
