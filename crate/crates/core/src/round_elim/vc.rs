use crate::bitstring::BitString;
use crate::error::{invalid, GhdError, Result};
use crate::report::CheckReport;
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::collections::HashSet;

/// Largest n accepted by the shattering search.
pub const VC_MAX_N: usize = 24;
/// Largest set accepted by the shattering search.
pub const VC_MAX_SET: usize = 1 << 20;
/// Cap on (candidate index sets) x |S| work.
const VC_WORK_BUDGET: u64 = 1 << 36;

/// One realized pattern: `member` restricted to the index set equals `pattern`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub pattern: BitString,
    pub member: BitString,
}

/// A shattered index set with a member of S for each of its 2^|I| patterns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShatterCertificate {
    pub index_set: Vec<usize>,
    /// Entry j carries the pattern whose bit i is bit i of j.
    pub pattern_map: Vec<PatternEntry>,
}

impl ShatterCertificate {
    /// Member realizing a pattern (bit i of the pattern sits at `index_set[i]`).
    pub fn member_for(&self, pattern: &BitString) -> Option<&BitString> {
        if pattern.len() != self.index_set.len() || pattern.len() > 63 {
            return None;
        }
        self.pattern_map
            .get(pattern.to_u64() as usize)
            .map(|e| &e.member)
    }

    /// Every pattern appears and its member restricts to it.
    pub fn replay(&self) -> bool {
        let d = self.index_set.len();
        self.pattern_map.len() == 1usize << d
            && self.pattern_map.iter().enumerate().all(|(j, e)| {
                e.pattern == BitString::from_u64(j as u64, d)
                    && e.member.select(&self.index_set) == e.pattern
            })
    }
}

struct PointSet {
    n: usize,
    points: Vec<u32>,
    source: Vec<BitString>,
}

fn prepare(s: &[BitString], n: usize) -> Result<PointSet> {
    if s.is_empty() {
        return invalid("the set must be nonempty");
    }
    if n > VC_MAX_N {
        return Err(GhdError::ResourceLimit(format!(
            "shattering search needs n <= {VC_MAX_N}, got {n}"
        )));
    }
    if s.len() > VC_MAX_SET {
        return Err(GhdError::ResourceLimit(format!(
            "shattering search needs |S| <= {VC_MAX_SET}"
        )));
    }
    if s.iter().any(|x| x.len() != n) {
        return invalid(format!("every member must have length {n}"));
    }
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut source = Vec::new();
    for x in s {
        let v = x.to_u64() as u32;
        if seen.insert(v) {
            points.push(v);
            source.push(x.clone());
        }
    }
    Ok(PointSet { n, points, source })
}

#[inline]
fn project(x: u32, idx: &[usize]) -> usize {
    idx.iter()
        .enumerate()
        .fold(0, |acc, (j, &i)| acc | ((x as usize >> i & 1) << j))
}

fn shatters(points: &[u32], idx: &[usize]) -> bool {
    let need = 1usize << idx.len();
    if points.len() < need {
        return false;
    }
    let mut seen = vec![false; need];
    let mut found = 0;
    for &x in points {
        let p = project(x, idx);
        if !seen[p] {
            seen[p] = true;
            found += 1;
            if found == need {
                return true;
            }
        }
    }
    false
}

/// Index lists of shattered sets in lexicographic order, level by level,
/// stopping after level `stop_at` if given.
fn shattered_levels(ps: &PointSet, stop_at: Option<usize>) -> Result<Vec<Vec<Vec<usize>>>> {
    let mut levels: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
    let mut work = 0u64;
    loop {
        let d = levels.len();
        if stop_at.is_some_and(|s| d > s) || d > ps.n || ps.points.len() < 1 << d {
            break;
        }
        let prev = levels.last().expect("level 0 exists");
        let prev_masks: HashSet<u32> = prev
            .iter()
            .map(|idx| idx.iter().map(|&i| 1u32 << i).sum())
            .collect();
        let candidates: Vec<Vec<usize>> = prev
            .iter()
            .flat_map(|a| {
                let start = a.last().map_or(0, |&m| m + 1);
                (start..ps.n).map(move |j| {
                    let mut c = a.clone();
                    c.push(j);
                    c
                })
            })
            .filter(|c| {
                let mask: u32 = c.iter().map(|&i| 1u32 << i).sum();
                c.iter().all(|&i| prev_masks.contains(&(mask & !(1 << i))))
            })
            .collect();
        work += candidates.len() as u64 * ps.points.len() as u64;
        if work > VC_WORK_BUDGET {
            return Err(GhdError::ResourceLimit(
                "shattering search exceeded its work budget".into(),
            ));
        }
        let level: Vec<Vec<usize>> = candidates
            .into_par_iter()
            .filter(|c| shatters(&ps.points, c))
            .collect();
        if level.is_empty() {
            break;
        }
        levels.push(level);
    }
    Ok(levels)
}

fn certificate(ps: &PointSet, idx: Vec<usize>) -> ShatterCertificate {
    let d = idx.len();
    let mut slots: Vec<Option<usize>> = vec![None; 1 << d];
    for (k, &x) in ps.points.iter().enumerate() {
        slots[project(x, &idx)].get_or_insert(k);
    }
    let pattern_map = slots
        .into_iter()
        .enumerate()
        .map(|(j, k)| PatternEntry {
            pattern: BitString::from_u64(j as u64, d),
            member: ps.source[k.expect("shattered")].clone(),
        })
        .collect();
    ShatterCertificate {
        index_set: idx,
        pattern_map,
    }
}

/// Exact VC dimension with the lexicographically least maximum shattered set.
/// Members are taken in order; the first member realizing a pattern is cited.
pub fn vc_dimension(s: &[BitString], n: usize) -> Result<(usize, ShatterCertificate)> {
    let ps = prepare(s, n)?;
    let levels = shattered_levels(&ps, None)?;
    let top = levels.last().expect("nonempty")[0].clone();
    Ok((top.len(), certificate(&ps, top)))
}

/// Lexicographically least shattered set of exactly `size` coordinates.
pub fn shattered_set(s: &[BitString], n: usize, size: usize) -> Result<Option<ShatterCertificate>> {
    let ps = prepare(s, n)?;
    let levels = shattered_levels(&ps, Some(size))?;
    Ok(levels.get(size).map(|l| certificate(&ps, l[0].clone())))
}

/// Σ_{i ≤ d} C(n, i).
pub fn binomial_prefix_sum(n: u64, d: u64) -> BigUint {
    let mut term = BigUint::from(1u32);
    let mut sum = term.clone();
    for i in 1..=d.min(n) {
        term = term * (n - i + 1) / i;
        sum += &term;
    }
    sum
}

/// |S| against Sauer's bound Σ_{i ≤ vcd} C(n, i). The weaker form with
/// d = vcd + 1 (vcd < d) is reported alongside.
pub fn sauer_bound_check(s: &[BitString], n: usize) -> Result<CheckReport> {
    let (vcd, cert) = vc_dimension(s, n)?;
    let size = s.iter().collect::<HashSet<_>>().len();
    let tight = binomial_prefix_sum(n as u64, vcd as u64);
    let loose = binomial_prefix_sum(n as u64, vcd as u64 + 1);
    let pass = BigUint::from(size) <= tight;
    Ok(CheckReport::new(
        "sauer_bound",
        json!({ "n": n, "size": size }),
        size as f64,
        tight.to_f64().unwrap_or(f64::INFINITY),
        pass,
    )
    .detail("vcd", vcd)
    .detail("index_set", cert.index_set)
    .detail("bound_exact", tight.to_string())
    .detail("bound_d_plus_one", loose.to_string())
    .detail("d_plus_one_pass", BigUint::from(size) <= loose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SeededRng;
    use rand::Rng;

    fn indices(mask: u32) -> Vec<usize> {
        (0..32).filter(|i| mask >> i & 1 == 1).collect()
    }

    fn set(n: usize, vals: &[u64]) -> Vec<BitString> {
        vals.iter().map(|&v| BitString::from_u64(v, n)).collect()
    }

    #[test]
    fn trivial_sets() {
        let (d, c) = vc_dimension(&set(5, &[0]), 5).unwrap();
        assert_eq!(d, 0);
        assert!(c.replay());
        let cube: Vec<u64> = (0..64).collect();
        let (d, c) = vc_dimension(&set(6, &cube), 6).unwrap();
        assert_eq!(d, 6);
        assert!(c.replay());
        assert!(vc_dimension(&[], 3).is_err());
    }

    #[test]
    fn lexicographically_least_certificate() {
        // {000, 100, 010, 110} over coordinates 0,1 and {001, 011}
        let s = set(3, &[0, 1, 2, 3, 4, 6]);
        let (d, c) = vc_dimension(&s, 3).unwrap();
        assert_eq!(d, 2);
        assert_eq!(c.index_set, vec![0, 1]);
        assert!(c.replay());
        let one = shattered_set(&s, 3, 1).unwrap().unwrap();
        assert_eq!(one.index_set, vec![0]);
        assert!(shattered_set(&s, 3, 3).unwrap().is_none());
    }

    #[test]
    fn brute_force_agreement() {
        let mut rng = SeededRng::from_seed(5);
        for _ in 0..60 {
            let n = 6;
            let k = rng.random_range(1..40);
            let s: Vec<BitString> = (0..k)
                .map(|_| BitString::from_u64(rng.random_range(0..64), n))
                .collect();
            let pts: Vec<u32> = s.iter().map(|x| x.to_u64() as u32).collect();
            let brute = (0u32..64)
                .filter(|&m| shatters(&pts, &indices(m)))
                .map(|m| m.count_ones() as usize)
                .max()
                .unwrap();
            let (d, c) = vc_dimension(&s, n).unwrap();
            assert_eq!(d, brute);
            assert!(c.replay());
        }
    }

    #[test]
    fn sauer_examples() {
        let r = sauer_bound_check(&set(4, &[9]), 4).unwrap();
        assert!(r.pass);
        assert_eq!(r.bound, 1.0);
        assert_eq!(r.details["bound_d_plus_one"], "5");
        let cube: Vec<u64> = (0..16).collect();
        let r = sauer_bound_check(&set(4, &cube), 4).unwrap();
        assert_eq!((r.value, r.bound), (16.0, 16.0));
        assert_eq!(
            binomial_prefix_sum(12, 3),
            BigUint::from(1u32 + 12 + 66 + 220)
        );
    }
}
