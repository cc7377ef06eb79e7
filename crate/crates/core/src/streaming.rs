//! Distinct Elements (F0) as a GHD reduction: input-to-stream encoding, exact
//! and KMV-sketch F0, one- and multi-pass protocol simulation, and the
//! sketch-size vs success experiment.

use crate::bitstring::{distance_unchecked, BitString, GhdParams};
use crate::distributions::{mix64, parallel_trials, sample_mu, SeededRng};
use crate::error::{invalid, Result};
use crate::stats::{ci95_halfwidth, spearman};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};

/// A stream of elements from `0..universe_size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stream {
    pub universe_size: u64,
    pub elements: Vec<u64>,
}

impl Stream {
    pub fn new(universe_size: u64, elements: Vec<u64>) -> Result<Self> {
        if let Some(e) = elements.iter().find(|&&e| e >= universe_size) {
            return invalid(format!(
                "element {e} is outside the universe 0..{universe_size}"
            ));
        }
        Ok(Self {
            universe_size,
            elements,
        })
    }

    /// This stream followed by `other`, over the larger universe.
    pub fn concat(&self, other: &Stream) -> Stream {
        let mut elements = self.elements.clone();
        elements.extend_from_slice(&other.elements);
        Stream {
            universe_size: self.universe_size.max(other.universe_size),
            elements,
        }
    }
}

/// Alice's stream ⟨2i + x_i⟩ and Bob's ⟨2i + y_i⟩ over universe 2n, so the
/// concatenation has F0 = n + Δ(x, y).
pub fn ghd_to_streams(x: &BitString, y: &BitString) -> Result<(Stream, Stream)> {
    if x.len() != y.len() {
        return invalid(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    let encode = |s: &BitString| Stream {
        universe_size: 2 * s.len() as u64,
        elements: s
            .iter()
            .enumerate()
            .map(|(i, b)| 2 * i as u64 + b as u64)
            .collect(),
    };
    Ok((encode(x), encode(y)))
}

pub fn exact_f0(s: &Stream) -> u64 {
    s.elements.iter().collect::<HashSet<_>>().len() as u64
}

/// Bits in a serialized sketch besides the kept values (k and the seed).
pub const SKETCH_OVERHEAD_BITS: usize = 128;

/// k-minimum-values sketch. An element e hashes to
/// h(e) = mix64(mix64(hash_seed) ^ e), read as the fixed-point number h / 2^64.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmvSketch {
    pub k: usize,
    pub hash_seed: u64,
    #[serde(with = "kept_list")]
    pub kept: BTreeSet<u64>,
}

mod kept_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeSet;

    pub fn serialize<S: Serializer>(v: &BTreeSet<u64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().copied().collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeSet<u64>, D::Error> {
        let v = Vec::<u64>::deserialize(d)?;
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(serde::de::Error::custom(
                "kept values must be strictly ascending",
            ));
        }
        Ok(v.into_iter().collect())
    }
}

impl KmvSketch {
    pub fn new(k: usize, hash_seed: u64) -> Result<Self> {
        if k == 0 {
            return invalid("sketch capacity must be positive");
        }
        Ok(Self {
            k,
            hash_seed,
            kept: BTreeSet::new(),
        })
    }

    #[inline]
    pub fn hash(&self, e: u64) -> u64 {
        mix64(mix64(self.hash_seed) ^ e)
    }

    pub fn update(&mut self, e: u64) {
        let h = self.hash(e);
        if self.kept.len() == self.k {
            let &max = self.kept.last().expect("k >= 1");
            if h >= max {
                return;
            }
            if self.kept.insert(h) {
                self.kept.remove(&max);
            }
        } else {
            self.kept.insert(h);
        }
    }

    pub fn update_stream(&mut self, s: &Stream) {
        for &e in &s.elements {
            self.update(e);
        }
    }

    /// Union of two sketches with the same capacity and seed, keeping the k smallest.
    pub fn merge(&self, other: &KmvSketch) -> Result<KmvSketch> {
        if self.k != other.k || self.hash_seed != other.hash_seed {
            return invalid("sketches differ in capacity or hash seed");
        }
        Ok(KmvSketch {
            k: self.k,
            hash_seed: self.hash_seed,
            kept: self.kept.union(&other.kept).copied().take(self.k).collect(),
        })
    }

    /// (k - 1) / kept[k-1] once full, the exact count before that.
    pub fn estimate(&self) -> f64 {
        if self.kept.len() < self.k {
            return self.kept.len() as f64;
        }
        let kth = *self.kept.last().expect("full") as f64 / 2f64.powi(64);
        (self.k - 1) as f64 / kth
    }

    /// Size of the sketch state as a message.
    pub fn message_bits(&self) -> usize {
        self.k * 64 + SKETCH_OVERHEAD_BITS
    }
}

pub fn kmv_update(sk: &KmvSketch, e: u64) -> KmvSketch {
    let mut out = sk.clone();
    out.update(e);
    out
}

pub fn kmv_merge(a: &KmvSketch, b: &KmvSketch) -> Result<KmvSketch> {
    a.merge(b)
}

pub fn kmv_estimate(sk: &KmvSketch) -> f64 {
    sk.estimate()
}

/// Result of a simulated streaming protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamOutcome {
    /// 1 iff F̂0 - n >= n/2.
    pub decision: bool,
    pub estimate: f64,
    pub messages: usize,
    pub message_bits: usize,
    pub hash_seed: u64,
}

fn decide(n: usize, estimate: f64) -> bool {
    estimate - n as f64 >= n as f64 / 2.0
}

/// One pass: Alice sketches her stream, sends the state, Bob finishes and decides.
pub fn simulate_onepass<R: RngCore + ?Sized>(
    p: &GhdParams,
    k: usize,
    x: &BitString,
    y: &BitString,
    rng: &mut R,
) -> Result<StreamOutcome> {
    simulate_multipass(p, k, 1, x, y, rng)
}

/// p passes over Alice's stream followed by Bob's; the state crosses at every
/// boundary, 2p - 1 messages in all.
pub fn simulate_multipass<R: RngCore + ?Sized>(
    p: &GhdParams,
    k: usize,
    passes: usize,
    x: &BitString,
    y: &BitString,
    rng: &mut R,
) -> Result<StreamOutcome> {
    if passes == 0 {
        return invalid("at least one pass is required");
    }
    if x.len() != p.n || y.len() != p.n {
        return invalid(format!("inputs must have length {}", p.n));
    }
    let (alice, bob) = ghd_to_streams(x, y)?;
    let mut sketch = KmvSketch::new(k, rng.next_u64())?;
    for _ in 0..passes {
        sketch.update_stream(&alice);
        sketch.update_stream(&bob);
    }
    let estimate = sketch.estimate();
    Ok(StreamOutcome {
        decision: decide(p.n, estimate),
        estimate,
        messages: 2 * passes - 1,
        message_bits: sketch.message_bits(),
        hash_seed: sketch.hash_seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceRow {
    pub k: usize,
    pub message_bits: usize,
    pub successes: u64,
    pub trials: u64,
    pub success_rate: f64,
    pub ci95_halfwidth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTable {
    pub n: usize,
    pub c: String,
    pub seed: u64,
    pub rows: Vec<SpaceRow>,
    /// Spearman correlation of k against success rate.
    pub spearman: Option<f64>,
}

impl SpaceTable {
    pub const CSV_HEADER: &'static str =
        "k,message_bits,successes,trials,success_rate,ci95_halfwidth";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k, r.message_bits, r.successes, r.trials, r.success_rate, r.ci95_halfwidth
            ));
        }
        out
    }
}

/// One-pass success rate on μ-sampled inputs for each sketch size. Trial i
/// uses the same input pair and hash seed for every k.
pub fn space_success_experiment(
    p: &GhdParams,
    k_grid: &[usize],
    trials: u64,
    rng: &mut SeededRng,
) -> Result<SpaceTable> {
    if k_grid.is_empty() || trials == 0 {
        return invalid("need a nonempty k grid and at least one trial");
    }
    if k_grid.contains(&0) {
        return invalid("sketch capacity must be positive");
    }
    let seed = rng.seed();
    let outcomes = parallel_trials(rng, trials, |r, _| -> Result<Vec<bool>> {
        let (x, y) = sample_mu(p, r)?;
        let truth = p
            .classify_distance(distance_unchecked(&x, &y))
            .as_bit()
            .expect("μ samples are defined");
        let hash_seed = r.next_u64();
        k_grid
            .iter()
            .map(|&k| {
                let out = simulate_onepass(p, k, &x, &y, &mut ConstRng(hash_seed))?;
                Ok(out.decision == truth)
            })
            .collect()
    });
    let mut successes = vec![0u64; k_grid.len()];
    for o in outcomes {
        for (s, ok) in successes.iter_mut().zip(o?) {
            *s += ok as u64;
        }
    }
    let rows: Vec<SpaceRow> = k_grid
        .iter()
        .zip(&successes)
        .map(|(&k, &s)| SpaceRow {
            k,
            message_bits: k * 64 + SKETCH_OVERHEAD_BITS,
            successes: s,
            trials,
            success_rate: s as f64 / trials as f64,
            ci95_halfwidth: ci95_halfwidth(s, trials),
        })
        .collect();
    let ks: Vec<f64> = rows.iter().map(|r| r.k as f64).collect();
    let rates: Vec<f64> = rows.iter().map(|r| r.success_rate).collect();
    Ok(SpaceTable {
        n: p.n,
        c: p.gap.to_string(),
        seed,
        spearman: spearman(&ks, &rates),
        rows,
    })
}

/// Hands out one fixed word; pins the hash seed across sketch sizes.
struct ConstRng(u64);

impl RngCore for ConstRng {
    fn next_u32(&mut self) -> u32 {
        self.0 as u32
    }
    fn next_u64(&mut self) -> u64 {
        self.0
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for (d, s) in dst.iter_mut().zip(self.0.to_le_bytes().iter().cycle()) {
            *d = *s;
        }
    }
}
