//! Two-party deterministic and public-coin protocols, their execution, and
//! distributional error measurement.

use crate::bitstring::{distance_unchecked, ghd_eval, BitString, GhdParams};
use crate::distributions::{
    mix64, parallel_trials, sample_mu, sample_uniform, Distribution, SeededRng,
};
use crate::error::{invalid, GhdError, Result};
use crate::limits::check_pairs;
use crate::stats::ci95_halfwidth;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    Alice,
    Bob,
}

impl Speaker {
    pub fn other(self) -> Self {
        match self {
            Speaker::Alice => Speaker::Bob,
            Speaker::Bob => Speaker::Alice,
        }
    }
}

pub type MessageFn = Arc<dyn Fn(&BitString, &[BitString]) -> Result<BitString> + Send + Sync>;
pub type OutputFn = Arc<dyn Fn(&BitString, &[BitString]) -> Result<bool> + Send + Sync>;

type Key = (BitString, BitString);

#[derive(Clone)]
enum Map<V> {
    Table(Arc<HashMap<Key, V>>),
    Callback(Arc<dyn Fn(&BitString, &[BitString]) -> Result<V> + Send + Sync>),
}

impl<V: Clone> Map<V> {
    fn get(&self, input: &BitString, transcript: &[BitString], what: &str) -> Result<V> {
        match self {
            Map::Table(t) => t
                .get(&(flatten(transcript), input.clone()))
                .cloned()
                .ok_or_else(|| {
                    GhdError::Protocol(format!(
                        "no {what} entry for transcript {:?} and input {input}",
                        flatten(transcript).to_string()
                    ))
                }),
            Map::Callback(f) => f(input, transcript),
        }
    }
}

/// Concatenation of a transcript's messages.
pub fn flatten(transcript: &[BitString]) -> BitString {
    BitString::from_bits(transcript.iter().flat_map(|m| m.iter().collect::<Vec<_>>()))
}

/// A k-round protocol: round i is sent by alternating speakers starting with
/// `speaker_first` and carries exactly `message_bits[i]` bits, computed from
/// the speaker's input and the transcript so far.
#[derive(Clone)]
pub struct DeterministicProtocol {
    n: usize,
    message_bits: Vec<usize>,
    speaker_first: Speaker,
    announcer: Speaker,
    messages: Vec<Map<BitString>>,
    output: Map<bool>,
}

impl fmt::Debug for DeterministicProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeterministicProtocol")
            .field("n", &self.n)
            .field("message_bits", &self.message_bits)
            .field("speaker_first", &self.speaker_first)
            .field("announcer", &self.announcer)
            .field("tabular", &self.is_tabular())
            .finish()
    }
}

/// The recipient of the last message announces; with no messages, Bob does.
pub fn default_announcer(rounds: usize, speaker_first: Speaker) -> Speaker {
    if rounds == 0 {
        Speaker::Bob
    } else if rounds % 2 == 1 {
        speaker_first.other()
    } else {
        speaker_first
    }
}

impl DeterministicProtocol {
    pub fn from_callbacks(
        n: usize,
        message_bits: Vec<usize>,
        speaker_first: Speaker,
        messages: Vec<MessageFn>,
        output: OutputFn,
    ) -> Result<Self> {
        if messages.len() != message_bits.len() {
            return invalid("one message map per round is required");
        }
        let announcer = default_announcer(message_bits.len(), speaker_first);
        Ok(Self {
            n,
            message_bits,
            speaker_first,
            announcer,
            messages: messages.into_iter().map(Map::Callback).collect(),
            output: Map::Callback(output),
        })
    }

    /// Overrides who announces the output.
    pub fn with_announcer(mut self, announcer: Speaker) -> Self {
        self.announcer = announcer;
        self
    }

    /// No communication; the output is `bit` on every input.
    pub fn constant(n: usize, bit: bool) -> Self {
        Self::from_callbacks(
            n,
            vec![],
            Speaker::Alice,
            vec![],
            Arc::new(move |_, _| Ok(bit)),
        )
        .expect("valid shape")
    }

    /// Alice sends x; Bob outputs GHD(x, y), or 0 where it is undefined.
    pub fn alice_sends_input(p: &GhdParams) -> Self {
        let p = *p;
        Self::from_callbacks(
            p.n,
            vec![p.n],
            Speaker::Alice,
            vec![Arc::new(|x, _| Ok(x.clone()))],
            Arc::new(move |y, t| Ok(ghd_eval(&p, &t[0], y)?.as_bit().unwrap_or(false))),
        )
        .expect("valid shape")
    }

    /// One round, Alice first: random `s`-bit message per x and random output
    /// per (message, y), both stored as tables.
    pub fn random_table<R: RngCore + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Self> {
        if n > 12 || s > 8 || s == 0 {
            return invalid("random tables need n <= 12 and 1 <= s <= 8");
        }
        let empty = BitString::zeros(0);
        let mut msgs = HashMap::new();
        for a in 0..1u64 << n {
            let m = BitString::from_u64(rng.next_u64(), s);
            msgs.insert((empty.clone(), BitString::from_u64(a, n)), m);
        }
        let mut outs = HashMap::new();
        for m in 0..1u64 << s {
            for b in 0..1u64 << n {
                let bit = rng.random::<bool>();
                outs.insert((BitString::from_u64(m, s), BitString::from_u64(b, n)), bit);
            }
        }
        Ok(Self {
            n,
            message_bits: vec![s],
            speaker_first: Speaker::Alice,
            announcer: Speaker::Bob,
            messages: vec![Map::Table(Arc::new(msgs))],
            output: Map::Table(Arc::new(outs)),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.message_bits.len()
    }

    pub fn message_bits(&self) -> &[usize] {
        &self.message_bits
    }

    pub fn speaker_first(&self) -> Speaker {
        self.speaker_first
    }

    pub fn announcer(&self) -> Speaker {
        self.announcer
    }

    pub fn speaker(&self, round: usize) -> Speaker {
        if round % 2 == 0 {
            self.speaker_first
        } else {
            self.speaker_first.other()
        }
    }

    /// Total bits exchanged.
    pub fn transcript_bits(&self) -> usize {
        self.message_bits.iter().sum()
    }

    pub fn is_tabular(&self) -> bool {
        matches!(self.output, Map::Table(_))
            && self.messages.iter().all(|m| matches!(m, Map::Table(_)))
    }

    /// Round `round`'s message from the speaker holding `input`.
    pub fn message(
        &self,
        round: usize,
        input: &BitString,
        transcript: &[BitString],
    ) -> Result<BitString> {
        let m = self.messages[round].get(input, transcript, "message")?;
        if m.len() != self.message_bits[round] {
            return Err(GhdError::Protocol(format!(
                "round {round} message has {} bits, declared {}",
                m.len(),
                self.message_bits[round]
            )));
        }
        Ok(m)
    }

    /// The announcer's output given its input and the full transcript.
    pub fn output(&self, input: &BitString, transcript: &[BitString]) -> Result<bool> {
        self.output.get(input, transcript, "output")
    }

    fn check_inputs(&self, x: &BitString, y: &BitString) -> Result<()> {
        if x.len() != self.n || y.len() != self.n {
            return invalid(format!(
                "protocol inputs must have length {}, got {} and {}",
                self.n,
                x.len(),
                y.len()
            ));
        }
        Ok(())
    }

    /// Replays every round and returns the transcript and the output.
    pub fn run_transcript(&self, x: &BitString, y: &BitString) -> Result<(Vec<BitString>, bool)> {
        self.check_inputs(x, y)?;
        let mut transcript = Vec::with_capacity(self.rounds());
        for round in 0..self.rounds() {
            let own = if self.speaker(round) == Speaker::Alice {
                x
            } else {
                y
            };
            let m = self.message(round, own, &transcript)?;
            transcript.push(m);
        }
        let own = if self.announcer == Speaker::Alice {
            x
        } else {
            y
        };
        let out = self.output(own, &transcript)?;
        Ok((transcript, out))
    }

    pub fn run(&self, x: &BitString, y: &BitString) -> Result<bool> {
        Ok(self.run_transcript(x, y)?.1)
    }

    /// The (k-1)-round protocol that continues after a fixed first message.
    pub fn restrict_first(&self, first: &BitString) -> Result<Self> {
        if self.rounds() == 0 {
            return invalid("a 0-round protocol has no first message");
        }
        if first.len() != self.message_bits[0] {
            return invalid("first message has the wrong length");
        }
        let base = Arc::new(self.clone());
        let prefixed = {
            let first = first.clone();
            move |t: &[BitString]| {
                let mut full = Vec::with_capacity(t.len() + 1);
                full.push(first.clone());
                full.extend_from_slice(t);
                full
            }
        };
        let mut messages: Vec<MessageFn> = Vec::new();
        for round in 1..self.rounds() {
            let base = base.clone();
            let prefixed = prefixed.clone();
            messages.push(Arc::new(move |input, t| {
                base.message(round, input, &prefixed(t))
            }));
        }
        let output: OutputFn = {
            let base = base.clone();
            Arc::new(move |input, t| base.output(input, &prefixed(t)))
        };
        Ok(Self::from_callbacks(
            self.n,
            self.message_bits[1..].to_vec(),
            self.speaker_first.other(),
            messages,
            output,
        )?
        .with_announcer(self.announcer))
    }

    /// Runs on coordinate-permuted inputs: P'(x, y) = P(x∘π, y∘π) where
    /// (x∘π)_i = x_{π(i)}.
    pub fn permute_inputs(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n
            || perm
                .iter()
                .any(|&i| i >= self.n || std::mem::replace(&mut seen[i], true))
        {
            return invalid("not a permutation of the coordinates");
        }
        let base = Arc::new(self.clone());
        let perm: Arc<Vec<usize>> = Arc::new(perm.to_vec());
        let messages = (0..self.rounds())
            .map(|round| {
                let (base, perm) = (base.clone(), perm.clone());
                Arc::new(move |input: &BitString, t: &[BitString]| {
                    base.message(round, &input.select(&perm), t)
                }) as MessageFn
            })
            .collect();
        let output: OutputFn = Arc::new(move |input, t| base.output(&input.select(&perm), t));
        Ok(Self::from_callbacks(
            self.n,
            self.message_bits.clone(),
            self.speaker_first,
            messages,
            output,
        )?
        .with_announcer(self.announcer))
    }

    /// Table form over every reachable transcript, found by running all input pairs.
    pub fn tabulate(&self) -> Result<Self> {
        check_pairs(self.n)?;
        let n = self.n;
        let mut msgs: Vec<HashMap<Key, BitString>> = vec![HashMap::new(); self.rounds()];
        let mut outs = HashMap::new();
        for a in 0..1u64 << n {
            let x = BitString::from_u64(a, n);
            for b in 0..1u64 << n {
                let y = BitString::from_u64(b, n);
                let (t, out) = self.run_transcript(&x, &y)?;
                for (round, table) in msgs.iter_mut().enumerate() {
                    let own = if self.speaker(round) == Speaker::Alice {
                        &x
                    } else {
                        &y
                    };
                    table.insert((flatten(&t[..round]), own.clone()), t[round].clone());
                }
                let own = if self.announcer == Speaker::Alice {
                    &x
                } else {
                    &y
                };
                outs.insert((flatten(&t), own.clone()), out);
            }
        }
        Ok(Self {
            n,
            message_bits: self.message_bits.clone(),
            speaker_first: self.speaker_first,
            announcer: self.announcer,
            messages: msgs.into_iter().map(|t| Map::Table(Arc::new(t))).collect(),
            output: Map::Table(Arc::new(outs)),
        })
    }

    /// File form; callback protocols must be tabulated first.
    pub fn to_file(&self) -> Result<ProtocolFile> {
        let table = |m: &Map<BitString>| match m {
            Map::Table(t) => Ok(t.clone()),
            Map::Callback(_) => {
                invalid("callback-backed protocols must be tabulated before export")
            }
        };
        let mut tables = Vec::new();
        for m in &self.messages {
            let mut entries: Vec<MessageEntry> = table(m)?
                .iter()
                .map(|((prefix, input), message)| MessageEntry {
                    transcript_prefix: prefix.clone(),
                    input: input.clone(),
                    message: message.clone(),
                })
                .collect();
            entries.sort_by(|a, b| {
                (&a.transcript_prefix, &a.input).cmp(&(&b.transcript_prefix, &b.input))
            });
            tables.extend(entries);
        }
        let Map::Table(outs) = &self.output else {
            return invalid("callback-backed protocols must be tabulated before export");
        };
        let mut output_table: Vec<OutputEntry> = outs
            .iter()
            .map(|((t, input), &out)| OutputEntry {
                transcript: t.clone(),
                input: input.clone(),
                output: out as u8,
            })
            .collect();
        output_table.sort_by(|a, b| (&a.transcript, &a.input).cmp(&(&b.transcript, &b.input)));
        Ok(ProtocolFile {
            n: self.n,
            rounds: self.rounds(),
            message_bits: self.message_bits.clone(),
            speaker_first: self.speaker_first,
            announcer: Some(self.announcer),
            tables,
            output_table,
        })
    }

    pub fn from_file(file: &ProtocolFile) -> Result<Self> {
        if file.rounds != file.message_bits.len() {
            return invalid("rounds differs from the number of message lengths");
        }
        if file.message_bits.iter().any(|&s| s == 0) {
            return invalid("every message must carry at least one bit");
        }
        let mut offsets = HashMap::new();
        let mut acc = 0;
        for (round, &s) in file.message_bits.iter().enumerate() {
            offsets.insert(acc, round);
            acc += s;
        }
        let mut msgs: Vec<HashMap<Key, BitString>> = vec![HashMap::new(); file.rounds];
        for e in &file.tables {
            let round = *offsets.get(&e.transcript_prefix.len()).ok_or_else(|| {
                GhdError::Protocol(format!(
                    "prefix length {} matches no round",
                    e.transcript_prefix.len()
                ))
            })?;
            if e.input.len() != file.n || e.message.len() != file.message_bits[round] {
                return Err(GhdError::Protocol(format!(
                    "entry for prefix {:?} has a bad input or message length",
                    e.transcript_prefix.to_string()
                )));
            }
            let key = (e.transcript_prefix.clone(), e.input.clone());
            if let Some(old) = msgs[round].insert(key, e.message.clone()) {
                if old != e.message {
                    return Err(GhdError::Protocol(
                        "conflicting duplicate message entry".into(),
                    ));
                }
            }
        }
        let mut outs = HashMap::new();
        for e in &file.output_table {
            if e.transcript.len() != acc || e.input.len() != file.n || e.output > 1 {
                return Err(GhdError::Protocol("malformed output entry".into()));
            }
            let bit = e.output == 1;
            if let Some(old) = outs.insert((e.transcript.clone(), e.input.clone()), bit) {
                if old != bit {
                    return Err(GhdError::Protocol(
                        "conflicting duplicate output entry".into(),
                    ));
                }
            }
        }
        Ok(Self {
            n: file.n,
            message_bits: file.message_bits.clone(),
            speaker_first: file.speaker_first,
            announcer: file
                .announcer
                .unwrap_or_else(|| default_announcer(file.rounds, file.speaker_first)),
            messages: msgs.into_iter().map(|t| Map::Table(Arc::new(t))).collect(),
            output: Map::Table(Arc::new(outs)),
        })
    }
}

/// JSON layout of a table protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolFile {
    pub n: usize,
    pub rounds: usize,
    pub message_bits: Vec<usize>,
    pub speaker_first: Speaker,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub announcer: Option<Speaker>,
    pub tables: Vec<MessageEntry>,
    pub output_table: Vec<OutputEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageEntry {
    pub transcript_prefix: BitString,
    pub input: BitString,
    pub message: BitString,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputEntry {
    pub transcript: BitString,
    pub input: BitString,
    pub output: u8,
}

type Family = Arc<dyn Fn(u64) -> Result<DeterministicProtocol> + Send + Sync>;

/// Public-coin protocol: a deterministic protocol for each coin string in
/// `0..2^public_coin_bits`, all with the same shape.
#[derive(Clone)]
pub struct RandomizedProtocol {
    n: usize,
    message_bits: Vec<usize>,
    speaker_first: Speaker,
    public_coin_bits: u32,
    family: Family,
}

impl fmt::Debug for RandomizedProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RandomizedProtocol")
            .field("n", &self.n)
            .field("message_bits", &self.message_bits)
            .field("speaker_first", &self.speaker_first)
            .field("public_coin_bits", &self.public_coin_bits)
            .finish()
    }
}

impl RandomizedProtocol {
    pub fn new(
        n: usize,
        message_bits: Vec<usize>,
        speaker_first: Speaker,
        public_coin_bits: u32,
        family: Family,
    ) -> Result<Self> {
        if public_coin_bits > 64 {
            return invalid("at most 64 public coin bits");
        }
        Ok(Self {
            n,
            message_bits,
            speaker_first,
            public_coin_bits,
            family,
        })
    }

    pub fn from_deterministic(p: DeterministicProtocol) -> Self {
        let (n, bits, first) = (p.n, p.message_bits.clone(), p.speaker_first);
        Self {
            n,
            message_bits: bits,
            speaker_first: first,
            public_coin_bits: 0,
            family: Arc::new(move |_| Ok(p.clone())),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rounds(&self) -> usize {
        self.message_bits.len()
    }

    pub fn message_bits(&self) -> &[usize] {
        &self.message_bits
    }

    pub fn speaker_first(&self) -> Speaker {
        self.speaker_first
    }

    pub fn public_coin_bits(&self) -> u32 {
        self.public_coin_bits
    }

    fn coin_mask(&self) -> u64 {
        if self.public_coin_bits >= 64 {
            u64::MAX
        } else {
            (1u64 << self.public_coin_bits) - 1
        }
    }

    /// The deterministic protocol for a coin string (taken modulo 2^bits).
    pub fn instantiate(&self, coins: u64) -> Result<DeterministicProtocol> {
        let p = (self.family)(coins & self.coin_mask())?;
        if p.n != self.n
            || p.message_bits != self.message_bits
            || p.speaker_first != self.speaker_first
        {
            return Err(GhdError::Protocol(
                "family member differs in shape from the declared protocol".into(),
            ));
        }
        Ok(p)
    }

    pub fn run(&self, coins: u64, x: &BitString, y: &BitString) -> Result<bool> {
        self.instantiate(coins)?.run(x, y)
    }

    pub fn draw_coins<R: RngCore + ?Sized>(&self, rng: &mut R) -> u64 {
        rng.next_u64() & self.coin_mask()
    }
}

/// Coin string of copy `j` inside an amplified protocol.
fn copy_coins(coins: u64, j: usize, bits: u32, packed: bool) -> u64 {
    if packed {
        if bits == 0 {
            0
        } else {
            (coins >> (j as u32 * bits)) & ((1u64 << bits) - 1)
        }
    } else {
        mix64(coins ^ mix64(j as u64 + 1))
    }
}

/// Copy `j`'s share of a transcript whose round-r messages hold t blocks of s_r bits.
fn project(transcript: &[BitString], bits: &[usize], j: usize) -> Vec<BitString> {
    transcript
        .iter()
        .zip(bits)
        .map(|(m, &s)| BitString::from_bits((j * s..(j + 1) * s).map(|i| m.get(i))))
        .collect()
}

/// Runs t copies with independent coins in parallel inside the same rounds;
/// each message is the concatenation of the copies' messages and the output
/// is their majority.
pub fn amplify_majority(q: &RandomizedProtocol, t: usize) -> Result<RandomizedProtocol> {
    if t == 0 || t % 2 == 0 {
        return invalid(format!("t must be odd, got {t}"));
    }
    let bits = q.public_coin_bits;
    let packed = (bits as u64) * (t as u64) <= 64;
    let total_bits = if packed { bits * t as u32 } else { 64 };
    let inner = q.clone();
    let base_bits = q.message_bits.clone();
    let family: Family = Arc::new(move |coins| {
        let copies: Arc<Vec<DeterministicProtocol>> = Arc::new(
            (0..t)
                .map(|j| inner.instantiate(copy_coins(coins, j, bits, packed)))
                .collect::<Result<_>>()?,
        );
        let base_bits = Arc::new(base_bits.clone());
        let messages = (0..base_bits.len())
            .map(|round| {
                let (copies, base_bits) = (copies.clone(), base_bits.clone());
                Arc::new(move |input: &BitString, tr: &[BitString]| {
                    let mut out = Vec::new();
                    for (j, c) in copies.iter().enumerate() {
                        let m = c.message(round, input, &project(tr, &base_bits, j))?;
                        out.extend(m.iter());
                    }
                    Ok(BitString::from_bits(out))
                }) as MessageFn
            })
            .collect();
        let output: OutputFn = {
            let (copies, base_bits) = (copies.clone(), base_bits.clone());
            Arc::new(move |input, tr| {
                let mut ones = 0;
                for (j, c) in copies.iter().enumerate() {
                    ones += c.output(input, &project(tr, &base_bits, j))? as usize;
                }
                Ok(2 * ones > copies.len())
            })
        };
        let first = &copies[0];
        Ok(DeterministicProtocol::from_callbacks(
            first.n,
            base_bits.iter().map(|s| s * t).collect(),
            first.speaker_first,
            messages,
            output,
        )?
        .with_announcer(first.announcer))
    });
    RandomizedProtocol::new(
        q.n,
        q.message_bits.iter().map(|s| s * t).collect(),
        q.speaker_first,
        total_bits,
        family,
    )
}

/// Distributional error of a protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub error: f64,
    pub exact: bool,
    /// Monte Carlo sample count; 0 for exact reports.
    pub samples: u64,
    pub ci95_halfwidth: f64,
    pub distribution: Distribution,
    pub seed: Option<u64>,
    /// Erring pairs (exact) or erring samples (Monte Carlo).
    pub errors: u64,
    /// Denominator of `error`.
    pub total: u64,
}

impl ErrorReport {
    fn exact(errors: u64, total: u64, distribution: Distribution) -> Self {
        Self {
            error: if total == 0 {
                0.0
            } else {
                errors as f64 / total as f64
            },
            exact: true,
            samples: 0,
            ci95_halfwidth: 0.0,
            distribution,
            seed: None,
            errors,
            total,
        }
    }

    fn sampled(errors: u64, trials: u64, distribution: Distribution, seed: u64) -> Self {
        Self {
            error: errors as f64 / trials as f64,
            exact: false,
            samples: trials,
            ci95_halfwidth: ci95_halfwidth(errors, trials),
            distribution,
            seed: Some(seed),
            errors,
            total: trials,
        }
    }
}

fn check_shape(n: usize, p: &GhdParams) -> Result<()> {
    if n != p.n {
        return invalid(format!("protocol has n = {n}, problem has n = {}", p.n));
    }
    Ok(())
}

/// Exact error over all input pairs. STAR pairs never count as errors; under
/// MU they are also excluded from the denominator.
pub fn error_exact(
    proto: &DeterministicProtocol,
    p: &GhdParams,
    dist: Distribution,
) -> Result<ErrorReport> {
    check_shape(proto.n, p)?;
    check_pairs(p.n)?;
    let n = p.n;
    let (errors, total) = (0..1u64 << n)
        .into_par_iter()
        .map(|a| {
            let x = BitString::from_u64(a, n);
            let (mut errors, mut total) = (0u64, 0u64);
            for b in 0..1u64 << n {
                let v = p.classify_distance((a ^ b).count_ones() as usize);
                let Some(bit) = v.as_bit() else {
                    if dist == Distribution::Uniform {
                        total += 1;
                    }
                    continue;
                };
                total += 1;
                if proto.run(&x, &BitString::from_u64(b, n))? != bit {
                    errors += 1;
                }
            }
            Ok((errors, total))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(ErrorReport::exact(errors, total, dist))
}

fn sample_pair(
    p: &GhdParams,
    dist: Distribution,
    rng: &mut SeededRng,
) -> Result<(BitString, BitString)> {
    match dist {
        Distribution::Uniform => Ok((sample_uniform(p.n, rng), sample_uniform(p.n, rng))),
        Distribution::Mu => sample_mu(p, rng),
    }
}

fn errs(p: &GhdParams, x: &BitString, y: &BitString, out: bool) -> bool {
    p.classify_distance(distance_unchecked(x, y))
        .as_bit()
        .is_some_and(|bit| bit != out)
}

/// Monte Carlo error with an exact binomial 95% interval.
pub fn error_mc(
    proto: &DeterministicProtocol,
    p: &GhdParams,
    dist: Distribution,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<ErrorReport> {
    check_shape(proto.n, p)?;
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let seed = rng.seed();
    let outcomes = parallel_trials(rng, trials, |r, _| {
        let (x, y) = sample_pair(p, dist, r)?;
        Ok(errs(p, &x, &y, proto.run(&x, &y)?))
    });
    let errors = count_errors(outcomes)?;
    Ok(ErrorReport::sampled(errors, trials, dist, seed))
}

fn count_errors(outcomes: Vec<Result<bool>>) -> Result<u64> {
    let mut errors = 0;
    for o in outcomes {
        errors += o? as u64;
    }
    Ok(errors)
}

/// Monte Carlo error of a public-coin protocol: each sample draws fresh coins
/// and a fresh input pair.
pub fn error_mc_randomized(
    q: &RandomizedProtocol,
    p: &GhdParams,
    dist: Distribution,
    trials: u64,
    rng: &mut SeededRng,
) -> Result<ErrorReport> {
    check_shape(q.n, p)?;
    if trials == 0 {
        return invalid("trials must be positive");
    }
    let seed = rng.seed();
    let outcomes = parallel_trials(rng, trials, |r, _| {
        let coins = q.draw_coins(r);
        let (x, y) = sample_pair(p, dist, r)?;
        Ok(errs(p, &x, &y, q.run(coins, &x, &y)?))
    });
    let errors = count_errors(outcomes)?;
    Ok(ErrorReport::sampled(errors, trials, dist, seed))
}

/// Samples per candidate when the pair space is too large to enumerate.
pub const FIX_MC_TRIALS: u64 = 20_000;

/// Outcome of [`fix_randomness`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixReport {
    pub coins: u64,
    pub candidates: u64,
    pub exhaustive: bool,
    pub best: ErrorReport,
    pub mean_error: f64,
}

/// Picks the coin string with the smallest measured error: all of them when
/// 2^bits <= budget, otherwise `budget` random ones. Errors are exact when
/// the pair space is within the cap, otherwise sampled on a common sample.
pub fn fix_randomness(
    q: &RandomizedProtocol,
    p: &GhdParams,
    dist: Distribution,
    budget: u64,
    rng: &mut SeededRng,
) -> Result<(DeterministicProtocol, FixReport)> {
    check_shape(q.n, p)?;
    if budget == 0 {
        return invalid("budget must be at least 1");
    }
    let exhaustive = q.public_coin_bits < 64 && (1u64 << q.public_coin_bits) <= budget;
    let candidates: Vec<u64> = if exhaustive {
        (0..1u64 << q.public_coin_bits).collect()
    } else {
        (0..budget).map(|_| q.draw_coins(rng)).collect()
    };
    let exact = check_pairs(p.n).is_ok();
    let mc_seed = rng.derive_seed();
    let mut best: Option<(u64, ErrorReport)> = None;
    let mut sum = 0.0;
    for &coins in &candidates {
        let proto = q.instantiate(coins)?;
        let report = if exact {
            error_exact(&proto, p, dist)?
        } else {
            error_mc(
                &proto,
                p,
                dist,
                FIX_MC_TRIALS,
                &mut SeededRng::from_seed(mc_seed),
            )?
        };
        sum += report.error;
        if best.as_ref().is_none_or(|(_, b)| report.error < b.error) {
            best = Some((coins, report));
        }
    }
    let (coins, report) = best.expect("at least one candidate");
    Ok((
        q.instantiate(coins)?,
        FixReport {
            coins,
            candidates: candidates.len() as u64,
            exhaustive,
            best: report,
            mean_error: sum / candidates.len() as f64,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitstring::{Gap, Ternary};
    use crate::distributions::tail_tn_exact;
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use rand::seq::SliceRandom;

    fn params(n: usize) -> GhdParams {
        GhdParams::new(n, Gap::integer(1)).unwrap()
    }

    #[test]
    fn constant_protocol() {
        let p = DeterministicProtocol::constant(5, false);
        assert_eq!(p.rounds(), 0);
        assert_eq!(p.announcer(), Speaker::Bob);
        for a in 0..32 {
            let x = BitString::from_u64(a, 5);
            assert!(!p.run(&x, &x.complement()).unwrap());
        }
    }

    #[test]
    fn alice_sends_input_matches_ghd_n8() {
        let g = params(8);
        let proto = DeterministicProtocol::alice_sends_input(&g);
        for a in 0..256 {
            let x = BitString::from_u64(a, 8);
            for b in 0..256 {
                let y = BitString::from_u64(b, 8);
                let (t, out) = proto.run_transcript(&x, &y).unwrap();
                assert_eq!(flatten(&t).len(), proto.transcript_bits());
                if let Some(bit) = ghd_eval(&g, &x, &y).unwrap().as_bit() {
                    assert_eq!(out, bit);
                }
            }
        }
        let r = error_exact(&proto, &g, Distribution::Mu).unwrap();
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn constant_errors_exact() {
        let g = params(8);
        for bit in [false, true] {
            let proto = DeterministicProtocol::constant(8, bit);
            let mu = error_exact(&proto, &g, Distribution::Mu).unwrap();
            assert_eq!(mu.errors * 2, mu.total);
            let uni = error_exact(&proto, &g, Distribution::Uniform).unwrap();
            let expected = tail_tn_exact(8, Gap::integer(1)).unwrap() / BigInt::from(2);
            assert_eq!(
                BigRational::new(uni.errors.into(), uni.total.into()),
                expected
            );
        }
    }

    #[test]
    fn wrong_only_on_star_pairs_has_zero_error() {
        let g = params(8);
        let proto = DeterministicProtocol::from_callbacks(
            8,
            vec![8],
            Speaker::Alice,
            vec![Arc::new(|x, _| Ok(x.clone()))],
            Arc::new(move |y, t| {
                Ok(match ghd_eval(&g, &t[0], y)? {
                    Ternary::Star => true,
                    v => v.as_bit().unwrap(),
                })
            }),
        )
        .unwrap();
        assert_eq!(
            error_exact(&proto, &g, Distribution::Uniform)
                .unwrap()
                .errors,
            0
        );
    }

    #[test]
    fn table_round_trip_and_missing_entries() {
        let g = params(4);
        let proto = DeterministicProtocol::alice_sends_input(&g)
            .tabulate()
            .unwrap();
        assert!(proto.is_tabular());
        let file = proto.to_file().unwrap();
        let json = serde_json::to_string(&file).unwrap();
        let back = DeterministicProtocol::from_file(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back.to_file().unwrap(), file);
        assert_eq!(error_exact(&back, &g, Distribution::Mu).unwrap().errors, 0);
        let mut broken = file.clone();
        broken
            .output_table
            .retain(|e| e.input.to_string() != "0000");
        let broken = DeterministicProtocol::from_file(&broken).unwrap();
        let err = broken.run(&"1111".parse().unwrap(), &"0000".parse().unwrap());
        assert!(matches!(err, Err(GhdError::Protocol(_))));
        let unknown = json.replacen("\"rounds\"", "\"extra\":1,\"rounds\"", 1);
        assert!(serde_json::from_str::<ProtocolFile>(&unknown).is_err());
    }

    #[test]
    fn message_length_enforced() {
        let bad = DeterministicProtocol::from_callbacks(
            3,
            vec![2],
            Speaker::Alice,
            vec![Arc::new(|x, _| Ok(x.clone()))],
            Arc::new(|_, _| Ok(false)),
        )
        .unwrap();
        let x = BitString::zeros(3);
        assert!(matches!(bad.run(&x, &x), Err(GhdError::Protocol(_))));
    }

    #[test]
    fn mc_agrees_with_exact_on_random_tables() {
        let g = params(10);
        let mut rng = SeededRng::from_seed(21);
        for _ in 0..5 {
            let proto = DeterministicProtocol::random_table(10, 2, &mut rng).unwrap();
            let exact = error_exact(&proto, &g, Distribution::Mu).unwrap();
            let mc = error_mc(&proto, &g, Distribution::Mu, 20_000, &mut rng).unwrap();
            assert!(
                (mc.error - exact.error).abs() <= mc.ci95_halfwidth,
                "{mc:?} vs {exact:?}"
            );
        }
        let proto = DeterministicProtocol::constant(10, true);
        let a = error_mc(
            &proto,
            &g,
            Distribution::Uniform,
            1000,
            &mut SeededRng::from_seed(4),
        )
        .unwrap();
        let b = error_mc(
            &proto,
            &g,
            Distribution::Uniform,
            1000,
            &mut SeededRng::from_seed(4),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(error_mc(&proto, &g, Distribution::Uniform, 0, &mut rng).is_err());
    }

    #[test]
    fn error_invariant_under_coordinate_permutation() {
        let g = params(8);
        let mut rng = SeededRng::from_seed(8);
        let proto = DeterministicProtocol::random_table(8, 3, &mut rng).unwrap();
        let base = error_exact(&proto, &g, Distribution::Uniform).unwrap();
        for _ in 0..3 {
            let mut perm: Vec<usize> = (0..8).collect();
            perm.shuffle(&mut rng);
            let permuted = proto.permute_inputs(&perm).unwrap();
            assert_eq!(
                error_exact(&permuted, &g, Distribution::Uniform).unwrap(),
                base
            );
        }
    }

    #[test]
    fn restrict_first_message() {
        let g = params(6);
        let proto = DeterministicProtocol::alice_sends_input(&g);
        let x = BitString::from_u64(0b101101, 6);
        let rest = proto.restrict_first(&x).unwrap();
        assert_eq!(rest.rounds(), 0);
        assert_eq!(rest.announcer(), Speaker::Bob);
        for b in 0..64 {
            let y = BitString::from_u64(b, 6);
            assert_eq!(
                rest.run(&BitString::zeros(6), &y).unwrap(),
                proto.run(&x, &y).unwrap()
            );
        }
    }

    /// Bob's output is a coin with bias q toward the wrong answer, driven by
    /// the public coins and independent of the inputs.
    fn noisy_oracle(g: GhdParams, bits: u32, wrong_below: u64) -> RandomizedProtocol {
        let family: Family = Arc::new(move |coins| {
            let wrong = coins < wrong_below;
            DeterministicProtocol::from_callbacks(
                g.n,
                vec![g.n],
                Speaker::Alice,
                vec![Arc::new(|x, _| Ok(x.clone()))],
                Arc::new(move |y, t| {
                    let v = ghd_eval(&g, &t[0], y)?.as_bit().unwrap_or(false);
                    Ok(v ^ wrong)
                }),
            )
        });
        RandomizedProtocol::new(g.n, vec![g.n], Speaker::Alice, bits, family).unwrap()
    }

    #[test]
    fn amplification_structure_and_identity() {
        let g = params(6);
        let q = noisy_oracle(g, 2, 1);
        let one = amplify_majority(&q, 1).unwrap();
        assert_eq!(one.message_bits(), q.message_bits());
        for coins in 0..4 {
            for (a, b) in [(0u64, 63u64), (5, 58), (7, 7)] {
                let (x, y) = (BitString::from_u64(a, 6), BitString::from_u64(b, 6));
                assert_eq!(
                    one.run(coins, &x, &y).unwrap(),
                    q.run(coins, &x, &y).unwrap()
                );
            }
        }
        let five = amplify_majority(&q, 5).unwrap();
        assert_eq!(five.message_bits(), &[30]);
        assert_eq!(five.rounds(), q.rounds());
        assert_eq!(five.public_coin_bits(), 10);
        assert!(amplify_majority(&q, 4).is_err());
    }

    #[test]
    fn amplification_matches_binomial_majority_tail() {
        // per-input error q = 1/4, t = 15
        let g = params(8);
        let q = noisy_oracle(g, 2, 1);
        let t = 15;
        let amp = amplify_majority(&q, t).unwrap();
        let mut rng = SeededRng::from_seed(77);
        let r = error_mc_randomized(&amp, &g, Distribution::Mu, 40_000, &mut rng).unwrap();
        let tail: f64 = crate::numeric::binomial_pmf_table(t as u64, 0.25f64)[t / 2 + 1..]
            .iter()
            .sum();
        assert!(
            (r.error - tail).abs() <= 3.0 * crate::stats::proportion_sigma(tail, 40_000) + 1e-4
        );
        assert!(tail <= (-2.0 * t as f64 * 0.25f64.powi(2)).exp());
    }

    #[test]
    fn fix_randomness_picks_at_most_mean() {
        let g = params(6);
        let q = noisy_oracle(g, 8, 100);
        let mut rng = SeededRng::from_seed(3);
        let (proto, rep) = fix_randomness(&q, &g, Distribution::Mu, 1 << 8, &mut rng).unwrap();
        assert!(rep.exhaustive);
        assert_eq!(rep.candidates, 256);
        assert!(rep.best.error <= rep.mean_error);
        assert_eq!(rep.best.error, 0.0);
        assert_eq!(error_exact(&proto, &g, Distribution::Mu).unwrap().errors, 0);
        let (_, again) = fix_randomness(
            &q,
            &g,
            Distribution::Mu,
            1 << 8,
            &mut SeededRng::from_seed(3),
        )
        .unwrap();
        assert_eq!(rep, again);
        let single =
            RandomizedProtocol::from_deterministic(DeterministicProtocol::constant(6, true));
        let (p1, r1) = fix_randomness(&single, &g, Distribution::Mu, 5, &mut rng).unwrap();
        assert_eq!(r1.candidates, 1);
        assert_eq!(p1.rounds(), 0);
        let sampled = fix_randomness(&q, &g, Distribution::Mu, 10, &mut rng)
            .unwrap()
            .1;
        assert!(!sampled.exhaustive && sampled.candidates == 10);
    }
}
