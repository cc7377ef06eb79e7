use super::{good_inputs, shattered_set, vc_dimension, ShatterCertificate};
use crate::bitstring::{distance_unchecked, BitString, Gap, GhdParams};
use crate::distributions::{
    inverse_t, parallel_trials, sample_mu, sample_uniform, tail_tn, Distribution, SeededRng,
};
use crate::error::{invalid, GhdError, Result};
use crate::numeric::binary_entropy;
use crate::protocols::{
    amplify_majority, error_mc_randomized, DeterministicProtocol, MessageFn, OutputFn,
    RandomizedProtocol, Speaker,
};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

/// Sample sizes for the measurements inside [`eliminate_round_with`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EliminationConfig {
    pub error_trials: u64,
    pub sign_samples: u64,
}

impl Default for EliminationConfig {
    fn default() -> Self {
        Self {
            error_trials: 20_000,
            sign_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EliminationDiagnostics {
    pub good_count: usize,
    pub class_size: usize,
    pub first_message: BitString,
    /// Exact VC dimension of the message class.
    pub vcd_found: usize,
    pub target_vcd: usize,
    pub hypothesis_flags: Vec<String>,
    /// Monte Carlo μ'-error of the output protocol.
    pub measured_error: f64,
    pub measured_ci95: f64,
    pub measured_samples: u64,
    /// 16 eps T_n(c)/T_n'(c') + Pr[Bin(t, 1/4) > t/2].
    pub bound_rhs: f64,
    pub eps: f64,
    /// Exact μ-error of the input protocol.
    pub protocol_error: f64,
    pub t: usize,
    pub b: f64,
    pub n_prime: usize,
    pub c_prime: String,
    pub rounds_out: usize,
    pub message_bits_out: Vec<usize>,
    pub certificate: ShatterCertificate,
    /// Every x' maps to a member of the class that restricts to x' on I.
    pub embedding_ok: bool,
    pub sign_samples: u64,
    /// Samples with x'' ⊥_b y''.
    pub sign_checked: u64,
    /// Of those, samples where GHD_{c,n}(x,y) ≠ GHD_{c',n'}(x',y').
    pub sign_violations: u64,
    /// Fraction of samples with x'' not ⊥_b y''.
    pub nonorthogonal_rate: f64,
}

impl EliminationDiagnostics {
    /// Measured error at most the bound plus three standard deviations of
    /// a proportion at the bound.
    pub fn error_within_bound(&self) -> bool {
        let b = self.bound_rhs.clamp(0.0, 1.0);
        let sigma = (b * (1.0 - b) / self.measured_samples.max(1) as f64).sqrt();
        self.measured_error <= self.bound_rhs + 3.0 * sigma
    }

    /// Every hypothesis met, the embedding replays, no sign violation, and
    /// the error bound holds.
    pub fn passes(&self) -> bool {
        self.hypothesis_flags.is_empty()
            && self.embedding_ok
            && self.sign_violations == 0
            && self.error_within_bound()
    }
}

fn majority_tail_quarter(t: usize) -> f64 {
    let t = t as u64;
    let mut num = BigUint::from(0u32);
    let mut binom = BigUint::from(1u32);
    for j in 0..=t {
        if 2 * j > t {
            num += &binom * BigUint::from(3u32).pow((t - j) as u32);
        }
        binom = binom * (t - j) / (j + 1);
    }
    let den = BigUint::from(4u32).pow(t as u32);
    num.to_f64().unwrap_or(f64::INFINITY) / den.to_f64().unwrap_or(f64::INFINITY)
}

/// [`eliminate_round_with`] with default sample sizes.
pub fn eliminate_round(
    proto: &DeterministicProtocol,
    p: &GhdParams,
    eps: f64,
    t: usize,
    rng: &mut SeededRng,
) -> Result<(RandomizedProtocol, EliminationDiagnostics)> {
    eliminate_round_with(proto, p, eps, t, &EliminationConfig::default(), rng)
}

/// Runs the round-elimination construction on an Alice-first protocol for
/// GHD_{c,n} with 3 | n, producing a public-coin protocol for GHD_{2c,n/3}
/// with one round fewer, Bob first, and each message t times longer.
pub fn eliminate_round_with(
    proto: &DeterministicProtocol,
    p: &GhdParams,
    eps: f64,
    t: usize,
    cfg: &EliminationConfig,
    rng: &mut SeededRng,
) -> Result<(RandomizedProtocol, EliminationDiagnostics)> {
    let n = p.n;
    if n % 3 != 0 {
        return invalid(format!("n = {n} is not divisible by 3"));
    }
    if proto.rounds() == 0 {
        return invalid("the protocol has no round to eliminate");
    }
    if proto.speaker_first() != Speaker::Alice {
        return invalid("Alice must speak first; swap the roles for Bob-first protocols");
    }
    if t == 0 || t % 2 == 0 {
        return invalid("t must be odd");
    }
    let n_prime = n / 3;
    let rest = n - n_prime;
    let mut flags = Vec::new();
    if proto.message_bits()[0] as f64 > n as f64 / 20.0 {
        flags.push("first_message_exceeds_n_over_20".to_string());
    }

    let good = good_inputs(proto, p, eps)?;
    if good.overall_error > eps {
        flags.push("protocol_error_exceeds_eps".to_string());
    }
    if (good.good.len() as u64) < 1u64 << (n - 1) {
        flags.push("good_count_below_half".to_string());
    }
    let mut classes: BTreeMap<BitString, Vec<BitString>> = BTreeMap::new();
    for x in &good.good {
        classes
            .entry(proto.message(0, x, &[])?)
            .or_default()
            .push(x.clone());
    }
    let (first_message, class) = classes
        .into_iter()
        .fold(
            None::<(BitString, Vec<BitString>)>,
            |best, (m, xs)| match best {
                Some((bm, bx)) if bx.len() >= xs.len() => Some((bm, bx)),
                _ => Some((m, xs)),
            },
        )
        .ok_or_else(|| GhdError::ConstructionFailed("no good inputs".into()))?;
    let h = binary_entropy(1.0 / 3.0).expect("1/3 is in range");
    if (class.len() as f64).log2() < n as f64 * h {
        flags.push("class_below_2^(nH(1/3))".to_string());
    }
    let (vcd_found, _) = vc_dimension(&class, n)?;
    let cert = shattered_set(&class, n, n_prime)?.ok_or_else(|| {
        GhdError::ConstructionFailed(format!(
            "no shattered set of size {n_prime}; the class has VC dimension {vcd_found}"
        ))
    })?;
    let index_set = cert.index_set.clone();
    let outside: Vec<usize> = (0..n).filter(|i| !index_set.contains(i)).collect();
    let members: HashSet<&BitString> = class.iter().collect();
    let embedding_ok = cert.replay()
        && (0..1u64 << n_prime).all(|v| {
            let xp = BitString::from_u64(v, n_prime);
            cert.member_for(&xp)
                .is_some_and(|x| members.contains(x) && x.select(&index_set) == xp)
        });
    let embed: Arc<Vec<BitString>> =
        Arc::new(cert.pattern_map.iter().map(|e| e.member.clone()).collect());

    let restricted = Arc::new(proto.restrict_first(&first_message)?);
    let gap_prime = Gap::from_c_squared(4 * p.gap.c_squared_num, p.gap.c_squared_den)?;
    let p_prime = GhdParams::new(n_prime, gap_prime)?;
    let q1 = {
        let restricted = restricted.clone();
        let embed = embed.clone();
        let index_set = Arc::new(index_set.clone());
        RandomizedProtocol::new(
            n_prime,
            restricted.message_bits().to_vec(),
            Speaker::Bob,
            rest as u32,
            Arc::new(move |coins| {
                let y2 = Arc::new(BitString::from_u64(coins, rest));
                let lift = {
                    let (embed, index_set) = (embed.clone(), index_set.clone());
                    Arc::new(
                        move |speaker: Speaker, input: &BitString| -> Result<BitString> {
                            match speaker {
                                Speaker::Alice => Ok(embed[input.to_u64() as usize].clone()),
                                Speaker::Bob => BitString::interleave(&index_set, input, &y2),
                            }
                        },
                    )
                };
                let messages: Vec<MessageFn> = (0..restricted.rounds())
                    .map(|round| {
                        let (restricted, lift) = (restricted.clone(), lift.clone());
                        let speaker = restricted.speaker(round);
                        Arc::new(move |input: &BitString, tr: &[BitString]| {
                            restricted.message(round, &lift(speaker, input)?, tr)
                        }) as MessageFn
                    })
                    .collect();
                let announcer = restricted.announcer();
                let output: OutputFn = {
                    let restricted = restricted.clone();
                    Arc::new(move |input, tr| restricted.output(&lift(announcer, input)?, tr))
                };
                Ok(DeterministicProtocol::from_callbacks(
                    n_prime,
                    restricted.message_bits().to_vec(),
                    Speaker::Bob,
                    messages,
                    output,
                )?
                .with_announcer(announcer))
            }),
        )?
    };
    let q = amplify_majority(&q1, t)?;

    let b = inverse_t(1.0 / 8.0)?;
    let measured = error_mc_randomized(&q, &p_prime, Distribution::Mu, cfg.error_trials, rng)?;
    let tn = tail_tn(n as u64, p.gap)?.value;
    let tn_prime = tail_tn(n_prime as u64, gap_prime)?.value;
    let bound_rhs = 16.0 * eps * tn / tn_prime + majority_tail_quarter(t);

    // x'' ⊥_b y'' forces GHD(x, y) = GHD'(x', y')
    let half = rest as f64 / 2.0;
    let radius = b * (rest as f64).sqrt();
    let outcomes = parallel_trials(rng, cfg.sign_samples, |r, _| -> Result<(bool, bool)> {
        let (xp, yp) = sample_mu(&p_prime, r)?;
        let y2 = sample_uniform(rest, r);
        let x = embed[xp.to_u64() as usize].clone();
        let x2 = x.select(&outside);
        let y = BitString::interleave(&index_set, &yp, &y2)?;
        let orthogonal = (distance_unchecked(&x2, &y2) as f64 - half).abs() < radius;
        let agree = p.classify_distance(distance_unchecked(&x, &y))
            == p_prime.classify_distance(distance_unchecked(&xp, &yp));
        Ok((orthogonal, agree))
    });
    let (mut checked, mut violations, mut nonorth) = (0u64, 0u64, 0u64);
    for o in outcomes {
        let (orthogonal, agree) = o?;
        if orthogonal {
            checked += 1;
            violations += !agree as u64;
        } else {
            nonorth += 1;
        }
    }

    let diagnostics = EliminationDiagnostics {
        good_count: good.good.len(),
        class_size: class.len(),
        first_message,
        vcd_found,
        target_vcd: n_prime,
        hypothesis_flags: flags,
        measured_error: measured.error,
        measured_ci95: measured.ci95_halfwidth,
        measured_samples: measured.samples,
        bound_rhs,
        eps,
        protocol_error: good.overall_error,
        t,
        b,
        n_prime,
        c_prime: gap_prime.to_string(),
        rounds_out: q.rounds(),
        message_bits_out: q.message_bits().to_vec(),
        certificate: cert,
        embedding_ok,
        sign_samples: cfg.sign_samples,
        sign_checked: checked,
        sign_violations: violations,
        nonorthogonal_rate: nonorth as f64 / cfg.sign_samples.max(1) as f64,
    };
    Ok((q, diagnostics))
}

/// Two-round reference protocol: Alice sends x_0 padded to s bits, Bob
/// sends y, Alice announces GHD(x, y) (0 on ⋆). Exact under μ.
pub fn two_round_reference(p: &GhdParams, s: usize) -> Result<DeterministicProtocol> {
    if s == 0 {
        return invalid("the first message needs at least one bit");
    }
    let p = *p;
    DeterministicProtocol::from_callbacks(
        p.n,
        vec![s, p.n],
        Speaker::Alice,
        vec![
            Arc::new(move |x, _| Ok(BitString::from_bits((0..s).map(|i| i == 0 && x.get(0))))),
            Arc::new(|y, _| Ok(y.clone())),
        ],
        Arc::new(move |x, tr| {
            Ok(p.classify_distance(distance_unchecked(x, &tr[1]))
                .as_bit()
                .unwrap_or(false))
        }),
    )
}
