//! Subcommand bodies. Each fills in its defaults, calls into ghd-core and
//! packages the result; none computes anything of its own.

use crate::args::*;
use crate::config::Format;
use crate::error::{missing, CliError};
use crate::output::Outcome;
use ghd_core::distributions::{
    self as dist, appendix_suite, coin_distinguisher_experiment, tail_bracket_check, SeededRng,
};
use ghd_core::oneway::{
    brute_force_witness, build_covering, exact_oneway_complexity, find_witness, is_witness,
    protocol_from_cover, verify_cover, w_decomposition, w_function, w_lower_side_exhaustive,
    ConflictGraphSummary, CoverStrategy, CoveringCode, DEFAULT_NODE_BUDGET,
};
use ghd_core::protocols::{error_exact, error_mc, DeterministicProtocol, ProtocolFile};
use ghd_core::round_elim::{
    check_recurrences, eliminate_round_with, recurrence_table, sauer_bound_check,
    two_round_reference, vc_dimension, zero_round_check, EliminationConfig, RecurrenceTable,
};
use ghd_core::streaming::{
    exact_f0, ghd_to_streams, simulate_multipass, space_success_experiment, KmvSketch,
};
use ghd_core::{
    distributions::Distribution, ghd_eval, hamming_distance, BitString, Gap, GhdParams,
};
use num_bigint::BigUint;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

pub struct Ctx {
    pub seed: u64,
    pub format: Format,
}

impl Ctx {
    fn rng(&self) -> SeededRng {
        SeededRng::from_seed(self.seed)
    }
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn outcome<A: Serialize>(
    args: &A,
    result: Value,
    csv: Option<String>,
    pass: Option<bool>,
) -> Outcome {
    Outcome {
        params: to_json(args),
        result,
        csv,
        pass,
    }
}

fn req<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| missing(flag))
}

fn gap(c: &mut Option<String>) -> Result<Gap, CliError> {
    let text = c.get_or_insert_with(|| "1".into());
    text.parse::<Gap>()
        .map_err(|e| CliError::Usage(format!("bad --c {text:?}: {e}")))
}

fn params(n: usize, c: &mut Option<String>) -> Result<GhdParams, CliError> {
    Ok(GhdParams::new(n, gap(c)?)?)
}

fn bits(text: &str, flag: &str) -> Result<BitString, CliError> {
    text.parse()
        .map_err(|e| CliError::Usage(format!("bad --{flag}: {e}")))
}

/// Reads `path` as a bare `T` or as a CLI output whose `result.<field>` is one.
fn read_artifact<T: DeserializeOwned>(path: &Path, field: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{} is not JSON: {e}", path.display())))?;
    let inner = match value.get("result").and_then(|r| r.get(field)) {
        Some(v) if value.get("schema").is_some() => v.clone(),
        _ => value,
    };
    serde_json::from_value(inner)
        .map_err(|e| CliError::Usage(format!("{} is not a valid {field}: {e}", path.display())))
}

fn csv_line<I: IntoIterator<Item = String>>(cells: I) -> String {
    cells.into_iter().collect::<Vec<_>>().join(",") + "\n"
}

pub fn eval(mut a: EvalArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let x = bits(&req(&a.x, "x")?, "x")?;
    let y = bits(&req(&a.y, "y")?, "y")?;
    let n = *a.n.get_or_insert(x.len());
    let p = params(n, &mut a.c)?;
    let value = ghd_eval(&p, &x, &y)?;
    let d = hamming_distance(&x, &y)?;
    let result = json!({ "value": value, "distance": d, "thresholds": p.thresholds() });
    let csv = format!("n,c,distance,value\n{n},{},{d},{value}\n", p.gap);
    Ok(outcome(&a, result, Some(csv), None))
}

pub fn sample_mu(mut a: SampleMuArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let p = params(n, &mut a.c)?;
    let count = *a.count.get_or_insert(10);
    let mut rng = ctx.rng();
    let mut csv = String::from("x,y,distance,value\n");
    let mut pairs = Vec::new();
    for _ in 0..count {
        let (x, y) = dist::sample_mu(&p, &mut rng)?;
        let d = hamming_distance(&x, &y)?;
        let v = ghd_eval(&p, &x, &y)?;
        csv.push_str(&csv_line([
            x.to_string(),
            y.to_string(),
            d.to_string(),
            v.to_string(),
        ]));
        pairs.push(json!({ "x": x, "y": y, "distance": d, "value": v }));
    }
    Ok(outcome(&a, json!({ "pairs": pairs }), Some(csv), None))
}

pub fn sample_uniform(mut a: SampleUniformArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    if n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    let count = *a.count.get_or_insert(10);
    let mut rng = ctx.rng();
    let strings: Vec<BitString> = (0..count)
        .map(|_| dist::sample_uniform(n, &mut rng))
        .collect();
    let csv = std::iter::once("x\n".to_string())
        .chain(strings.iter().map(|s| format!("{s}\n")))
        .collect();
    Ok(outcome(&a, json!({ "strings": strings }), Some(csv), None))
}

pub fn tails(mut a: TailsArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let g = gap(&mut a.c)?;
    let r = tail_bracket_check(n, g)?;
    let d = &r.details;
    let csv = format!(
        "n,c,tail_tn,method,abs_error_bound,lower,upper,limit,limit_gap\n{n},{g},{},{},{},{},{},{},{}\n",
        r.value,
        to_json(&r.method).as_str().unwrap_or(""),
        r.abs_error_bound,
        d["lower"],
        d["upper"],
        d["limit"],
        d["limit_gap"]
    );
    let pass = r.pass;
    Ok(outcome(&a, to_json(&r), Some(csv), Some(pass)))
}

pub fn witness(mut a: WitnessArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let x1 = bits(&req(&a.x1, "x1")?, "x1")?;
    let x2 = bits(&req(&a.x2, "x2")?, "x2")?;
    let n = *a.n.get_or_insert(x1.len());
    let p = params(n, &mut a.c)?;
    let found = find_witness(&p, &x1, &x2)?;
    let brute = brute_force_witness(&p, &x1, &x2)?;
    let d = hamming_distance(&x1, &x2)?;
    let far = p.gap.at_least_two_c_sqrt_n(n as u64, d as u64);
    let verified = found.as_ref().is_none_or(|y| is_witness(&p, &x1, &x2, y));
    let pass = verified && found.is_some() == brute.is_some() && found.is_some() == far;
    let result = json!({
        "witness": found,
        "brute_force_witness": brute,
        "distance": d,
        "distance_at_least_2c_sqrt_n": far,
        "witness_verified": verified,
    });
    Ok(outcome(&a, result, None, Some(pass)))
}

fn strategy(s: StrategyArg) -> CoverStrategy {
    match s {
        StrategyArg::Greedy => CoverStrategy::Greedy,
        StrategyArg::Random => CoverStrategy::Random,
    }
}

fn cover_summary(cover: &CoveringCode) -> Value {
    json!({ "size": cover.size(), "log2_size": cover.log2_size(), "gap": cover.gap() })
}

pub fn cover_build(mut a: CoverBuildArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let g = gap(&mut a.c)?;
    let s = *a.strategy.get_or_insert(StrategyArg::Greedy);
    let samples = *a.samples.get_or_insert(1_000_000);
    let mut rng = ctx.rng();
    let cover = build_covering(n, g, strategy(s), &mut rng)?;
    let check = verify_cover(&cover, samples, &mut rng)?;
    let csv = std::iter::once("center\n".to_string())
        .chain(cover.centers.iter().map(|c| format!("{c}\n")))
        .collect();
    let pass = check.covered();
    let result = json!({ "cover": cover, "summary": cover_summary(&cover), "verification": check });
    Ok(outcome(&a, result, Some(csv), Some(pass)))
}

pub fn cover_verify(mut a: CoverVerifyArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let path = req(&a.cover, "cover")?;
    let samples = *a.samples.get_or_insert(1_000_000);
    let cover: CoveringCode = read_artifact(&path, "cover")?;
    let check = verify_cover(&cover, samples, &mut ctx.rng())?;
    let pass = check.covered();
    let result = json!({ "summary": cover_summary(&cover), "verification": check });
    Ok(outcome(&a, result, None, Some(pass)))
}

pub fn oneway_exact(mut a: OnewayExactArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let p = params(n, &mut a.c)?;
    let budget = *a.node_budget.get_or_insert(DEFAULT_NODE_BUDGET);
    let s = exact_oneway_complexity(&p, budget)?;
    let csv = format!("{}\n{}\n", ConflictGraphSummary::CSV_HEADER, s.csv_row());
    // only a proven chromatic number can contradict the counting bound
    let pass = s.chromatic_number.map(|k| k as f64 >= s.counting_bound);
    Ok(outcome(&a, to_json(&s), Some(csv), pass))
}

pub fn oneway_protocol(mut a: OnewayProtocolArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let mut rng = ctx.rng();
    let cover = match &a.cover {
        Some(path) => {
            let cover: CoveringCode = read_artifact(path, "cover")?;
            if a.n.is_some_and(|n| n != cover.n) {
                return Err(CliError::Usage("--n disagrees with the cover".into()));
            }
            a.n = Some(cover.n);
            gap(&mut a.c)?;
            cover
        }
        None => {
            let n = req(&a.n, "n")?;
            build_covering(n, gap(&mut a.c)?, CoverStrategy::Greedy, &mut rng)?
        }
    };
    let p = params(cover.n, &mut a.c)?;
    let samples = *a.samples.get_or_insert(1_000_000);
    let proto = protocol_from_cover(&cover, &p)?;
    let error = if p.n <= ghd_core::limits::pair_cap() {
        error_exact(&proto, &p, Distribution::Mu)?
    } else {
        error_mc(&proto, &p, Distribution::Mu, samples, &mut rng)?
    };
    if let Some(path) = &a.protocol_out {
        let file = proto.tabulate()?.to_file()?;
        let doc = json!({
            "schema": crate::output::SCHEMA,
            "tool_version": crate::output::TOOL_VERSION,
            "seed": ctx.seed,
            "params": to_json(&a),
            "result": { "protocol": file },
        });
        crate::output::emit(
            &(serde_json::to_string_pretty(&doc).expect("serializes") + "\n"),
            Some(path),
        )?;
    }
    let pass = error.errors == 0;
    let result = json!({
        "cover": cover_summary(&cover),
        "message_bits": proto.message_bits(),
        "error": error,
    });
    Ok(outcome(&a, result, None, Some(pass)))
}

pub fn wfn(mut a: WfnArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let given = a.x.as_deref().map(|s| bits(s, "x")).transpose()?;
    let n = match (&given, a.n) {
        (Some(x), None) => x.len(),
        (_, Some(n)) => n,
        (None, None) => return Err(missing("n")),
    };
    a.n = Some(n);
    let p = params(n, &mut a.c)?;
    let xs: Vec<BitString> = match given {
        Some(x) => vec![x],
        None => (0..=n)
            .map(|m| BitString::from_bits((0..n).map(|i| i < m)))
            .collect(),
    };
    let mut csv =
        String::from("x,weight,w_count,w_size,w,lower_side_exhaustive,lower_side_decomposition\n");
    let mut rows = Vec::new();
    let mut pass = true;
    for x in &xs {
        let w = w_function(&p, x)?;
        let exhaustive = w_lower_side_exhaustive(&p, x)?;
        let decomposition = w_decomposition(&p, x.weight() as u64)?;
        pass &= (exhaustive - decomposition).abs() <= 1e-9;
        csv.push_str(&csv_line([
            x.to_string(),
            x.weight().to_string(),
            w.count.to_string(),
            w.size.to_string(),
            w.value().to_string(),
            exhaustive.to_string(),
            decomposition.to_string(),
        ]));
        rows.push(json!({
            "x": x, "weight": x.weight(), "w": w, "w_value": w.value(),
            "lower_side_exhaustive": exhaustive, "lower_side_decomposition": decomposition,
        }));
    }
    Ok(outcome(&a, json!({ "rows": rows }), Some(csv), Some(pass)))
}

fn read_set(path: &Path) -> Result<Vec<BitString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad set file: {e}")));
    }
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| bits(l, "input"))
        .collect()
}

pub fn vcdim(mut a: VcdimArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let set = match (&a.input, a.random) {
        (Some(path), None) => {
            let set = read_set(path)?;
            let n = set
                .first()
                .map(BitString::len)
                .ok_or_else(|| CliError::Usage("empty set".into()))?;
            a.n.get_or_insert(n);
            set
        }
        (None, Some(size)) => {
            let n = req(&a.n, "n")?;
            let mut rng = ctx.rng();
            (0..size)
                .map(|_| dist::sample_uniform(n, &mut rng))
                .collect()
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --input and --random".into(),
            ))
        }
    };
    let n = a.n.expect("set above");
    let (vcd, cert) = vc_dimension(&set, n)?;
    let sauer = sauer_bound_check(&set, n)?;
    let pass = sauer.pass && cert.replay();
    let result = json!({ "vcd": vcd, "certificate": cert, "sauer": sauer });
    Ok(outcome(&a, result, None, Some(pass)))
}

pub fn round_elim(mut a: RoundElimArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let proto = match &a.protocol {
        Some(path) => {
            let file: ProtocolFile = read_artifact(path, "protocol")?;
            let proto = DeterministicProtocol::from_file(&file)?;
            if a.n.is_some_and(|n| n != proto.n()) {
                return Err(CliError::Usage("--n disagrees with the protocol".into()));
            }
            a.n = Some(proto.n());
            Some(proto)
        }
        None => None,
    };
    let n = req(&a.n, "n")?;
    let p = params(n, &mut a.c)?;
    let proto = match proto {
        Some(proto) => proto,
        None => two_round_reference(&p, *a.s.get_or_insert(n))?,
    };
    let eps = *a.eps.get_or_insert(0.0);
    let t = *a.t.get_or_insert(5);
    let defaults = EliminationConfig::default();
    let cfg = EliminationConfig {
        error_trials: *a.error_trials.get_or_insert(defaults.error_trials),
        sign_samples: *a.sign_samples.get_or_insert(defaults.sign_samples),
    };
    let (q, d) = eliminate_round_with(&proto, &p, eps, t, &cfg, &mut ctx.rng())?;
    let result = json!({
        "diagnostics": d,
        "error_within_bound": d.error_within_bound(),
        "output_protocol": {
            "n": q.n(), "rounds": q.rounds(), "message_bits": q.message_bits(),
            "speaker_first": q.speaker_first(), "public_coin_bits": q.public_coin_bits(),
        },
    });
    Ok(outcome(&a, result, None, Some(d.passes())))
}

pub fn recurrence(mut a: RecurrenceArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let text = req(&a.n, "n")?;
    let n: BigUint = text
        .parse()
        .map_err(|e| CliError::Usage(format!("bad --n {text:?}: {e}")))?;
    let s = *a.s.get_or_insert(1);
    let k = *a.k.get_or_insert(1);
    let table: RecurrenceTable = recurrence_table(&n, s, k)?;
    let c = &table.closing;
    let pass =
        check_recurrences(&table) && c.s_ratio_exact && c.eps_k_below_half && c.n_k_above_one;
    let csv = table.to_csv();
    Ok(outcome(&a, to_json(&table), Some(csv), Some(pass)))
}

pub fn zero_round(mut a: ZeroRoundArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let p = params(n, &mut a.c)?;
    let r = zero_round_check(&p)?;
    let pass = r.pass;
    Ok(outcome(&a, to_json(&r), None, Some(pass)))
}

pub fn stream_reduce(mut a: StreamReduceArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let mut rng = ctx.rng();
    let (x, y, p) = match (&a.x, &a.y) {
        (Some(x), Some(y)) => {
            let (x, y) = (bits(x, "x")?, bits(y, "y")?);
            let n = *a.n.get_or_insert(x.len());
            (x, y, params(n, &mut a.c)?)
        }
        (None, None) => {
            let p = params(req(&a.n, "n")?, &mut a.c)?;
            let (x, y) = dist::sample_mu(&p, &mut rng)?;
            (x, y, p)
        }
        _ => return Err(CliError::Usage("give both --x and --y or neither".into())),
    };
    let k = *a.k.get_or_insert(2 * p.n);
    let passes = *a.passes.get_or_insert(1);
    let truth = ghd_eval(&p, &x, &y)?;
    let (alice, bob) = ghd_to_streams(&x, &y)?;
    let f0 = exact_f0(&alice.concat(&bob));
    let distance = hamming_distance(&x, &y)?;
    let run = simulate_multipass(&p, k, passes, &x, &y, &mut rng)?;
    let mut message = KmvSketch::new(k, run.hash_seed)?;
    message.update_stream(&alice);
    let result = json!({
        "x": x, "y": y, "distance": distance, "f0_exact": f0, "ghd": truth,
        "outcome": run, "first_message": message,
    });
    let pass = f0 == (p.n + distance) as u64;
    Ok(outcome(&a, result, None, Some(pass)))
}

pub fn stream_experiment(mut a: StreamExperimentArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let n = req(&a.n, "n")?;
    let p = params(n, &mut a.c)?;
    let grid = a
        .k_grid
        .get_or_insert_with(|| vec![2, 8, 32, 128, 512, 2048, 8192])
        .clone();
    let trials = *a.trials.get_or_insert(2000);
    let table = space_success_experiment(&p, &grid, trials, &mut ctx.rng())?;
    let csv = table.to_csv();
    Ok(outcome(&a, to_json(&table), Some(csv), None))
}

pub fn coin(mut a: CoinArgs, ctx: &Ctx) -> Result<Outcome, CliError> {
    let eps = *a.eps.get_or_insert(0.1);
    let grid = a.samples.get_or_insert_with(|| vec![10, 500]).clone();
    let trials = *a.trials.get_or_insert(20_000);
    let rows = coin_distinguisher_experiment(eps, &grid, trials, &mut ctx.rng())?;
    let mut csv = String::from("samples,trials,error,ci95_halfwidth,exact_error,within_3sigma\n");
    for r in &rows {
        csv.push_str(&csv_line([
            r.samples.to_string(),
            r.trials.to_string(),
            r.error.to_string(),
            r.ci95_halfwidth.to_string(),
            r.exact_error.to_string(),
            r.within_3sigma.to_string(),
        ]));
    }
    let pass = rows.iter().all(|r| r.within_3sigma);
    Ok(outcome(&a, json!({ "rows": rows }), Some(csv), Some(pass)))
}

pub fn verify_appendix(mut a: VerifyAppendixArgs, _: &Ctx) -> Result<Outcome, CliError> {
    let n = *a.n.get_or_insert(10_000);
    let reports = appendix_suite(n)?;
    let mut csv = String::from("op,params,value,bound,pass\n");
    for r in &reports {
        let params = r.params.to_string().replace('"', "\"\"");
        csv.push_str(&format!(
            "{},\"{params}\",{},{},{}\n",
            r.op, r.value, r.bound, r.pass
        ));
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(outcome(
        &a,
        json!({ "checks": reports }),
        Some(csv),
        Some(pass),
    ))
}
