//! Command-line grammar. Parameter fields are optional so that a config file
//! can fill whatever the flags leave out; config keys are the snake_case
//! field names.

use crate::config::Format;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(
    name = "ghd-lab",
    version,
    about = "Gap-Hamming-Distance experiments and verifiers"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct GlobalArgs {
    /// Master seed for every random choice (default 0).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Raise or lower the cap on n for exhaustive pair enumeration.
    #[arg(long = "cap-n", global = true)]
    pub cap_n: Option<usize>,
    /// JSON config; explicit flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// GHD_{c,n}(x, y) as 0, 1 or star.
    Eval(EvalArgs),
    #[command(subcommand)]
    Sample(SampleCmd),
    /// T_n(c) against the normal-tail bracket and the limit T(c).
    Tails(TailsArgs),
    /// Witness search for two of Alice's inputs.
    Witness(WitnessArgs),
    #[command(subcommand)]
    Cover(CoverCmd),
    #[command(subcommand)]
    Oneway(OnewayCmd),
    /// The witness probability w(x) and its hypergeometric decomposition.
    Wfn(WfnArgs),
    /// VC dimension of a set of strings and Sauer's bound.
    Vcdim(VcdimArgs),
    /// Removes the first round of a protocol.
    RoundElim(RoundElimArgs),
    /// The parameter recurrence of the multi-round bound.
    Recurrence(RecurrenceArgs),
    /// Exact error of the constant protocols.
    ZeroRound(ZeroRoundArgs),
    #[command(subcommand)]
    Stream(StreamCmd),
    /// Biased-coin distinguisher experiment.
    Coin(CoinArgs),
    /// The appendix inequalities at one n.
    VerifyAppendix(VerifyAppendixArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Sample(SampleCmd::Mu(_)) => "sample mu",
            Command::Sample(SampleCmd::Uniform(_)) => "sample uniform",
            Command::Tails(_) => "tails",
            Command::Witness(_) => "witness",
            Command::Cover(CoverCmd::Build(_)) => "cover build",
            Command::Cover(CoverCmd::Verify(_)) => "cover verify",
            Command::Oneway(OnewayCmd::Exact(_)) => "oneway exact",
            Command::Oneway(OnewayCmd::Protocol(_)) => "oneway protocol",
            Command::Wfn(_) => "wfn",
            Command::Vcdim(_) => "vcdim",
            Command::RoundElim(_) => "round-elim",
            Command::Recurrence(_) => "recurrence",
            Command::ZeroRound(_) => "zero-round",
            Command::Stream(StreamCmd::Reduce(_)) => "stream reduce",
            Command::Stream(StreamCmd::Experiment(_)) => "stream experiment",
            Command::Coin(_) => "coin",
            Command::VerifyAppendix(_) => "verify-appendix",
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum SampleCmd {
    /// Pairs from μ_{c,n}.
    Mu(SampleMuArgs),
    /// Strings from the uniform distribution.
    Uniform(SampleUniformArgs),
}

#[derive(Subcommand, Debug)]
pub enum CoverCmd {
    /// Builds and verifies a covering code of radius ⌊c√n⌋.
    Build(CoverBuildArgs),
    /// Verifies a covering code file.
    Verify(CoverVerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum OnewayCmd {
    /// Exact one-way complexity through the conflict graph (n <= 10).
    Exact(OnewayExactArgs),
    /// Error of the covering-code one-way protocol.
    Protocol(OnewayProtocolArgs),
}

#[derive(Subcommand, Debug)]
pub enum StreamCmd {
    /// Maps a GHD instance to two streams and runs the sketch protocol.
    Reduce(StreamReduceArgs),
    /// Success rate against sketch size.
    Experiment(StreamExperimentArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Gap constant: `1`, `3/2`, `1.5` or `sqrt(2)` (default 1).
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleMuArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// Number of pairs (default 10).
    #[arg(long)]
    pub count: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleUniformArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of strings (default 10).
    #[arg(long)]
    pub count: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailsArgs {
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long)]
    pub c: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    #[arg(long)]
    pub x1: Option<String>,
    #[arg(long)]
    pub x2: Option<String>,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyArg {
    Greedy,
    Random,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverBuildArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// greedy (default) or random.
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    /// Samples for verification beyond the exhaustive range (default 1000000).
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverVerifyArgs {
    /// Covering code JSON, bare or as written by `cover build`.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    #[arg(long)]
    pub samples: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnewayExactArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// Branch-and-bound node budget for the chromatic number.
    #[arg(long)]
    pub node_budget: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OnewayProtocolArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// Use this cover instead of building a greedy one.
    #[arg(long)]
    pub cover: Option<PathBuf>,
    /// Monte Carlo samples when n is above the pair cap (default 1000000).
    #[arg(long)]
    pub samples: Option<u64>,
    /// Also write the tabulated protocol here.
    #[arg(long)]
    pub protocol_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WfnArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// A single x; otherwise one row per weight.
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcdimArgs {
    /// JSON array of strings, or one string per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Draw this many uniform strings instead of reading a file.
    #[arg(long)]
    pub random: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundElimArgs {
    /// Protocol JSON; without it the two-round reference protocol is used.
    #[arg(long)]
    pub protocol: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// First-message length of the reference protocol (default n).
    #[arg(long)]
    pub s: Option<usize>,
    /// Error the input protocol is assumed to have (default 0).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Majority copies, odd (default 5).
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub error_trials: Option<u64>,
    #[arg(long)]
    pub sign_samples: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecurrenceArgs {
    /// Decimal, any size.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroRoundArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamReduceArgs {
    /// Alice's input; drawn from μ when absent.
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// Sketch capacity (default 2n).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub passes: Option<usize>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamExperimentArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub c: Option<String>,
    /// Comma-separated sketch sizes (default 2,8,32,128,512,2048,8192).
    #[arg(long, value_delimiter = ',')]
    pub k_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoinArgs {
    #[arg(long)]
    pub eps: Option<f64>,
    /// Comma-separated flip counts (default 10,500).
    #[arg(long, value_delimiter = ',')]
    pub samples: Option<Vec<u64>>,
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyAppendixArgs {
    #[arg(long)]
    pub n: Option<u64>,
}
