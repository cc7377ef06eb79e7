mod args;
mod commands;
mod config;
mod error;
mod output;

use args::{Cli, Command, CoverCmd, OnewayCmd, SampleCmd, StreamCmd};
use clap::Parser;
use config::{merge, ConfigFile, Format};
use error::CliError;
use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ghd-lab: {e}");
            e.exit_code()
        }
    }
}

/// Runs one subcommand; `Ok(false)` means a check did not hold.
fn run(cli: Cli) -> Result<bool, CliError> {
    let cfg = match &cli.global.config {
        Some(path) => config::load(path)?,
        None => ConfigFile::default(),
    };
    let name = cli.command.name();
    if let Some(sub) = &cfg.subcommand {
        if sub != name {
            return Err(CliError::Usage(format!(
                "config is for `{sub}`, not `{name}`"
            )));
        }
    }
    let g = &cli.global;
    let ctx = commands::Ctx {
        seed: g.seed.or(cfg.seed).unwrap_or(0),
        format: g.format.or(cfg.format).unwrap_or(Format::Json),
    };
    if let Some(t) = g.threads.or(cfg.threads) {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Failure(e.to_string()))?;
    }
    if let Some(cap) = g.cap_n.or(cfg.cap_n) {
        ghd_core::limits::set_pair_cap(cap)?;
    }
    let out_path = g.out.clone().or(cfg.output_path.clone());
    let p = &cfg.params;
    let outcome = match &cli.command {
        Command::Eval(a) => commands::eval(merge(a, p)?, &ctx)?,
        Command::Sample(SampleCmd::Mu(a)) => commands::sample_mu(merge(a, p)?, &ctx)?,
        Command::Sample(SampleCmd::Uniform(a)) => commands::sample_uniform(merge(a, p)?, &ctx)?,
        Command::Tails(a) => commands::tails(merge(a, p)?, &ctx)?,
        Command::Witness(a) => commands::witness(merge(a, p)?, &ctx)?,
        Command::Cover(CoverCmd::Build(a)) => commands::cover_build(merge(a, p)?, &ctx)?,
        Command::Cover(CoverCmd::Verify(a)) => commands::cover_verify(merge(a, p)?, &ctx)?,
        Command::Oneway(OnewayCmd::Exact(a)) => commands::oneway_exact(merge(a, p)?, &ctx)?,
        Command::Oneway(OnewayCmd::Protocol(a)) => commands::oneway_protocol(merge(a, p)?, &ctx)?,
        Command::Wfn(a) => commands::wfn(merge(a, p)?, &ctx)?,
        Command::Vcdim(a) => commands::vcdim(merge(a, p)?, &ctx)?,
        Command::RoundElim(a) => commands::round_elim(merge(a, p)?, &ctx)?,
        Command::Recurrence(a) => commands::recurrence(merge(a, p)?, &ctx)?,
        Command::ZeroRound(a) => commands::zero_round(merge(a, p)?, &ctx)?,
        Command::Stream(StreamCmd::Reduce(a)) => commands::stream_reduce(merge(a, p)?, &ctx)?,
        Command::Stream(StreamCmd::Experiment(a)) => {
            commands::stream_experiment(merge(a, p)?, &ctx)?
        }
        Command::Coin(a) => commands::coin(merge(a, p)?, &ctx)?,
        Command::VerifyAppendix(a) => commands::verify_appendix(merge(a, p)?, &ctx)?,
    };
    let text = output::render(name, &ctx, &outcome)?;
    output::emit(&text, out_path.as_deref())?;
    Ok(outcome.pass != Some(false))
}
