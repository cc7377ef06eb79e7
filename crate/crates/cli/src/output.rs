//! Output envelope: every file carries the schema version, tool version,
//! seed and resolved parameters.

use crate::commands::Ctx;
use crate::config::Format;
use crate::error::CliError;
use serde_json::{json, Value};
use std::io::Write;
use std::path::Path;

pub const SCHEMA: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// What a subcommand produced.
pub struct Outcome {
    pub params: Value,
    pub result: Value,
    /// Plot-ready table, when the result has one.
    pub csv: Option<String>,
    /// `Some(false)` makes the process exit with status 1.
    pub pass: Option<bool>,
}

pub fn render(command: &str, ctx: &Ctx, o: &Outcome) -> Result<String, CliError> {
    match ctx.format {
        Format::Json => {
            let doc = json!({
                "schema": SCHEMA,
                "tool_version": TOOL_VERSION,
                "command": command,
                "seed": ctx.seed,
                "params": o.params,
                "pass": o.pass,
                "result": o.result,
            });
            Ok(serde_json::to_string_pretty(&doc).expect("JSON values serialize") + "\n")
        }
        Format::Csv => {
            let Some(table) = &o.csv else {
                return Err(CliError::Usage(format!(
                    "`{command}` has no CSV form; use --format json"
                )));
            };
            let mut s = format!(
                "# schema: {SCHEMA}\n# tool_version: {TOOL_VERSION}\n# command: {command}\n# seed: {}\n# params: {}\n",
                ctx.seed, o.params
            );
            if let Some(pass) = o.pass {
                s.push_str(&format!("# pass: {pass}\n"));
            }
            s.push_str(table);
            if !s.ends_with('\n') {
                s.push('\n');
            }
            Ok(s)
        }
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Failure(e.to_string())),
    }
}
