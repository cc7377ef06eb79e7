//! Config files and flag/config/default resolution.

use crate::error::CliError;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// On-disk experiment config. Every key is optional; unknown keys are errors.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Must name the invoked subcommand when present, e.g. "cover build".
    pub subcommand: Option<String>,
    #[serde(default)]
    pub params: Map<String, Value>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub threads: Option<usize>,
    pub cap_n: Option<usize>,
}

pub fn load(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
}

/// Fills every flag left unset from the config's `params`. A config key that
/// names no parameter of the subcommand is rejected.
pub fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    params: &Map<String, Value>,
) -> Result<T, CliError> {
    let mut value = serde_json::to_value(flags).expect("argument structs serialize");
    let obj = value.as_object_mut().expect("argument structs are objects");
    for (key, v) in params {
        match obj.get(key) {
            None => return Err(CliError::Usage(format!("unknown config key params.{key}"))),
            Some(Value::Null) => {
                obj.insert(key.clone(), v.clone());
            }
            Some(_) => {}
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("bad config value: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Demo {
        n: Option<usize>,
        c: Option<String>,
    }

    fn params(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn flags_beat_config() {
        let flags = Demo {
            n: Some(4),
            c: None,
        };
        let out = merge(&flags, &params(json!({"n": 9, "c": "1/2"}))).unwrap();
        assert_eq!(
            out,
            Demo {
                n: Some(4),
                c: Some("1/2".into())
            }
        );
    }

    #[test]
    fn unknown_and_mistyped_keys() {
        assert!(matches!(
            merge(&Demo::default(), &params(json!({"m": 1}))),
            Err(CliError::Usage(_))
        ));
        assert!(matches!(
            merge(&Demo::default(), &params(json!({"n": "x"}))),
            Err(CliError::Usage(_))
        ));
    }

    #[test]
    fn config_file_rejects_unknown_top_level() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"seed": 1, "colour": 2}"#).is_err());
        let c: ConfigFile = serde_json::from_str(r#"{"seed": 1, "format": "csv"}"#).unwrap();
        assert_eq!((c.seed, c.format), (Some(1), Some(Format::Csv)));
    }
}
