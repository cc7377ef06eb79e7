//! Machine-readable check records.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Numeric evaluation method behind a probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TailMethod {
    /// Exact rational arithmetic; no rounding until the final conversion.
    ExactBigrational,
    /// Floating summation of a mass table scaled to 1 at its mode.
    LogSpaceFloat,
    /// Continuity-corrected normal approximation.
    NormalApprox,
}

/// One verified inequality or measured quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub op: String,
    pub params: Value,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
    pub seed: Option<u64>,
    pub method: Option<TailMethod>,
    pub abs_error_bound: f64,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl CheckReport {
    pub fn new(op: &str, params: Value, value: f64, bound: f64, pass: bool) -> Self {
        Self {
            op: op.to_string(),
            params,
            value,
            bound,
            pass,
            seed: None,
            method: None,
            abs_error_bound: 0.0,
            details: Map::new(),
        }
    }

    pub fn with_method(mut self, method: TailMethod, abs_error_bound: f64) -> Self {
        self.method = Some(method);
        self.abs_error_bound = abs_error_bound;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.to_string(), value.into());
        self
    }
}
