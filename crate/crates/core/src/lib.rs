//! Gap-Hamming-Distance toolkit.

pub mod bitstring;
pub mod distributions;
pub mod error;
pub mod limits;
pub mod numeric;
pub mod oneway;
pub mod protocols;
pub mod report;
pub mod round_elim;
pub mod stats;
pub mod streaming;

pub use bitstring::{
    ball_enumerate, ball_volume, ghd_eval, hamming_distance, near_orthogonal, BitString, Gap,
    GhdParams, Ternary, Thresholds,
};
pub use error::{GhdError, Result};
pub use report::{CheckReport, TailMethod};

/// Probabilities and other real quantities reported by this crate.
pub type Prob = f64;
