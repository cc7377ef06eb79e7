//! Size caps for exhaustive enumeration.

use crate::error::{GhdError, Result};
use std::sync::atomic::{AtomicUsize, Ordering};

/// Default cap on n for loops over all 2^(2n) input pairs.
pub const DEFAULT_PAIR_CAP: usize = 14;
/// Default cap on n for loops over all 2^n single strings.
pub const DEFAULT_SINGLE_CAP: usize = 24;
/// The pair cap may be raised up to here and no further.
pub const HARD_PAIR_CAP: usize = 16;
/// The single cap may be raised up to here and no further.
pub const HARD_SINGLE_CAP: usize = 28;

static PAIR_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_PAIR_CAP);
static SINGLE_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_SINGLE_CAP);

pub fn pair_cap() -> usize {
    PAIR_CAP.load(Ordering::Relaxed)
}

pub fn single_cap() -> usize {
    SINGLE_CAP.load(Ordering::Relaxed)
}

/// Overrides the pair cap; refuses values above [`HARD_PAIR_CAP`].
pub fn set_pair_cap(n: usize) -> Result<()> {
    if n > HARD_PAIR_CAP {
        return Err(GhdError::InvalidArgument(format!(
            "pair cap {n} exceeds the hard limit {HARD_PAIR_CAP}"
        )));
    }
    PAIR_CAP.store(n, Ordering::Relaxed);
    Ok(())
}

/// Overrides the single-string cap; refuses values above [`HARD_SINGLE_CAP`].
pub fn set_single_cap(n: usize) -> Result<()> {
    if n > HARD_SINGLE_CAP {
        return Err(GhdError::InvalidArgument(format!(
            "single-string cap {n} exceeds the hard limit {HARD_SINGLE_CAP}"
        )));
    }
    SINGLE_CAP.store(n, Ordering::Relaxed);
    Ok(())
}

pub(crate) fn check_pairs(n: usize) -> Result<()> {
    if n > pair_cap() {
        return Err(GhdError::ResourceLimit(format!(
            "exhaustive pair enumeration at n = {n} exceeds the cap {}",
            pair_cap()
        )));
    }
    Ok(())
}

pub(crate) fn check_singles(n: usize) -> Result<()> {
    if n > single_cap() {
        return Err(GhdError::ResourceLimit(format!(
            "exhaustive enumeration at n = {n} exceeds the cap {}",
            single_cap()
        )));
    }
    Ok(())
}
