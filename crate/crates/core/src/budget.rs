//! Process-wide caps on dense tensor sizes.
//!
//! Every operation that materializes a rank-r field or a k-particle kernel checks the
//! entry count against these caps and fails with [`Error::Budget`] instead of
//! allocating. `HLAB_BUDGET` overrides the tensor cap; it accepts either a plain
//! entry count or `tensor=<entries>,eigen=<rows>`.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Once;

use crate::error::{Error, Result};

/// Default cap on complex entries of any dense tensor (2^24, 256 MiB).
pub const DEFAULT_TENSOR_CAP: usize = 1 << 24;
/// Default cap on the row count of dense Hermitian eigensolves.
pub const DEFAULT_EIGEN_ROWS: usize = 4096;

static TENSOR_CAP: AtomicUsize = AtomicUsize::new(DEFAULT_TENSOR_CAP);
static EIGEN_ROWS: AtomicUsize = AtomicUsize::new(DEFAULT_EIGEN_ROWS);
static ENV_INIT: Once = Once::new();

fn init_from_env() {
    ENV_INIT.call_once(|| {
        if let Ok(raw) = std::env::var("HLAB_BUDGET") {
            apply_spec(&raw);
        }
    });
}

fn apply_spec(raw: &str) {
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        match part.split_once('=') {
            Some(("tensor", v)) => {
                if let Ok(v) = v.trim().parse() {
                    TENSOR_CAP.store(v, Ordering::Relaxed);
                }
            }
            Some(("eigen", v)) => {
                if let Ok(v) = v.trim().parse() {
                    EIGEN_ROWS.store(v, Ordering::Relaxed);
                }
            }
            None => {
                if let Ok(v) = part.parse() {
                    TENSOR_CAP.store(v, Ordering::Relaxed);
                }
            }
            _ => {}
        }
    }
}

/// Snapshot of the active caps, echoed into run manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Caps {
    pub tensor_entries: usize,
    pub eigen_rows: usize,
}

pub fn caps() -> Caps {
    init_from_env();
    Caps {
        tensor_entries: TENSOR_CAP.load(Ordering::Relaxed),
        eigen_rows: EIGEN_ROWS.load(Ordering::Relaxed),
    }
}

pub fn set_tensor_cap(entries: usize) {
    init_from_env();
    TENSOR_CAP.store(entries, Ordering::Relaxed);
}

pub fn set_eigen_rows(rows: usize) {
    init_from_env();
    EIGEN_ROWS.store(rows, Ordering::Relaxed);
}

/// `base^exp` as an exact entry count, saturating instead of overflowing.
pub fn entries(base: usize, exp: usize) -> u128 {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.saturating_mul(base as u128);
    }
    acc
}

pub fn check_tensor(what: impl Into<String>, needed: u128) -> Result<()> {
    let cap = caps().tensor_entries as u128;
    if needed > cap {
        return Err(Error::Budget {
            what: what.into(),
            needed,
            cap,
        });
    }
    Ok(())
}

pub fn check_eigen(what: impl Into<String>, rows: usize) -> Result<()> {
    let cap = caps().eigen_rows;
    if rows > cap {
        return Err(Error::Budget {
            what: what.into(),
            needed: rows as u128,
            cap: cap as u128,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_saturates() {
        assert_eq!(entries(16, 6), 1 << 24);
        assert_eq!(entries(usize::MAX, 10), u128::MAX);
    }

    #[test]
    fn oversize_request_is_rejected() {
        let err = check_tensor("test tensor", u128::MAX).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
        assert!(check_tensor("small", 16).is_ok());
    }
}
