//! Initial-value generation for experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Attempts at hitting the pinned sum before giving up.
const MAX_SUM_ATTEMPTS: u32 = 10_000;

#[derive(Debug, Error)]
pub enum ValueError {
    #[error("{got} values supplied for {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty value range [{lo}, {hi}]")]
    EmptyRange { lo: i64, hi: i64 },
    #[error("sum {sum} is unreachable with {n} values in [{lo}, {hi}]")]
    SumInfeasible {
        sum: i64,
        n: usize,
        lo: i64,
        hi: i64,
    },
    #[error("no draw hit sum {sum} after {attempts} attempts")]
    SumAttemptsExhausted { sum: i64, attempts: u32 },
}

/// How a run obtains its initial values.
#[derive(Debug, Clone)]
pub enum ValueSpec {
    Explicit(Vec<i64>),
    Range {
        lo: i64,
        hi: i64,
    },
    /// Draws `n - 1` values from the range and solves for the last so the
    /// network sum is pinned, redrawing while the solved value falls
    /// outside the range.
    RangeWithSum {
        lo: i64,
        hi: i64,
        sum: i64,
    },
}

/// Produces `n` initial values, deterministically for a fixed seed.
pub fn generate(spec: &ValueSpec, n: usize, seed: u64) -> Result<Vec<i64>, ValueError> {
    match *spec {
        ValueSpec::Explicit(ref values) => {
            if values.len() != n {
                return Err(ValueError::LengthMismatch {
                    expected: n,
                    got: values.len(),
                });
            }
            Ok(values.clone())
        }
        ValueSpec::Range { lo, hi } => {
            if lo > hi {
                return Err(ValueError::EmptyRange { lo, hi });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n).map(|_| rng.gen_range(lo..=hi)).collect())
        }
        ValueSpec::RangeWithSum { lo, hi, sum } => {
            if lo > hi {
                return Err(ValueError::EmptyRange { lo, hi });
            }
            let (lo_total, hi_total) = (n as i128 * lo as i128, n as i128 * hi as i128);
            if (sum as i128) < lo_total || (sum as i128) > hi_total {
                return Err(ValueError::SumInfeasible { sum, n, lo, hi });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..MAX_SUM_ATTEMPTS {
                let mut values: Vec<i64> = (0..n - 1).map(|_| rng.gen_range(lo..=hi)).collect();
                let partial: i128 = values.iter().map(|&v| v as i128).sum();
                let last = sum as i128 - partial;
                if last >= lo as i128 && last <= hi as i128 {
                    values.push(last as i64);
                    return Ok(values);
                }
            }
            Err(ValueError::SumAttemptsExhausted {
                sum,
                attempts: MAX_SUM_ATTEMPTS,
            })
        }
    }
}
