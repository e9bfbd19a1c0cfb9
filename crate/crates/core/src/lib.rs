//! Toeplitz approximation of symbolic sequences.
//!
//! Given any bi-infinite sequence `a` over `{1..k}` and a tolerance `eps`,
//! [`construct::build`] produces a Toeplitz sequence `b` by stamping ever
//! longer central blocks periodically over `a`. The remaining modules are the
//! measurement instruments used to check the result exactly on finite windows:
//! block and aligned-word complexity, difference densities, periodic parts and
//! returning times, and Mobius correlation sums.

pub mod check;
pub mod cli;
pub mod complexity;
pub mod construct;
pub mod error;
pub mod metrics;
pub mod mobius;
pub mod rational;
pub mod report;
pub mod seq;

pub use check::{Check, CheckReport, CheckStatus};
pub use error::{Error, Result};
pub use rational::Rational;
pub use seq::{Alphabet, BiSequence, CylinderSpec, Symbol, Word};

/// Log-spaced checkpoints `{1, 10, 100, ...} ∩ [1, n]` plus `n` itself.
pub fn checkpoints(n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut c = 1u64;
    while c <= n {
        out.push(c);
        match c.checked_mul(10) {
            Some(next) => c = next,
            None => break,
        }
    }
    if out.last() != Some(&n) && n >= 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    #[test]
    fn checkpoints_are_log_spaced() {
        assert_eq!(super::checkpoints(1), vec![1]);
        assert_eq!(super::checkpoints(100), vec![1, 10, 100]);
        assert_eq!(super::checkpoints(2500), vec![1, 10, 100, 1000, 2500]);
        assert!(super::checkpoints(0).is_empty());
    }
}
