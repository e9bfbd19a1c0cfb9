//! Difference densities, periodic parts, Toeplitz coverage and returning times.
//!
//! Periodicity here is always relative to the window `[-N, N]`: an index is
//! `p`-periodic if it agrees with every index of its residue class mod `p`
//! inside the window.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::construct::ConstructionTrace;
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::seq::{BiSequence, CylinderSpec, Symbol};

/// `(1/(2N+1)) * sum_{|n|<=N} |x_n - y_n|`, exact.
pub fn difference_density(x: &BiSequence, y: &BiSequence, window: i64) -> Result<Rational> {
    if x.alphabet() != y.alphabet() {
        return Err(Error::AlphabetMismatch { left: x.alphabet().k(), right: y.alphabet().k() });
    }
    if window < 0 {
        return Err(Error::Precondition(format!("N must be >= 0, got {window}")));
    }
    let xs = x.values(-window, window)?;
    let ys = y.values(-window, window)?;
    let sum: u64 = xs.iter().zip(&ys).map(|(a, b)| u64::from(a.abs_diff(*b))).sum();
    Ok(Rational::new(BigInt::from(sum), BigInt::from(2 * window + 1)))
}

/// Residue classes mod `p` that are constant on `[-N, N]`.
fn constant_classes(values: &[Symbol], window: i64, p: i64) -> Vec<bool> {
    let mut first: Vec<Option<Symbol>> = vec![None; p as usize];
    let mut constant = vec![true; p as usize];
    for (i, &v) in values.iter().enumerate() {
        let c = (i as i64 - window).rem_euclid(p) as usize;
        match first[c] {
            None => first[c] = Some(v),
            Some(f) if f != v => constant[c] = false,
            _ => {}
        }
    }
    constant
}

/// Indices of `[-N, N]` that are `p`-periodic relative to that window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicPositions {
    pub period: i64,
    pub window: i64,
    pub positions: Vec<i64>,
}

impl PeriodicPositions {
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn contains(&self, n: i64) -> bool {
        self.positions.binary_search(&n).is_ok()
    }
}

pub fn periodic_positions(x: &BiSequence, p: i64, window: i64) -> Result<PeriodicPositions> {
    if p < 1 || window < p {
        return Err(Error::Precondition(format!("need p >= 1 and N >= p, got p={p}, N={window}")));
    }
    let values = x.values(-window, window)?;
    let constant = constant_classes(&values, window, p);
    let positions = (-window..=window).filter(|n| constant[n.rem_euclid(p) as usize]).collect();
    Ok(PeriodicPositions { period: p, window, positions })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageReport {
    /// Checked indices are `|n| <= radius`.
    pub radius: i64,
    pub window: i64,
    pub total: usize,
    pub covered: usize,
    pub fraction: Rational,
    /// Least stage whose period makes `n` periodic, per checked index.
    pub least_stage: BTreeMap<i64, Option<usize>>,
}

impl CoverageReport {
    /// Number of indices first covered at each stage.
    pub fn histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for s in self.least_stage.values().flatten() {
            *h.entry(*s).or_insert(0) += 1;
        }
        h
    }
}

/// For every `|n| <= l_{max-1} - 1`, the least stage `M` such that `n` is
/// `l_M`-periodic in `b` relative to `[-N, N]`.
pub fn toeplitz_coverage(b: &BiSequence, trace: &ConstructionTrace, window: i64) -> Result<CoverageReport> {
    let max = trace.max_stage();
    let l_max = trace.l(max);
    if window < l_max {
        return Err(Error::Precondition(format!("window N={window} must be >= l_max={l_max}")));
    }
    let values = b.values(-window, window)?;
    let per_stage: Vec<(usize, i64, Vec<bool>)> = (1..=max)
        .map(|m| {
            let l = trace.l(m);
            (m, l, constant_classes(&values, window, l))
        })
        .collect();
    let radius = trace.l(max - 1) - 1;
    let least_stage: BTreeMap<i64, Option<usize>> = (-radius..=radius)
        .map(|n| {
            let m = per_stage.iter().find(|(_, l, c)| c[n.rem_euclid(*l) as usize]).map(|(m, _, _)| *m);
            (n, m)
        })
        .collect();
    let total = least_stage.len();
    let covered = least_stage.values().filter(|m| m.is_some()).count();
    Ok(CoverageReport {
        radius,
        window,
        total,
        covered,
        fraction: Rational::new(BigInt::from(covered), BigInt::from(total)),
        least_stage,
    })
}

/// Shifts `t` with `[start+t, end+t] ⊆ [-N, N]` at which `x` matches the cylinder word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturningTimeSet {
    pub cylinder: CylinderSpec,
    pub window: i64,
    pub times: Vec<i64>,
    /// Inclusive range of shifts that were tested.
    pub tested: (i64, i64),
}

impl ReturningTimeSet {
    pub fn contains(&self, t: i64) -> bool {
        self.times.binary_search(&t).is_ok()
    }
}

pub fn returning_times(x: &BiSequence, cyl: &CylinderSpec, window: i64) -> Result<ReturningTimeSet> {
    let (start, end) = (cyl.word.start(), cyl.word.end());
    if start < -window || end > window {
        return Err(Error::Precondition(format!(
            "cylinder [{start}, {end}] does not fit in the window [-{window}, {window}]"
        )));
    }
    let values = x.values(-window, window)?;
    let (t_lo, t_hi) = (-window - start, window - end);
    let word = cyl.word.symbols();
    let times = (t_lo..=t_hi)
        .filter(|&t| {
            let off = (start + t + window) as usize;
            &values[off..off + word.len()] == word
        })
        .collect();
    Ok(ReturningTimeSet { cylinder: cyl.clone(), window, times, tested: (t_lo, t_hi) })
}

/// Largest gap between consecutive returning times.
pub fn max_gap(times: &ReturningTimeSet) -> Result<i64> {
    if times.times.len() < 2 {
        return Err(Error::UndefinedGap(times.times.len()));
    }
    Ok(times.times.windows(2).map(|w| w[1] - w[0]).max().expect("two or more times"))
}
