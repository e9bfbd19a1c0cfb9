//! Stagewise Toeplitz construction.
//!
//! Stage 1 writes `a_0` at every multiple of `l_1`. Stage `M >= 2` takes the
//! central block `varpi_M = a^(M-1)[-l_{M-1}, l_{M-1}-1]` and stamps it on every
//! interval `[r*l_M - l_{M-1}, r*l_M + l_{M-1} - 1]`, leaving other indices
//! untouched. Because the `r = 0` stamp rewrites the central block with its own
//! content, each central block is frozen from its stage on, and the limit `b`
//! is read off the earliest stage whose central block contains the index.
//!
//! All tolerances are exact rationals.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use serde_json::{json, Value};

use crate::check::{Check, CheckReport, CheckStatus};
use crate::error::{Error, Result};
use crate::rational::{ceil_positive, format_rational, from_int, ratio, Rational};
use crate::seq::{Alphabet, BiSequence, Oracle, Symbol, Word};

/// Explicit `(eps_M, l_M)` for one stage; missing parts use the default rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleOverride {
    pub stage: usize,
    pub epsilon: Option<Rational>,
    pub l: Option<i64>,
}

impl ScheduleOverride {
    pub fn l(stage: usize, l: i64) -> Self {
        ScheduleOverride { stage, epsilon: None, l: Some(l) }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub stage: usize,
    pub epsilon: Rational,
    pub l: i64,
}

/// Stage tolerances and periods.
///
/// Default rule: `eps_M = eps / 3^M`; `l_1` is the least integer with
/// `k / l_1 <= eps_1`; for `M >= 2`, `l_M` is the least multiple of `l_{M-1}`
/// with `2k l_{M-1} / l_M <= eps_M` and `l_M >= 2 l_{M-1}`. Overrides are
/// validated against every constraint, never trusted.
pub fn schedule(
    epsilon: &Rational,
    alphabet: Alphabet,
    max_stage: usize,
    overrides: &[ScheduleOverride],
) -> Result<Vec<ScheduleEntry>> {
    if !epsilon.is_positive() {
        return Err(Error::ParameterOutOfRange(format!("epsilon must be positive, got {}", format_rational(epsilon))));
    }
    if max_stage == 0 {
        return Err(Error::ParameterOutOfRange("max_stage must be >= 1".into()));
    }
    for o in overrides {
        if o.stage == 0 || o.stage > max_stage {
            return Err(Error::ParameterOutOfRange(format!("override for stage {} outside 1..={max_stage}", o.stage)));
        }
    }
    let k = i64::from(alphabet.k());
    let mut entries: Vec<ScheduleEntry> = Vec::with_capacity(max_stage);
    let mut three_pow = BigInt::one();
    for m in 1..=max_stage {
        three_pow *= 3;
        let over = overrides.iter().rev().find(|o| o.stage == m);
        let eps_m = match over.and_then(|o| o.epsilon.clone()) {
            Some(e) => e,
            None => epsilon / Rational::from_integer(three_pow.clone()),
        };
        if !eps_m.is_positive() {
            return Err(schedule_err(m, format!("0 < eps_{m}")));
        }
        let l_m = match over.and_then(|o| o.l) {
            Some(l) => l,
            None if m == 1 => ceil_positive(&(from_int(k) / &eps_m)).ok_or_else(|| overflow(m))?.max(1),
            None => {
                let prev = entries[m - 2].l;
                let mult = ceil_positive(&(from_int(2 * k) / &eps_m)).ok_or_else(|| overflow(m))?.max(2);
                prev.checked_mul(mult).ok_or_else(|| overflow(m))?
            }
        };
        entries.push(ScheduleEntry { stage: m, epsilon: eps_m, l: l_m });
    }
    validate_schedule(epsilon, alphabet, &entries)?;
    Ok(entries)
}

fn overflow(stage: usize) -> Error {
    Error::ScheduleInvalid { stage, inequality: "l_M fits in a 64-bit index".into() }
}

fn schedule_err(stage: usize, inequality: String) -> Error {
    Error::ScheduleInvalid { stage, inequality }
}

/// Checks every schedule inequality; the error names the first violated one.
pub fn validate_schedule(epsilon: &Rational, alphabet: Alphabet, entries: &[ScheduleEntry]) -> Result<()> {
    let k = i64::from(alphabet.k());
    let two = from_int(2);
    for (i, e) in entries.iter().enumerate() {
        let m = i + 1;
        if e.stage != m {
            return Err(schedule_err(m, format!("stages numbered consecutively (found {})", e.stage)));
        }
        if !e.epsilon.is_positive() {
            return Err(schedule_err(m, format!("0 < eps_{m}")));
        }
        if e.l < 1 {
            return Err(schedule_err(m, format!("l_{m} >= 1")));
        }
        if m == 1 {
            if e.epsilon >= epsilon / &two {
                return Err(schedule_err(1, "eps_1 < eps/2".into()));
            }
            if ratio(k, e.l) > e.epsilon {
                return Err(schedule_err(1, "k/l_1 <= eps_1".into()));
            }
        } else {
            let prev = &entries[i - 1];
            if e.epsilon >= &prev.epsilon / &two {
                return Err(schedule_err(m, format!("eps_{m} < eps_{}/2", m - 1)));
            }
            if e.l % prev.l != 0 {
                return Err(schedule_err(m, format!("l_{} | l_{m}", m - 1)));
            }
            if e.l / prev.l < 2 {
                return Err(schedule_err(m, format!("2*l_{} <= l_{m}", m - 1)));
            }
            let lhs = Rational::new(BigInt::from(2 * k) * BigInt::from(prev.l), BigInt::from(e.l));
            if lhs > e.epsilon {
                return Err(schedule_err(m, format!("2k*l_{}/l_{m} <= eps_{m}", m - 1)));
            }
        }
    }
    Ok(())
}

/// One construction stage. `varpi` is the stamped block: the single symbol
/// `a_0` at index 0 for stage 1, otherwise `a^(M-1)[-l_{M-1}, l_{M-1}-1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageParams {
    pub stage: usize,
    pub epsilon: Rational,
    pub l: i64,
    pub varpi: Word,
}

impl StageParams {
    /// `l_{M-1}`, with `l_0 = 1`.
    pub fn prev_l(&self) -> i64 {
        if self.stage == 1 {
            1
        } else {
            (self.varpi.len() / 2) as i64
        }
    }

    /// Upper bound on the per-stage difference density.
    pub fn density_bound(&self, alphabet: Alphabet) -> Rational {
        let k = i64::from(alphabet.k());
        if self.stage == 1 {
            ratio(k, self.l)
        } else {
            Rational::new(BigInt::from(2 * k) * BigInt::from(self.prev_l()), BigInt::from(self.l))
        }
    }

    /// If stage `M` overwrites `n`, the offset into `varpi` it copies from.
    pub fn stamp_offset(&self, n: i64) -> Option<usize> {
        if self.stage == 1 {
            (n.rem_euclid(self.l) == 0).then_some(0)
        } else {
            let lp = self.prev_l();
            let rem = (i128::from(n) + i128::from(lp)).rem_euclid(i128::from(self.l));
            (rem < 2 * i128::from(lp)).then_some(rem as usize)
        }
    }

    /// Index in the previous stage that `varpi[offset]` was read from.
    pub fn varpi_source(&self, offset: usize) -> i64 {
        self.varpi.start() + offset as i64
    }
}

struct StageOracle {
    prev: BiSequence,
    params: StageParams,
}

impl Oracle for StageOracle {
    fn eval(&self, n: i64) -> Result<Symbol> {
        match self.params.stamp_offset(n) {
            Some(o) => Ok(self.params.varpi.symbols()[o]),
            None => self.prev.eval_at(n),
        }
    }
}

/// `a^(M)` from `a^(M-1)`.
pub fn stage_step(prev: &BiSequence, params: &StageParams) -> BiSequence {
    let desc = format!("stage{}(l={})", params.stage, params.l);
    BiSequence::new(prev.alphabet(), desc, StageOracle { prev: prev.clone(), params: params.clone() })
}

/// Fixes `varpi_M` from `a^(M-1)`.
pub fn stage_params(prev: &BiSequence, entry: &ScheduleEntry, prev_l: i64) -> Result<StageParams> {
    let varpi = if entry.stage == 1 { prev.window(0, 0)? } else { prev.window(-prev_l, prev_l - 1)? };
    Ok(StageParams { stage: entry.stage, epsilon: entry.epsilon.clone(), l: entry.l, varpi })
}

/// `b_n = a^(M)_n` for the least stage `M` whose frozen central block
/// `[-l_{M-1}, l_{M-1}-1]` contains `n`; beyond all of them, `a^(max)_n`.
struct StabilizedLimit {
    levels: Vec<(i64, BiSequence)>,
}

impl Oracle for StabilizedLimit {
    fn eval(&self, n: i64) -> Result<Symbol> {
        for (half, seq) in &self.levels {
            if -half <= n && n < *half {
                return seq.eval_at(n);
            }
        }
        self.levels.last().expect("at least one stage").1.eval_at(n)
    }
}

/// Last stage that wrote `n`, and the original index of `a` whose value `b_n` carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub index: i64,
    pub writer: Option<(usize, usize)>,
    pub origin: i64,
}

/// Stage `stage` wrote `index` from `varpi[offset]`, read from `source` in the previous stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProvenanceStep {
    pub stage: usize,
    pub index: i64,
    pub offset: usize,
    pub source: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvenanceChain {
    pub index: i64,
    pub steps: Vec<ProvenanceStep>,
    pub origin: i64,
}

/// The stage list, the intermediate sequences `a^(0) = a, ..., a^(max)`, and
/// provenance over a stored window.
#[derive(Debug, Clone)]
pub struct ConstructionTrace {
    pub input: BiSequence,
    pub epsilon: Rational,
    pub stages: Vec<StageParams>,
    sequences: Vec<BiSequence>,
    window: Option<(i64, usize)>,
    provenance: Vec<Provenance>,
}

/// Runs stages `1..=max_stage` and returns the (truncated) limit `b` and its trace.
/// Provenance is recorded for `provenance_window = (start, end)`, inclusive.
pub fn build(
    a: &BiSequence,
    epsilon: &Rational,
    max_stage: usize,
    overrides: &[ScheduleOverride],
    provenance_window: Option<(i64, i64)>,
) -> Result<(BiSequence, ConstructionTrace)> {
    let entries = schedule(epsilon, a.alphabet(), max_stage, overrides)?;
    let mut sequences = vec![a.clone()];
    let mut stages = Vec::with_capacity(entries.len());
    let mut prev_l = 1;
    for entry in &entries {
        let prev = sequences.last().expect("non-empty");
        let params = stage_params(prev, entry, prev_l)?;
        let next = stage_step(prev, &params);
        prev_l = params.l;
        stages.push(params);
        sequences.push(next);
    }

    let levels = stages.iter().zip(&sequences[1..]).map(|(p, s)| (p.prev_l(), s.clone())).collect();
    let desc = format!("toeplitz({}, eps={}, stages={max_stage})", a.description(), format_rational(epsilon));
    let b = BiSequence::new(a.alphabet(), desc, StabilizedLimit { levels });

    let mut trace = ConstructionTrace {
        input: a.clone(),
        epsilon: epsilon.clone(),
        stages,
        sequences,
        window: None,
        provenance: Vec::new(),
    };
    if let Some((lo, hi)) = provenance_window {
        trace.record_provenance(lo, hi)?;
    }
    Ok((b, trace))
}

impl ConstructionTrace {
    pub fn alphabet(&self) -> Alphabet {
        self.input.alphabet()
    }

    pub fn max_stage(&self) -> usize {
        self.stages.len()
    }

    /// `a^(m)`, with `a^(0)` the input.
    pub fn stage_sequence(&self, m: usize) -> &BiSequence {
        &self.sequences[m]
    }

    /// `l_m`, with `l_0 = 1`.
    pub fn l(&self, m: usize) -> i64 {
        if m == 0 {
            1
        } else {
            self.stages[m - 1].l
        }
    }

    pub fn window(&self) -> Option<(i64, usize)> {
        self.window
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn record_provenance(&mut self, lo: i64, hi: i64) -> Result<()> {
        if lo > hi {
            return Err(Error::InvalidRange { start: lo, end: hi });
        }
        self.provenance = (lo..=hi)
            .map(|n| {
                let chain = self.chain(n);
                Provenance { index: n, writer: chain.steps.first().map(|s| (s.stage, s.offset)), origin: chain.origin }
            })
            .collect();
        self.window = Some((lo, (hi - lo + 1) as usize));
        Ok(())
    }

    fn chain(&self, n: i64) -> ProvenanceChain {
        let mut idx = n;
        let mut steps = Vec::new();
        for params in self.stages.iter().rev() {
            if let Some(offset) = params.stamp_offset(idx) {
                let source = params.varpi_source(offset);
                steps.push(ProvenanceStep { stage: params.stage, index: idx, offset, source });
                idx = source;
            }
        }
        ProvenanceChain { index: n, steps, origin: idx }
    }

    /// Full write chain for `n`, which must lie in the stored window.
    pub fn provenance_at(&self, n: i64) -> Result<ProvenanceChain> {
        match self.window {
            Some((start, len)) if n >= start && n < start + len as i64 => Ok(self.chain(n)),
            _ => Err(Error::Precondition(format!("index {n} is outside the stored provenance window"))),
        }
    }

    /// Replays provenance (`b_n = a_origin`) over the stored window and
    /// returns the first index where it disagrees with `b`.
    pub fn replay_mismatch(&self, b: &BiSequence) -> Result<Option<i64>> {
        for p in &self.provenance {
            if self.input.eval_at(p.origin)? != b.eval_at(p.index)? {
                return Ok(Some(p.index));
            }
        }
        Ok(None)
    }

    /// Structured export with canonical key order.
    pub fn to_json(&self) -> Value {
        let stages: Vec<Value> = self.stages.iter().map(stage_json).collect();
        let provenance: Vec<Value> = self
            .provenance
            .iter()
            .map(|p| {
                json!({
                    "n": p.index,
                    "stage": p.writer.map(|w| w.0),
                    "offset": p.writer.map(|w| w.1),
                    "origin": p.origin,
                })
            })
            .collect();
        let window = match self.window {
            Some((start, len)) => json!({ "start": start, "len": len }),
            None => Value::Null,
        };
        json!({
            "epsilon": format_rational(&self.epsilon),
            "stages": stages,
            "window": window,
            "provenance": provenance,
        })
    }
}

pub fn stage_json(p: &StageParams) -> Value {
    json!({
        "M": p.stage,
        "epsilon": format_rational(&p.epsilon),
        "l": p.l,
        "varpi_start": p.varpi.start(),
        "varpi": p.varpi.symbols(),
    })
}

/// Materialized `[-n, n]`; index `i` maps to position `i - n`.
struct Window {
    half: i64,
    values: Vec<Symbol>,
}

impl Window {
    fn new(seq: &BiSequence, half: i64) -> Result<Self> {
        Ok(Window { half, values: seq.values(-half, half)? })
    }

    fn at(&self, n: i64) -> Symbol {
        self.values[(n + self.half) as usize]
    }

    fn slice(&self, lo: i64, hi: i64) -> &[Symbol] {
        &self.values[(lo + self.half) as usize..=(hi + self.half) as usize]
    }
}

/// `l_M Z ⊂ N(x, [varpi_M])` on `[-n, n]`: every stamp fully inside the
/// window carries `varpi_M`. The witness is the first mismatching index.
pub fn check_stamps(seq: &BiSequence, params: &StageParams, n: i64, name: &str) -> Result<Check> {
    let w = Window::new(seq, n)?;
    Ok(check_stamps_on(&w, params, name))
}

fn check_stamps_on(w: &Window, params: &StageParams, name: &str) -> Check {
    let n = w.half;
    let lp = if params.stage == 1 { 0 } else { params.prev_l() };
    let span = params.varpi.len() as i64;
    let r_lo = (-n + lp).div_euclid(params.l) + i64::from((-n + lp).rem_euclid(params.l) != 0);
    let r_hi = (n - span + 1 + lp).div_euclid(params.l);
    let mut stamps = 0u64;
    for r in r_lo..=r_hi {
        let lo = r * params.l - lp;
        let block = w.slice(lo, lo + span - 1);
        if let Some(j) = block.iter().zip(params.varpi.symbols()).position(|(x, y)| x != y) {
            let index = lo + j as i64;
            return Check::fail(
                name,
                json!({ "index": index, "r": r, "expected": params.varpi.symbols()[j], "found": block[j] }),
            );
        }
        stamps += 1;
    }
    Check::pass(name).with_detail(format!("{stamps} stamps of period {} checked", params.l))
}

/// Exact checks of the per-stage properties on `[-n, n]`:
///
/// * `I_M`: every stamp position carries `varpi_M` in `a^(M)` (and in `b`, as `I_M[b]`);
/// * `II_M[N=..]`: difference density between `a^(M)` and `a^(M-1)` at each
///   checkpoint is at most `2k l_{M-1}/l_M` (`k/l_1` for stage 1). A violation at a
///   checkpoint below `l_M` is flagged, at or above `l_M` it fails;
/// * `III_M`: `a^(M)` and `a^(M-1)` agree with `varpi_M` on the central block;
/// * `IV_M`: every later stage still agrees with `a^(M)` on that block.
pub fn verify_stage_properties(trace: &ConstructionTrace, b: &BiSequence, n: i64) -> Result<CheckReport> {
    let l_max = trace.l(trace.max_stage());
    if n < l_max {
        return Err(Error::Precondition(format!("window N={n} must be >= l_max={l_max}")));
    }
    let alphabet = trace.alphabet();
    let windows = trace.sequences.iter().map(|s| Window::new(s, n)).collect::<Result<Vec<_>>>()?;
    let wb = Window::new(b, n)?;
    let mut report = CheckReport::new();

    if let Err(e) = validate_schedule(
        &trace.epsilon,
        alphabet,
        &trace
            .stages
            .iter()
            .map(|p| ScheduleEntry { stage: p.stage, epsilon: p.epsilon.clone(), l: p.l })
            .collect::<Vec<_>>(),
    ) {
        report.push(Check::fail("schedule", json!({ "error": e.to_string() })));
    } else {
        report.push(Check::pass("schedule"));
    }

    for params in &trace.stages {
        let m = params.stage;
        let cur = &windows[m];
        let prev = &windows[m - 1];

        report.push(check_stamps_on(cur, params, &format!("I_{m}")));
        report.push(check_stamps_on(&wb, params, &format!("I_{m}[b]")));

        let bound = params.density_bound(alphabet);
        let mut sum = 0u64;
        let mut radius = 0i64;
        for cp in crate::checkpoints(n as u64) {
            let cp = cp as i64;
            while radius <= cp {
                sum += u64::from(cur.at(radius).abs_diff(prev.at(radius)));
                if radius > 0 {
                    sum += u64::from(cur.at(-radius).abs_diff(prev.at(-radius)));
                }
                radius += 1;
            }
            let density = Rational::new(BigInt::from(sum), BigInt::from(2 * cp + 1));
            let name = format!("II_{m}[N={cp}]");
            let detail = format!("{} <= {}", format_rational(&density), format_rational(&bound));
            let check = if density <= bound {
                Check::pass(name).with_detail(detail)
            } else {
                let status = if cp < params.l { CheckStatus::Flag } else { CheckStatus::Fail };
                Check::fail(name, json!({ "index": cp, "density": format_rational(&density) }))
                    .with_status(status)
                    .with_detail(detail)
            };
            report.push(check);
        }

        let (lo, hi) = (params.varpi.start(), params.varpi.end());
        let name = format!("III_{m}");
        let check = match (lo..=hi).find(|&i| {
            let v = params.varpi.at(i).expect("in range");
            cur.at(i) != v || prev.at(i) != v
        }) {
            None => Check::pass(name),
            Some(i) => Check::fail(name, json!({ "index": i })),
        };
        report.push(check);

        let name = format!("IV_{m}");
        let central = cur.slice(-params.prev_l(), params.prev_l() - 1);
        let bad = windows[m + 1..]
            .iter()
            .chain(std::iter::once(&wb))
            .map(|w| w.slice(-params.prev_l(), params.prev_l() - 1))
            .flat_map(|later| later.iter().zip(central).position(|(x, y)| x != y))
            .next();
        report.push(match bad {
            None => Check::pass(name),
            Some(j) => Check::fail(name, json!({ "index": -params.prev_l() + j as i64 })),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::parse_rational;

    fn k2() -> Alphabet {
        Alphabet::new(2).unwrap()
    }

    fn eps(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn brute_min_l1(k: i64, eps1: &Rational) -> i64 {
        (1..).find(|&l| ratio(k, l) <= *eps1).unwrap()
    }

    fn brute_min_lm(k: i64, prev: i64, eps_m: &Rational) -> i64 {
        (1..).map(|j| j * prev).find(|&l| Rational::new(BigInt::from(2 * k * prev), BigInt::from(l)) <= *eps_m).unwrap()
    }

    #[test]
    fn default_schedule_values() {
        let s = schedule(&eps("3/10"), k2(), 3, &[]).unwrap();
        // brute-force oracle for the minimal periods
        let l1 = brute_min_l1(2, &eps("1/10"));
        let l2 = brute_min_lm(2, l1, &eps("1/30"));
        let l3 = brute_min_lm(2, l2, &eps("1/90"));
        assert_eq!((l1, l2, l3), (20, 2400, 864000));
        assert_eq!(s[0], ScheduleEntry { stage: 1, epsilon: eps("1/10"), l: 20 });
        assert_eq!(s[1], ScheduleEntry { stage: 2, epsilon: eps("1/30"), l: 2400 });
        assert_eq!(s[2], ScheduleEntry { stage: 3, epsilon: eps("1/90"), l: 864000 });
    }

    #[test]
    fn default_eps_sum_stays_below_half() {
        let s = schedule(&eps("3/10"), k2(), 3, &[]).unwrap();
        let total: Rational = s.iter().map(|e| e.epsilon.clone()).sum();
        assert!(total < eps("3/20"));
    }

    #[test]
    fn rejects_nonpositive_epsilon_and_zero_stages() {
        assert!(schedule(&eps("0/1"), k2(), 2, &[]).is_err());
        assert!(schedule(&eps("-1/2"), k2(), 2, &[]).is_err());
        assert!(schedule(&eps("1/2"), k2(), 0, &[]).is_err());
    }

    #[test]
    fn override_violations_name_the_inequality() {
        let e = schedule(&eps("3/10"), k2(), 1, &[ScheduleOverride::l(1, 19)]).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 1, inequality: "k/l_1 <= eps_1".into() });

        let e = schedule(&eps("3/10"), k2(), 2, &[ScheduleOverride::l(2, 2410)]).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 2, inequality: "l_1 | l_2".into() });

        let e = schedule(&eps("3/10"), k2(), 2, &[ScheduleOverride::l(2, 2380)]).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 2, inequality: "2k*l_1/l_2 <= eps_2".into() });

        let o = ScheduleOverride { stage: 1, epsilon: Some(eps("3/20")), l: None };
        let e = schedule(&eps("3/10"), k2(), 1, &[o]).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 1, inequality: "eps_1 < eps/2".into() });

        let o = ScheduleOverride { stage: 2, epsilon: Some(eps("1/20")), l: None };
        let e = schedule(&eps("3/10"), k2(), 2, &[o]).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 2, inequality: "eps_2 < eps_1/2".into() });

        assert!(schedule(&eps("3/10"), k2(), 2, &[ScheduleOverride::l(3, 10)]).is_err());
    }

    #[test]
    fn blocks_must_not_overlap() {
        // eps large enough that the ratio bound allows l_2 = l_1
        let o = [ScheduleOverride::l(1, 4), ScheduleOverride::l(2, 4)];
        let e = schedule(&eps("100"), k2(), 2, &o).unwrap_err();
        assert_eq!(e, Error::ScheduleInvalid { stage: 2, inequality: "2*l_1 <= l_2".into() });
        // and the default rule never produces overlapping blocks
        let s = schedule(&eps("100"), k2(), 3, &[]).unwrap();
        assert!(s.windows(2).all(|w| w[1].l >= 2 * w[0].l));
    }

    #[test]
    fn stage_step_on_constant_is_identity() {
        let a = BiSequence::constant(k2(), 1).unwrap();
        let (_, trace) = build(&a, &eps("3/10"), 2, &[], None).unwrap();
        for m in 1..=2 {
            assert_eq!(trace.stage_sequence(m).values(-3000, 3000).unwrap(), a.values(-3000, 3000).unwrap());
        }
    }

    #[test]
    fn stage_one_hand_example() {
        let a = BiSequence::periodic(k2(), &[1, 2, 2]).unwrap();
        let (_, trace) = build(&a, &eps("10"), 1, &[ScheduleOverride::l(1, 4)], None).unwrap();
        assert_eq!(trace.stage_sequence(1).values(0, 7).unwrap(), vec![1, 2, 2, 1, 1, 2, 1, 2]);
    }

    #[test]
    fn provenance_examples() {
        let a = BiSequence::periodic(k2(), &[1, 2, 2]).unwrap();
        let o = [ScheduleOverride::l(1, 4), ScheduleOverride::l(2, 16)];
        let (b, trace) = build(&a, &eps("10"), 2, &o, Some((-16, 15))).unwrap();

        let c0 = trace.provenance_at(0).unwrap();
        assert_eq!(c0.origin, 0);
        assert_eq!(a.eval_at(c0.origin).unwrap(), a.eval_at(0).unwrap());

        let c4 = trace.provenance_at(4).unwrap();
        assert_eq!(c4.steps, vec![ProvenanceStep { stage: 1, index: 4, offset: 0, source: 0 }]);
        assert_eq!(c4.origin, 0);

        // 13 lies in the stage-2 stamp [12, 19]: offset 1 of varpi, read from -3
        let c13 = trace.provenance_at(13).unwrap();
        assert_eq!(c13.steps[0], ProvenanceStep { stage: 2, index: 13, offset: 1, source: -3 });
        assert_eq!(c13.origin, -3);

        assert!(trace.provenance_at(16).is_err());
        assert!(trace.provenance_at(-17).is_err());
        assert_eq!(trace.replay_mismatch(&b).unwrap(), None);
    }

    #[test]
    fn stabilized_limit_equals_last_stage() {
        let a = BiSequence::bernoulli(k2(), 9);
        let (b, trace) = build(&a, &eps("3/10"), 2, &[], None).unwrap();
        assert_eq!(b.values(-6000, 6000).unwrap(), trace.stage_sequence(2).values(-6000, 6000).unwrap());
        assert_eq!(b.eval_at(0).unwrap(), a.eval_at(0).unwrap());
    }

    #[test]
    fn verify_requires_large_window() {
        let a = BiSequence::bernoulli(k2(), 1);
        let (b, trace) = build(&a, &eps("3/10"), 2, &[], None).unwrap();
        assert!(matches!(verify_stage_properties(&trace, &b, 2399), Err(Error::Precondition(_))));
    }

    #[test]
    fn density_at_eight_for_hand_instance() {
        let a = BiSequence::periodic(k2(), &[1, 2, 2]).unwrap();
        let (b, trace) = build(&a, &eps("10"), 1, &[ScheduleOverride::l(1, 4)], None).unwrap();
        let report = verify_stage_properties(&trace, &b, 8).unwrap();
        // indices -8, -4, 4, 8 change from 2 to 1
        let c = report.get("II_1[N=8]").unwrap();
        assert_eq!(c.detail.as_deref(), Some("4/17 <= 1/2"));
        assert!(report.all_passed());
    }

    #[test]
    fn constant_input_passes_with_zero_densities() {
        let a = BiSequence::constant(k2(), 2).unwrap();
        let (b, trace) = build(&a, &eps("3/10"), 2, &[], None).unwrap();
        let report = verify_stage_properties(&trace, &b, 2400).unwrap();
        assert!(report.all_passed());
        assert_eq!(report.flags().count(), 0);
        for c in report.checks.iter().filter(|c| c.name.starts_with("II_")) {
            assert!(c.detail.as_deref().unwrap().starts_with("0/1 <="), "{c:?}");
        }
    }

    #[test]
    fn corrupted_stamp_is_caught() {
        let a = BiSequence::bernoulli(k2(), 3);
        let (b, trace) = build(&a, &eps("3/10"), 2, &[], None).unwrap();
        let p = &trace.stages[1];
        // r = 1 stamp covers [2380, 2419]
        let n = 2400 + 5;
        let flipped = 3 - b.eval_at(n).unwrap();
        let bad = b.with_symbol(n, flipped).unwrap();
        let c = check_stamps(&bad, p, 2400 * 2, "I_2").unwrap();
        assert_eq!(c.status, CheckStatus::Fail);
        assert_eq!(c.witness_index(), Some(n));
    }

    #[test]
    fn trace_json_layout() {
        let a = BiSequence::periodic(k2(), &[1, 2, 2]).unwrap();
        let o = [ScheduleOverride::l(1, 4), ScheduleOverride::l(2, 16)];
        let (_, trace) = build(&a, &eps("10"), 2, &o, Some((-1, 1))).unwrap();
        let text = serde_json::to_string(&trace.to_json()).unwrap();
        assert_eq!(
            text,
            concat!(
                r#"{"epsilon":"10/1","provenance":["#,
                r#"{"n":-1,"offset":3,"origin":-1,"stage":2},"#,
                r#"{"n":0,"offset":4,"origin":0,"stage":2},"#,
                r#"{"n":1,"offset":5,"origin":1,"stage":2}],"#,
                r#""stages":[{"M":1,"epsilon":"10/3","l":4,"varpi":[1],"varpi_start":0},"#,
                r#"{"M":2,"epsilon":"10/9","l":16,"varpi":[1,1,2,2,1,2,2,1],"varpi_start":-4}],"#,
                r#""window":{"len":3,"start":-1}}"#
            )
        );
    }
}
