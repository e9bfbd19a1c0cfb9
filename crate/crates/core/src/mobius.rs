//! Mobius function, Mertens sums and correlation prefix sums
//! `S(N) = (1/N) * sum_{n=1}^{N} mu(n) xi(n)`.

use num_integer::Integer;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::check::Check;
use crate::error::{Error, Result};
use crate::seq::BiSequence;

/// `mu(1..=N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MobiusTable {
    // values[0] is unused
    values: Vec<i8>,
}

/// Linear sieve: each composite is crossed out once, by its least prime factor.
pub fn mobius_sieve(n: usize) -> Result<MobiusTable> {
    if n == 0 {
        return Err(Error::EmptyRange("Mobius table needs N >= 1".into()));
    }
    let mut mu = vec![0i8; n + 1];
    let mut composite = vec![false; n + 1];
    let mut primes: Vec<usize> = Vec::new();
    mu[1] = 1;
    for i in 2..=n {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > n {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    Ok(MobiusTable { values: mu })
}

/// `mu(n)` by trial division.
pub fn mobius_trial_division(mut n: u64) -> i8 {
    assert!(n >= 1);
    let mut sign = 1i8;
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            n /= d;
            if n.is_multiple_of(d) {
                return 0;
            }
            sign = -sign;
        }
        d += 1;
    }
    if n > 1 {
        sign = -sign;
    }
    sign
}

impl MobiusTable {
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `mu(n)` for `1 <= n <= N`.
    pub fn mu(&self, n: usize) -> i8 {
        assert!(n >= 1 && n <= self.len(), "n={n} outside 1..={}", self.len());
        self.values[n]
    }

    pub fn values(&self) -> &[i8] {
        &self.values[1..]
    }

    fn check_range(&self, n: usize) -> Result<()> {
        if n > self.len() {
            return Err(Error::Precondition(format!("N'={n} exceeds table size {}", self.len())));
        }
        Ok(())
    }

    /// `M(N') = sum_{n <= N'} mu(n)`.
    pub fn mertens(&self, n: usize) -> Result<i64> {
        self.check_range(n)?;
        Ok(self.values[1..=n].iter().map(|&v| i64::from(v)).sum())
    }

    pub fn squarefree_count(&self, n: usize) -> Result<usize> {
        self.check_range(n)?;
        Ok(self.values[1..=n].iter().filter(|&&v| v != 0).count())
    }

    /// One value per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * 3);
        for v in self.values() {
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

/// Compares the sieve with trial division on `1..=limit`.
pub fn check_against_trial_division(table: &MobiusTable, limit: usize) -> Check {
    let limit = limit.min(table.len());
    let name = format!("sieve_vs_trial_division[n<={limit}]");
    match (1..=limit).find(|&n| table.mu(n) != mobius_trial_division(n as u64)) {
        None => Check::pass(name),
        Some(n) => Check::fail(name, json!({ "index": n, "sieve": table.mu(n) })),
    }
}

/// `mu(mn) = mu(m) mu(n)` for `pairs` random coprime pairs with `mn <= N`.
pub fn check_multiplicativity(table: &MobiusTable, pairs: usize, seed: u64) -> Check {
    let n = table.len() as u64;
    let name = format!("multiplicativity[{pairs} pairs]");
    if n < 6 {
        return Check::pass(name).with_detail("table too small to sample");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut below = |bound: u64| 1 + ((rng.next_u64() as u128 * bound as u128) >> 64) as u64;
    let mut done = 0;
    while done < pairs {
        let a = below(n / 2);
        let b = below(n / a);
        if a.gcd(&b) != 1 {
            continue;
        }
        let (a, b) = (a as usize, b as usize);
        if table.mu(a * b) != table.mu(a) * table.mu(b) {
            return Check::fail(name, json!({ "m": a, "n": b }));
        }
        done += 1;
    }
    Check::pass(name)
}

/// Bounded real observable `xi(n)` read at `n >= 1`.
pub trait Observable {
    fn describe(&self) -> String;
    fn value(&self, n: u64) -> Result<f64>;
    /// `max |xi|`.
    fn bound(&self) -> f64;
}

/// `xi(n) = f(x_n)` with `f` a recoding of symbols `1..=k` to reals
/// (identity by default).
pub struct SequenceObservable {
    seq: BiSequence,
    recoding: Vec<f64>,
    custom: bool,
}

impl SequenceObservable {
    pub fn identity(seq: BiSequence) -> Self {
        let recoding = (1..=seq.alphabet().k()).map(f64::from).collect();
        SequenceObservable { seq, recoding, custom: false }
    }

    pub fn recoded(seq: BiSequence, recoding: Vec<f64>) -> Result<Self> {
        let k = usize::from(seq.alphabet().k());
        if recoding.len() != k {
            return Err(Error::ParameterOutOfRange(format!("recoding has {} values but k={k}", recoding.len())));
        }
        if recoding.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterOutOfRange("recoding values must be finite".into()));
        }
        Ok(SequenceObservable { seq, recoding, custom: true })
    }
}

impl Observable for SequenceObservable {
    fn describe(&self) -> String {
        if self.custom {
            let map: Vec<String> = self.recoding.iter().enumerate().map(|(i, v)| format!("{}->{v}", i + 1)).collect();
            format!("{} recoded {{{}}}", self.seq.description(), map.join(", "))
        } else {
            self.seq.description().to_string()
        }
    }

    fn value(&self, n: u64) -> Result<f64> {
        let idx = i64::try_from(n)
            .map_err(|_| Error::OutOfDomain { index: i64::MAX, source_desc: self.seq.description().to_string() })?;
        let s = self.seq.eval_at(idx)?;
        Ok(self.recoding[usize::from(s) - 1])
    }

    fn bound(&self) -> f64 {
        self.recoding.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `xi = mu` itself.
impl Observable for MobiusTable {
    fn describe(&self) -> String {
        "mobius".into()
    }

    fn value(&self, n: u64) -> Result<f64> {
        self.check_range(n as usize)?;
        Ok(f64::from(self.values[n as usize]))
    }

    fn bound(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub observable: String,
    pub n: u64,
    pub max_abs_xi: f64,
    /// `(N', S(N'))` at the log-spaced checkpoints.
    pub checkpoints: Vec<(u64, f64)>,
}

impl CorrelationReport {
    pub fn final_value(&self) -> f64 {
        self.checkpoints.last().map(|c| c.1).unwrap_or(0.0)
    }
}

/// Prefix sums are accumulated in index order, so the result is reproducible.
pub fn correlate(table: &MobiusTable, xi: &dyn Observable, n: u64) -> Result<CorrelationReport> {
    if n == 0 {
        return Err(Error::EmptyRange("correlation needs N >= 1".into()));
    }
    table.check_range(n as usize)?;
    let marks = crate::checkpoints(n);
    let mut next = marks.iter().peekable();
    let mut sum = 0.0f64;
    let mut out = Vec::with_capacity(marks.len());
    for i in 1..=n {
        let mu = table.values[i as usize];
        if mu != 0 {
            sum += f64::from(mu) * xi.value(i)?;
        }
        if next.peek() == Some(&&i) {
            out.push((i, sum / i as f64));
            next.next();
        }
    }
    Ok(CorrelationReport { observable: xi.describe(), n, max_abs_xi: xi.bound(), checkpoints: out })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::Alphabet;

    #[test]
    fn sieve_examples() {
        let t = mobius_sieve(100).unwrap();
        assert_eq!(t.mu(1), 1);
        assert_eq!(t.mu(12), 0);
        assert_eq!(t.mu(30), -1);
        assert_eq!(t.mu(2), -1);
        assert_eq!(t.mu(6), 1);
        assert_eq!(t.mu(97), -1);
        assert!(matches!(mobius_sieve(0), Err(Error::EmptyRange(_))));
    }

    #[test]
    fn sieve_matches_trial_division() {
        let t = mobius_sieve(10_000).unwrap();
        assert!(check_against_trial_division(&t, 10_000).passed());
    }

    #[test]
    fn mertens_examples() {
        let t = mobius_sieve(10).unwrap();
        // brute force: 1 -1 -1 0 -1 1 -1 0 0 1
        let brute: i64 = (1..=10).map(|n| i64::from(mobius_trial_division(n))).sum();
        assert_eq!(brute, -1);
        assert_eq!(t.mertens(1).unwrap(), 1);
        assert_eq!(t.mertens(2).unwrap(), 0);
        assert_eq!(t.mertens(10).unwrap(), -1);
        assert!(t.mertens(11).is_err());
    }

    #[test]
    fn multiplicativity_spot_check() {
        let t = mobius_sieve(100_000).unwrap();
        assert!(check_multiplicativity(&t, 1000, 7).passed());
    }

    #[test]
    fn constant_observable_gives_mertens() {
        let t = mobius_sieve(1000).unwrap();
        let one = BiSequence::constant(Alphabet::new(2).unwrap(), 1).unwrap();
        let r = correlate(&t, &SequenceObservable::identity(one), 1000).unwrap();
        let ns: Vec<u64> = r.checkpoints.iter().map(|c| c.0).collect();
        assert_eq!(ns, vec![1, 10, 100, 1000]);
        assert_eq!(r.checkpoints[1].1, -0.1);
        assert_eq!(r.final_value(), t.mertens(1000).unwrap() as f64 / 1000.0);
    }

    #[test]
    fn recoding_is_validated() {
        let s = BiSequence::constant(Alphabet::new(2).unwrap(), 1).unwrap();
        assert!(SequenceObservable::recoded(s.clone(), vec![1.0]).is_err());
        assert!(SequenceObservable::recoded(s.clone(), vec![1.0, f64::NAN]).is_err());
        let o = SequenceObservable::recoded(s, vec![1.0, -1.0]).unwrap();
        assert_eq!(o.bound(), 1.0);
        assert_eq!(o.value(5).unwrap(), 1.0);
    }

    #[test]
    fn table_text() {
        assert_eq!(mobius_sieve(5).unwrap().to_text(), "1\n-1\n-1\n0\n-1\n");
    }
}
