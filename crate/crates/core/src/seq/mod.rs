//! Alphabets, finite words and bi-infinite sequence oracles.
//!
//! A [`BiSequence`] is a pure function from every integer index to a symbol
//! in `1..=k`. Nothing is stored unless a generator is explicitly backed by
//! finite data (a SEQW window), in which case indices outside the stored
//! range report [`Error::OutOfDomain`] instead of being extended.

mod seqw;
mod source;

use std::fmt;
use std::sync::Arc;

pub use seqw::{read_seqw, write_seqw, SeqwWindow};
pub use source::{parse_source_spec, Bernoulli, Constant, FileWindow, Periodic};

use crate::error::{Error, Result};

/// Symbols are their integer values `1..=k`.
pub type Symbol = u16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alphabet {
    k: u16,
}

impl Alphabet {
    pub fn new(k: u16) -> Result<Self> {
        if k < 2 {
            return Err(Error::ParameterOutOfRange(format!("alphabet size k={k} must be >= 2")));
        }
        Ok(Alphabet { k })
    }

    pub fn k(&self) -> u16 {
        self.k
    }

    pub fn contains(&self, s: Symbol) -> bool {
        (1..=self.k).contains(&s)
    }

    pub fn check(&self, s: Symbol) -> Result<Symbol> {
        if self.contains(s) {
            Ok(s)
        } else {
            Err(Error::ParameterOutOfRange(format!("symbol {s} is outside 1..={}", self.k)))
        }
    }
}

/// A finite block `x[start..start+len-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    start: i64,
    symbols: Vec<Symbol>,
}

impl Word {
    pub fn new(start: i64, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Precondition("a word has length >= 1".into()));
        }
        Ok(Word { start, symbols })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last index covered (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.symbols.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.symbols
    }

    pub fn at(&self, n: i64) -> Option<Symbol> {
        if n < self.start || n > self.end() {
            None
        } else {
            Some(self.symbols[(n - self.start) as usize])
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", symbol_string(&self.symbols))
    }
}

/// Space-separated symbol string, the canonical textual form of a word.
pub fn symbol_string(symbols: &[Symbol]) -> String {
    let mut out = String::with_capacity(symbols.len() * 2);
    for (i, s) in symbols.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&s.to_string());
    }
    out
}

/// Cylinder `{x : x[start..=end] = word}`; the word's start is the anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CylinderSpec {
    pub word: Word,
}

impl CylinderSpec {
    pub fn new(word: Word) -> Self {
        CylinderSpec { word }
    }

    pub fn contains(&self, seq: &BiSequence) -> Result<bool> {
        let w = seq.values(self.word.start(), self.word.end())?;
        Ok(w == self.word.symbols())
    }
}

/// Random-access symbol source. Implementations must be pure.
pub trait Oracle: Send + Sync {
    fn eval(&self, n: i64) -> Result<Symbol>;
}

impl<F> Oracle for F
where
    F: Fn(i64) -> Result<Symbol> + Send + Sync,
{
    fn eval(&self, n: i64) -> Result<Symbol> {
        self(n)
    }
}

#[derive(Clone)]
pub struct BiSequence {
    alphabet: Alphabet,
    oracle: Arc<dyn Oracle>,
    description: String,
}

impl fmt::Debug for BiSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BiSequence").field("k", &self.alphabet.k()).field("description", &self.description).finish()
    }
}

impl BiSequence {
    pub fn new(alphabet: Alphabet, description: impl Into<String>, oracle: impl Oracle + 'static) -> Self {
        BiSequence { alphabet, oracle: Arc::new(oracle), description: description.into() }
    }

    pub fn constant(alphabet: Alphabet, s: Symbol) -> Result<Self> {
        Ok(Self::new(alphabet, format!("constant:{s}"), Constant::new(alphabet, s)?))
    }

    pub fn periodic(alphabet: Alphabet, word: &[Symbol]) -> Result<Self> {
        let desc = format!("periodic:{}", word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","));
        Ok(Self::new(alphabet, desc, Periodic::new(alphabet, word.to_vec())?))
    }

    pub fn bernoulli(alphabet: Alphabet, seed: u64) -> Self {
        Self::new(alphabet, format!("bernoulli:seed={seed}"), Bernoulli::new(alphabet, seed))
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn eval_at(&self, n: i64) -> Result<Symbol> {
        let s = self.oracle.eval(n)?;
        if !self.alphabet.contains(s) {
            return Err(Error::ParameterOutOfRange(format!(
                "{} produced symbol {s} at index {n}, outside 1..={}",
                self.description,
                self.alphabet.k()
            )));
        }
        Ok(s)
    }

    /// Raw symbols on `[a, b]`.
    pub fn values(&self, a: i64, b: i64) -> Result<Vec<Symbol>> {
        if a > b {
            return Err(Error::InvalidRange { start: a, end: b });
        }
        (a..=b).map(|n| self.eval_at(n)).collect()
    }

    pub fn window(&self, a: i64, b: i64) -> Result<Word> {
        Word::new(a, self.values(a, b)?)
    }

    /// `shift(t)` evaluates `n` to `self[n + t]`.
    pub fn shift(&self, t: i64) -> BiSequence {
        let inner = self.clone();
        let desc = format!("shift({}, {t})", self.description);
        BiSequence::new(self.alphabet, desc, move |n: i64| {
            let m = n
                .checked_add(t)
                .ok_or_else(|| Error::OutOfDomain { index: n, source_desc: inner.description.clone() })?;
            inner.eval_at(m)
        })
    }

    /// Copy of `self` with the symbol at `n` replaced.
    pub fn with_symbol(&self, n: i64, s: Symbol) -> Result<BiSequence> {
        self.alphabet.check(s)?;
        let inner = self.clone();
        let desc = format!("patch({}, {n}={s})", self.description);
        Ok(BiSequence::new(self.alphabet, desc, move |m: i64| if m == n { Ok(s) } else { inner.eval_at(m) }))
    }
}
