use std::path::Path;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{read_seqw, Alphabet, BiSequence, Oracle, Symbol};
use crate::error::{Error, Result};

pub struct Constant {
    symbol: Symbol,
}

impl Constant {
    pub fn new(alphabet: Alphabet, symbol: Symbol) -> Result<Self> {
        Ok(Constant { symbol: alphabet.check(symbol)? })
    }
}

impl Oracle for Constant {
    fn eval(&self, _n: i64) -> Result<Symbol> {
        Ok(self.symbol)
    }
}

/// The word repeated over Z, with `word[0]` at index 0.
pub struct Periodic {
    word: Vec<Symbol>,
}

impl Periodic {
    pub fn new(alphabet: Alphabet, word: Vec<Symbol>) -> Result<Self> {
        if word.is_empty() {
            return Err(Error::ParameterOutOfRange("periodic word must be non-empty".into()));
        }
        for &s in &word {
            alphabet.check(s)?;
        }
        Ok(Periodic { word })
    }
}

impl Oracle for Periodic {
    fn eval(&self, n: i64) -> Result<Symbol> {
        let p = self.word.len() as i64;
        Ok(self.word[n.rem_euclid(p) as usize])
    }
}

/// Uniform i.i.d. symbols. The symbol at `n` is read from a ChaCha8 keystream
/// at a word position determined by `n` alone, so evaluation order is irrelevant.
pub struct Bernoulli {
    rng: ChaCha8Rng,
    k: u16,
}

impl Bernoulli {
    pub fn new(alphabet: Alphabet, seed: u64) -> Self {
        Bernoulli { rng: ChaCha8Rng::seed_from_u64(seed), k: alphabet.k() }
    }
}

impl Oracle for Bernoulli {
    fn eval(&self, n: i64) -> Result<Symbol> {
        // i64 -> [0, 2^64) order-preserving, two 32-bit words per index
        let slot = (n as i128 - i64::MIN as i128) as u128;
        let mut rng = self.rng.clone();
        rng.set_word_pos(slot * 2);
        let x = rng.next_u64();
        let s = ((x as u128 * self.k as u128) >> 64) as u16;
        Ok(s + 1)
    }
}

/// Finite window loaded from a SEQW file. Partial: indices outside the stored
/// range are out of domain.
pub struct FileWindow {
    start: i64,
    symbols: Vec<Symbol>,
    path: String,
}

impl FileWindow {
    pub fn load(alphabet: Alphabet, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let w = read_seqw(&text)?;
        if w.k != alphabet.k() {
            return Err(Error::ParameterOutOfRange(format!(
                "file {} declares k={} but the alphabet has k={}",
                path.display(),
                w.k,
                alphabet.k()
            )));
        }
        Ok(FileWindow { start: w.start, symbols: w.symbols, path: path.display().to_string() })
    }
}

impl Oracle for FileWindow {
    fn eval(&self, n: i64) -> Result<Symbol> {
        let off = n.checked_sub(self.start).filter(|&o| o >= 0 && (o as usize) < self.symbols.len());
        match off {
            Some(o) => Ok(self.symbols[o as usize]),
            None => Err(Error::OutOfDomain { index: n, source_desc: format!("file:{}", self.path) }),
        }
    }
}

/// Parses a generator description:
///
/// ```text
/// periodic:<s1>,<s2>,...  |  constant:<s>  |  bernoulli:seed=<u64>  |  file:<path>
/// ```
pub fn parse_source_spec(spec: &str, alphabet: Alphabet) -> Result<BiSequence> {
    if !spec.is_ascii() {
        let pos = spec.char_indices().find(|(_, c)| !c.is_ascii()).map(|(i, _)| i).unwrap_or(0);
        return Err(syntax(pos, "non-ASCII character"));
    }
    let colon = spec.find(':').ok_or_else(|| syntax(spec.len(), "expected `:` after generator name"))?;
    let name = &spec[..colon];
    let body = &spec[colon + 1..];
    let body_pos = colon + 1;
    if name.is_empty() {
        return Err(syntax(0, "missing generator name"));
    }
    let seq = match name {
        "periodic" => {
            let word = parse_symbol_list(body, body_pos)?;
            BiSequence::new(alphabet, spec, Periodic::new(alphabet, word)?)
        }
        "constant" => {
            let s = parse_number::<Symbol>(body, body_pos)?;
            BiSequence::new(alphabet, spec, Constant::new(alphabet, s)?)
        }
        "bernoulli" => {
            let value = body.strip_prefix("seed=").ok_or_else(|| syntax(body_pos, "expected `seed=<u64>`"))?;
            let seed = parse_number::<u64>(value, body_pos + 5)?;
            BiSequence::new(alphabet, spec, Bernoulli::new(alphabet, seed))
        }
        "file" => {
            if body.is_empty() {
                return Err(syntax(body_pos, "expected a file path"));
            }
            BiSequence::new(alphabet, spec, FileWindow::load(alphabet, Path::new(body))?)
        }
        other => return Err(Error::UnknownGenerator(other.to_string())),
    };
    Ok(seq)
}

fn syntax(position: usize, message: &str) -> Error {
    Error::Syntax { position, message: message.to_string() }
}

fn parse_number<T: std::str::FromStr>(text: &str, pos: usize) -> Result<T> {
    if text.is_empty() {
        return Err(syntax(pos, "expected a number"));
    }
    if let Some(i) = text.bytes().position(|b| !b.is_ascii_digit()) {
        return Err(syntax(pos + i, "expected a digit"));
    }
    text.parse::<T>().map_err(|_| Error::ParameterOutOfRange(format!("number `{text}` at position {pos} is too large")))
}

fn parse_symbol_list(body: &str, pos: usize) -> Result<Vec<Symbol>> {
    let mut out = Vec::new();
    let mut offset = pos;
    for item in body.split(',') {
        out.push(parse_number::<Symbol>(item, offset)?);
        offset += item.len() + 1;
    }
    Ok(out)
}
