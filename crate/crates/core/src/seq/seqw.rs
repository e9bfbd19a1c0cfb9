//! SEQW v1: a one-line header `SEQW v1 k=<k> start=<s> len=<L>` followed by a
//! line of `L` space-separated symbols, newline-terminated ASCII.

use super::{symbol_string, Symbol};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqwWindow {
    pub k: u16,
    pub start: i64,
    pub symbols: Vec<Symbol>,
}

pub fn write_seqw(k: u16, start: i64, symbols: &[Symbol]) -> String {
    format!("SEQW v1 k={k} start={start} len={}\n{}\n", symbols.len(), symbol_string(symbols))
}

pub fn read_seqw(text: &str) -> Result<SeqwWindow> {
    let bad = |m: &str| Error::Format(m.to_string());
    let (header, rest) = text.split_once('\n').ok_or_else(|| bad("missing header line"))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 5 || fields[0] != "SEQW" || fields[1] != "v1" {
        return Err(bad("header must be `SEQW v1 k=<k> start=<s> len=<L>`"));
    }
    let field = |i: usize, key: &str| -> Result<&str> {
        fields[i]
            .strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .ok_or_else(|| Error::Format(format!("expected `{key}=` in header")))
    };
    let k: u16 = field(2, "k")?.parse().map_err(|_| bad("bad k"))?;
    let start: i64 = field(3, "start")?.parse().map_err(|_| bad("bad start"))?;
    let len: usize = field(4, "len")?.parse().map_err(|_| bad("bad len"))?;
    if k < 2 {
        return Err(bad("k must be >= 2"));
    }
    if len == 0 {
        return Err(bad("len must be >= 1"));
    }
    let body = rest.strip_suffix('\n').ok_or_else(|| bad("symbol line must be newline-terminated"))?;
    if body.contains('\n') {
        return Err(bad("trailing data after symbol line"));
    }
    let symbols = body
        .split(' ')
        .map(|t| match t.parse::<Symbol>() {
            Ok(s) if (1..=k).contains(&s) => Ok(s),
            _ => Err(Error::Format(format!("symbol `{t}` is not in 1..={k}"))),
        })
        .collect::<Result<Vec<_>>>()?;
    if symbols.len() != len {
        return Err(Error::Format(format!("header says len={len} but {} symbols follow", symbols.len())));
    }
    start.checked_add(len as i64 - 1).ok_or_else(|| bad("window end overflows"))?;
    Ok(SeqwWindow { k, start, symbols })
}
