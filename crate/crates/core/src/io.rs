//! Plain-text design and parallelism files.
//!
//! ```text
//! qsteiner-design v1
//! q=2 t=2 k=3 n=7 m=1
//! block 45 0 -
//! block 336 1 1
//! ```
//!
//! ```text
//! qsteiner-parallelism v1
//! q=2 n=4
//! spread
//! 1000;0100
//! ...
//! ```
//!
//! Rows are RREF basis rows written digit by digit, separated by `;`. Digits
//! are separated by spaces when `q > 9`. Blocks are written in canonical order.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::designs::{DesignError, DesignMultiset, DesignParams, Parallelism, Spread};
use crate::field::Field;
use crate::subspace::{format_rows, Subspace};

pub const DESIGN_HEADER: &str = "qsteiner-design v1";
pub const PARALLELISM_HEADER: &str = "qsteiner-parallelism v1";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: DesignError },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

pub fn write_design(design: &DesignMultiset) -> String {
    let DesignParams { q, t, k, n, m } = design.params();
    let mut out = format!("{DESIGN_HEADER}\nq={q} t={t} k={k} n={n} m={m}\n");
    for (b, mult) in design.blocks() {
        writeln!(out, "block {mult} {} {}", b.dim(), format_rows(b.field(), b.ambient(), b.rows()))
            .expect("writing to a String");
    }
    out
}

/// Non-empty lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_keys(line: usize, s: &str, keys: &[&str]) -> Result<Vec<u32>, FormatError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != keys.len() {
        return Err(syntax(line, format!("expected {}", keys.iter().map(|k| format!("{k}=..")).collect::<Vec<_>>().join(" "))));
    }
    parts
        .iter()
        .zip(keys)
        .map(|(part, key)| {
            let value = part
                .strip_prefix(key)
                .and_then(|r| r.strip_prefix('='))
                .ok_or_else(|| syntax(line, format!("expected {key}=<value>, got {part:?}")))?;
            value.parse().map_err(|_| syntax(line, format!("bad value for {key}: {value:?}")))
        })
        .collect()
}

/// Parses the row syntax into a canonical subspace of `F_q^m`.
pub fn parse_rows(field: Field, m: usize, s: &str) -> Result<Subspace, String> {
    let s = s.trim();
    if s == "-" {
        return Subspace::null(field, m).map_err(|e| e.to_string());
    }
    let mut packed = Vec::new();
    for row in s.split(';') {
        let digits: Vec<u8> = if field.order() > 9 {
            row.split_whitespace()
                .map(|d| d.parse::<u8>().map_err(|_| format!("bad digit {d:?}")))
                .collect::<Result<_, _>>()?
        } else {
            row.trim()
                .chars()
                .map(|c| {
                    c.to_digit(10).map(|d| d as u8).ok_or_else(|| format!("bad digit {c:?}"))
                })
                .collect::<Result<_, _>>()?
        };
        if digits.len() != m {
            return Err(format!("row {row:?} has {} entries, expected {m}", digits.len()));
        }
        if let Some(&x) = digits.iter().find(|&&x| x as u32 >= field.order()) {
            return Err(format!("{x} is not an element of {field}"));
        }
        packed.push(field.pack(&digits));
    }
    Subspace::from_rref_rows(field, m, &packed).map_err(|e| e.to_string())
}

pub fn parse_design(text: &str) -> Result<DesignMultiset, FormatError> {
    let mut it = lines(text);
    match it.next() {
        Some((_, h)) if h.trim() == DESIGN_HEADER => {}
        Some((line, h)) => return Err(syntax(line, format!("expected {DESIGN_HEADER:?}, got {h:?}"))),
        None => return Err(syntax(0, "empty file")),
    }
    let (line, params) = it.next().ok_or_else(|| syntax(1, "missing parameter line"))?;
    let v = parse_keys(line, params, &["q", "t", "k", "n", "m"])?;
    let params = DesignParams::new(v[0], v[1], v[2], v[3], v[4]);
    let mut design =
        DesignMultiset::new(params).map_err(|source| FormatError::Invalid { line, source })?;
    let field = design.field();
    for (line, text) in it {
        let mut parts = text.splitn(4, ' ');
        if parts.next() != Some("block") {
            return Err(syntax(line, format!("expected a block line, got {text:?}")));
        }
        let (Some(mult), Some(dim), Some(rows)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(syntax(line, "expected block <multiplicity> <dim> <rows>"));
        };
        let mult: u64 = mult.parse().map_err(|_| syntax(line, format!("bad multiplicity {mult:?}")))?;
        let dim: usize = dim.parse().map_err(|_| syntax(line, format!("bad dimension {dim:?}")))?;
        let block = parse_rows(field, params.m as usize, rows).map_err(|e| syntax(line, e))?;
        if block.dim() != dim {
            return Err(syntax(line, format!("declared dimension {dim} but rows span {}", block.dim())));
        }
        if design.multiplicity(&block) != 0 {
            return Err(syntax(line, format!("duplicate block {block}")));
        }
        design.add(block, mult).map_err(|source| FormatError::Invalid { line, source })?;
    }
    Ok(design)
}

pub fn write_parallelism(par: &Parallelism) -> String {
    let mut out = format!("{PARALLELISM_HEADER}\nq={} n={}\n", par.field().order(), par.ambient());
    for s in par.spreads() {
        out.push_str("spread\n");
        for l in s.lines() {
            out.push_str(&format_rows(l.field(), l.ambient(), l.rows()));
            out.push('\n');
        }
    }
    out
}

pub fn parse_parallelism(text: &str) -> Result<Parallelism, FormatError> {
    let mut it = lines(text);
    match it.next() {
        Some((_, h)) if h.trim() == PARALLELISM_HEADER => {}
        Some((line, h)) => return Err(syntax(line, format!("expected {PARALLELISM_HEADER:?}, got {h:?}"))),
        None => return Err(syntax(0, "empty file")),
    }
    let (line, params) = it.next().ok_or_else(|| syntax(1, "missing parameter line"))?;
    let v = parse_keys(line, params, &["q", "n"])?;
    let field = Field::new(v[0]).map_err(|e| syntax(line, e.to_string()))?;
    let n = v[1];
    let mut groups: Vec<(usize, BTreeSet<Subspace>)> = Vec::new();
    for (line, text) in it {
        if text.trim() == "spread" {
            groups.push((line, BTreeSet::new()));
            continue;
        }
        let Some((_, group)) = groups.last_mut() else {
            return Err(syntax(line, "line before the first spread marker"));
        };
        let l = parse_rows(field, n as usize, text).map_err(|e| syntax(line, e))?;
        if l.dim() != 2 {
            return Err(syntax(line, format!("{l} is not a 2-subspace")));
        }
        if !group.insert(l) {
            return Err(syntax(line, "line repeated within a spread"));
        }
    }
    let spreads = groups
        .into_iter()
        .map(|(line, g)| Spread::new(field, n, g).map_err(|source| FormatError::Invalid { line, source }))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Parallelism::new(field, n, spreads)?)
}

pub fn read_design_file(path: impl AsRef<Path>) -> Result<DesignMultiset, FormatError> {
    parse_design(&std::fs::read_to_string(path)?)
}

pub fn write_design_file(path: impl AsRef<Path>, design: &DesignMultiset) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_design(design))?)
}

pub fn read_parallelism_file(path: impl AsRef<Path>) -> Result<Parallelism, FormatError> {
    parse_parallelism(&std::fs::read_to_string(path)?)
}

pub fn write_parallelism_file(path: impl AsRef<Path>, par: &Parallelism) -> Result<(), FormatError> {
    Ok(std::fs::write(path, write_parallelism(par))?)
}
