//! Plain-text series archive.
//!
//! ```text
//! conformal-series 1
//! mode 2
//! order 3
//! provisional 1
//! omega_0 4
//! 1 2 1
//! omega_1 3/2
//! ...
//! ```

use super::SeriesSolution;
use crate::algebra::{format_rational, parse_rational, Rational, TrigPoly};
use crate::error::{Error, Result};
use std::io::{BufRead, Write};

const MAGIC: &str = "conformal-series";
const VERSION: u32 = 1;

pub fn write_archive<W: Write>(sol: &SeriesSolution, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC} {VERSION}")?;
    writeln!(out, "mode {}", sol.mode())?;
    writeln!(out, "order {}", sol.n_max())?;
    writeln!(out, "provisional {}", u8::from(sol.provisional()))?;
    for (n, (om, u)) in sol.omega_sq().iter().zip(sol.orders()).enumerate() {
        writeln!(out, "omega_{n} {}", format_rational(om))?;
        for line in u.to_lines() {
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Archive { line, msg: msg.into() }
}

fn header_value(lines: &[(usize, String)], i: usize, key: &str) -> Result<u64> {
    let (no, text) = lines.get(i).ok_or_else(|| err(i + 1, "truncated header"))?;
    let mut parts = text.split_whitespace();
    if parts.next() != Some(key) {
        return Err(err(*no, format!("expected `{key}`")));
    }
    parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| err(*no, format!("bad value for `{key}`")))
}

pub fn read_archive<R: BufRead>(input: R) -> Result<SeriesSolution> {
    let mut lines = Vec::new();
    for (i, l) in input.lines().enumerate() {
        let l = l?;
        if !l.trim().is_empty() {
            lines.push((i + 1, l.trim().to_string()));
        }
    }
    let version = header_value(&lines, 0, MAGIC)?;
    if version != VERSION as u64 {
        return Err(err(1, format!("unsupported archive version {version}")));
    }
    let mode = header_value(&lines, 1, "mode")? as u32;
    let order = header_value(&lines, 2, "order")? as usize;
    header_value(&lines, 3, "provisional")?;
    if mode == 0 {
        return Err(err(lines[1].0, "mode must be at least 1"));
    }

    let mut omega: Vec<Rational> = Vec::new();
    let mut orders: Vec<TrigPoly> = Vec::new();
    for (no, text) in &lines[4..] {
        if let Some(rest) = text.strip_prefix("omega_") {
            let mut parts = rest.split_whitespace();
            let n: usize = parts.next().and_then(|v| v.parse().ok()).ok_or_else(|| err(*no, "bad order tag"))?;
            if n != omega.len() {
                return Err(err(*no, format!("expected order {}, found {n}", omega.len())));
            }
            let v = parts.next().and_then(parse_rational).ok_or_else(|| err(*no, "bad rational"))?;
            omega.push(v);
            orders.push(TrigPoly::new());
        } else {
            let (j, k, c) = TrigPoly::parse_line(text).ok_or_else(|| err(*no, "bad term line"))?;
            let u = orders.last_mut().ok_or_else(|| err(*no, "term before first order tag"))?;
            u.add_term(j, k, c);
        }
    }
    if orders.len() != order + 1 {
        return Err(err(lines.len(), format!("header says order {order}, found {}", orders.len().saturating_sub(1))));
    }
    Ok(SeriesSolution::from_parts(mode, omega, orders))
}
