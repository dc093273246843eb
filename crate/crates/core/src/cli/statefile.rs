//! Plain-text state files.
//!
//! ```text
//! fock-state v1 modes=2 cutoff=3
//! 0 0 1.0000000000000000e0 0.0000000000000000e0
//! 0 1 ...
//! ```
//!
//! One line per amplitude in row-major order. Values are written with 17
//! significant digits, so reading a file back reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::state::FockState;
use crate::C64;

const MAGIC: &str = "fock-state v1";

pub fn format_state(psi: &FockState) -> String {
    let mut s = String::with_capacity(48 * psi.len() + 40);
    writeln!(s, "{MAGIC} modes={} cutoff={}", psi.modes(), psi.cutoff()).unwrap();
    for (flat, a) in psi.amplitudes().iter().enumerate() {
        for k in psi.multi_index(flat) {
            write!(s, "{k} ").unwrap();
        }
        writeln!(s, "{:.16e} {:.16e}", a.re, a.im).unwrap();
    }
    s
}

fn header_field(tok: Option<&str>, key: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("header is missing {key}=")))?;
    tok.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .ok_or_else(|| Error::Parse(format!("expected {key}=..., found {tok:?}")))?
        .parse()
        .map_err(|e| Error::Parse(format!("bad {key}: {e}")))
}

pub fn parse_state(text: &str) -> Result<FockState> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty state file".into()))?;
    let rest = header
        .trim()
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::Parse(format!("expected header starting with {MAGIC:?}")))?;
    let mut toks = rest.split_whitespace();
    let modes = header_field(toks.next(), "modes")?;
    let cutoff = header_field(toks.next(), "cutoff")?;
    if toks.next().is_some() {
        return Err(Error::Parse("trailing tokens in header".into()));
    }
    let mut psi = FockState::zeros(modes, cutoff)?;
    let len = psi.len();
    let mut count = 0;
    for (lineno, line) in lines {
        let at = |m: String| Error::Parse(format!("line {}: {m}", lineno + 1));
        if count == len {
            return Err(at(format!("more than {len} data lines")));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != modes + 2 {
            return Err(at(format!("expected {} fields, found {}", modes + 2, toks.len())));
        }
        let idx: Vec<usize> = toks[..modes]
            .iter()
            .map(|t| t.parse().map_err(|e| at(format!("bad index {t:?}: {e}"))))
            .collect::<Result<_>>()?;
        if idx != psi.multi_index(count) {
            return Err(at(format!("index {idx:?} out of row-major order")));
        }
        let num = |t: &str| t.parse::<f64>().map_err(|e| at(format!("bad number {t:?}: {e}")));
        psi.amplitudes_mut()[count] = C64::new(num(toks[modes])?, num(toks[modes + 1])?);
        count += 1;
    }
    if count != len {
        return Err(Error::Parse(format!("expected {len} data lines, found {count}")));
    }
    Ok(psi)
}

pub fn write_state(path: &Path, psi: &FockState) -> Result<()> {
    fs::write(path, format_state(psi))?;
    Ok(())
}

pub fn read_state(path: &Path) -> Result<FockState> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read state file {}: {e}", path.display()),
        ))
    })?;
    parse_state(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        e => e,
    })
}
