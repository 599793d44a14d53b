use std::io::{BufRead, Write};

use super::config::Quantity;
use super::sweep::Record;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "N,p,tau,realization,quantity,value";

/// Writes records with 17 significant digits per float.
pub fn write_csv<W: Write>(records: &[Record], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{},{:.16e},{:.16e},{},{},{:.16e}", r.n, r.p, r.tau, r.realization, r.quantity, r.value)?;
    }
    Ok(())
}

fn field<T: std::str::FromStr>(s: &str, line: usize, name: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Parameter(format!("line {line}: bad {name} {s:?}")))
}

pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<Record>> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parameter("empty CSV".into()))?
        .map_err(|e| Error::Parameter(e.to_string()))?;
    if header.trim() != CSV_HEADER {
        return Err(Error::Parameter(format!("line 1: header {header:?} is not {CSV_HEADER:?}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parameter(e.to_string()))?;
        let no = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(Error::Parameter(format!("line {no}: expected 6 columns, found {}", cols.len())));
        }
        out.push(Record {
            n: field(cols[0], no, "N")?,
            p: field(cols[1], no, "p")?,
            tau: field(cols[2], no, "tau")?,
            realization: field(cols[3], no, "realization")?,
            quantity: field::<Quantity>(cols[4], no, "quantity")?,
            value: field(cols[5], no, "value")?,
        });
    }
    Ok(out)
}
