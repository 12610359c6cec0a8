//! CSV tables with 17-significant-digit floats.

use std::path::Path;

use super::atomic_write;
use crate::error::{Error, Result};
use crate::experiments::{Cell, Table};

/// Text of one float: `{:.16e}`, or `NaN`/`inf`/`-inf`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::F(x) => format_float(*x),
        Cell::I(i) => i.to_string(),
        Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::S(s) => s.clone(),
    }
}

/// Rendered CSV text; every row must match the header width.
pub fn render_csv(table: &Table) -> Result<String> {
    let mut out = table.columns.join(",");
    out.push('\n');
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.columns.len() {
            return Err(Error::Format(format!(
                "table `{}` row {i} has {} cells, schema has {}",
                table.name,
                row.len(),
                table.columns.len()
            )));
        }
        out.push_str(&row.iter().map(format_cell).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv(table: &Table, path: &Path) -> Result<()> {
    atomic_write(path, render_csv(table)?.as_bytes())
}

/// Header and raw fields of CSV text written by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Format("empty CSV".into()))?
        .split(',')
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = split_fields(line);
        if row.len() != header.len() {
            return Err(Error::Format(format!(
                "CSV row {} has {} fields, header has {}",
                i + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn split_fields(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bitwise() {
        let xs = [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            f64::MIN_POSITIVE,
            5e-324,
            f64::MAX,
            std::f64::consts::PI,
            -0.0,
        ];
        let mut t = Table::new("t", &["x", "label"]);
        for &x in &xs {
            t.push(vec![Cell::F(x), Cell::S("a,\"b\"".into())]);
        }
        let (h, rows) = parse_csv(&render_csv(&t).unwrap()).unwrap();
        assert_eq!(h, vec!["x", "label"]);
        for (x, r) in xs.iter().zip(&rows) {
            assert_eq!(r[0].parse::<f64>().unwrap().to_bits(), x.to_bits());
            assert_eq!(r[1], "a,\"b\"");
        }
    }

    #[test]
    fn schema_mismatch_rejected() {
        let mut t = Table::new("t", &["a", "b"]);
        t.rows.push(vec![Cell::I(1)]);
        assert!(render_csv(&t).is_err());
    }
}
