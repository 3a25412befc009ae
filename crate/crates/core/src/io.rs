// SPDX-License-Identifier: MIT OR Apache-2.0

//! Dense TSV/CSV matrix files: one row per line, no header. The delimiter is
//! a comma for `.csv` paths and a tab otherwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ObservationMatrix, SegConfig};

pub fn delimiter_for(path: &Path) -> char {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => ',',
        _ => '\t',
    }
}

pub fn load_matrix(path: impl AsRef<Path>, cfg: &SegConfig) -> Result<ObservationMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix(BufReader::new(file), delimiter_for(path), cfg.symmetrize).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_matrix(
    reader: impl BufRead,
    delim: char,
    symmetrize: bool,
) -> Result<ObservationMatrix> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0usize;
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0usize;
        for (col, cell) in line.split(delim).enumerate() {
            let text = cell.trim();
            let v: f64 = text.parse().map_err(|_| Error::BadCell {
                row: rows,
                col,
                text: text.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::BadCell {
                    row: rows,
                    col,
                    text: text.to_string(),
                });
            }
            values.push(v);
            count += 1;
        }
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(Error::NotSquare {
                    row: rows,
                    found: count,
                    expected: w,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let width = width.unwrap_or(0);
    if width != rows {
        return Err(Error::NotSquare {
            row: rows,
            found: width,
            expected: rows,
        });
    }
    ObservationMatrix::new(rows, values, symmetrize)
}

pub fn save_matrix(path: impl AsRef<Path>, matrix: &ObservationMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_matrix(&mut out, matrix, delimiter_for(path))
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_matrix(
    out: &mut impl Write,
    matrix: &ObservationMatrix,
    delim: char,
) -> std::io::Result<()> {
    let mut line = String::new();
    for i in 0..matrix.n() {
        line.clear();
        for (j, v) in matrix.row(i).iter().enumerate() {
            if j > 0 {
                line.push(delim);
            }
            line.push_str(&format_g17(*v));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Formats like C's `%.17g`: 17 significant digits, positional notation for
/// decimal exponents in `[-4, 17)`, trailing zeros removed.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.16e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => ("-", rest),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();

    if !(-4..17).contains(&exp) {
        let frac = digits[1..].trim_end_matches('0');
        let mut s = format!("{sign}{}", &digits[..1]);
        if !frac.is_empty() {
            s.push('.');
            s.push_str(frac);
        }
        let esign = if exp < 0 { '-' } else { '+' };
        s.push_str(&format!("e{esign}{:02}", exp.abs()));
        return s;
    }

    let (int_part, frac_part) = if exp >= 0 {
        let cut = exp as usize + 1;
        (digits[..cut].to_string(), digits[cut..].to_string())
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        ("0".to_string(), format!("{zeros}{digits}"))
    };
    let frac = frac_part.trim_end_matches('0');
    if frac.is_empty() {
        format!("{sign}{int_part}")
    } else {
        format!("{sign}{int_part}.{frac}")
    }
}
