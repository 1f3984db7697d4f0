//! CSV and summary emission.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// One CSV cell. Reals are written with 17 significant digits in
/// scientific notation, which round-trips every f64 exactly.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Real(f64),
    Text(String),
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Int(i) => write!(f, "{i}"),
            Field::Real(x) => write!(f, "{x:.16e}"),
            Field::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Real(x)
    }
}

impl From<usize> for Field {
    fn from(i: usize) -> Self {
        Field::Int(i as i64)
    }
}

impl From<i64> for Field {
    fn from(i: i64) -> Self {
        Field::Int(i)
    }
}

impl From<&str> for Field {
    fn from(s: &str) -> Self {
        Field::Text(s.to_string())
    }
}

pub fn format_real(x: f64) -> String {
    Field::Real(x).to_string()
}

/// Writes the header and rows; every row must have as many cells as the
/// header.
pub fn emit_csv<H, I>(path: &Path, header: &[H], rows: I) -> io::Result<()>
where
    H: AsRef<str>,
    I: IntoIterator<Item = Vec<Field>>,
{
    let mut w = BufWriter::new(File::create(path)?);
    let names: Vec<&str> = header.iter().map(|h| h.as_ref()).collect();
    writeln!(w, "{}", names.join(","))?;
    for (n, row) in rows.into_iter().enumerate() {
        if row.len() != names.len() {
            return Err(io::Error::new(
                io::ErrorKind::InvalidInput,
                format!("row {n} has {} cells, header has {}", row.len(), names.len()),
            ));
        }
        let mut first = true;
        for cell in &row {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "{cell}")?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}
