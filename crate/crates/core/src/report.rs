//! Bit-stable report files: JSON lines or CSV, floats at 12 significant
//! digits, written through a temporary file and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Shortest representation of [`round_sig`] of `x`.
pub fn fmt_float(x: f64) -> String {
    let r = round_sig(x);
    if r.is_finite() {
        format!("{r:?}")
    } else {
        format!("{r}")
    }
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) && n.as_f64().is_some() => {
            let x = n.as_f64().expect("checked");
            serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
        }
        Value::Array(xs) => Value::Array(xs.into_iter().map(round_value).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_value(v))).collect()),
        other => other,
    }
}

/// One JSON object per line, struct field order preserved.
pub fn json_lines<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        let v = round_value(serde_json::to_value(r)?);
        out.push_str(&serde_json::to_string(&v)?);
        out.push('\n');
    }
    Ok(out)
}

/// A report cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i128),
    UInt(u128),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(x) => x.to_string(),
            Cell::UInt(x) => x.to_string(),
            Cell::Float(x) => fmt_float(*x),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

macro_rules! cell_from {
    ($($t:ty => $v:ident as $c:ty),*) => {
        $(impl From<$t> for Cell {
            fn from(x: $t) -> Self {
                Cell::$v(x as $c)
            }
        })*
    };
}
cell_from!(usize => UInt as u128, u64 => UInt as u128, u32 => UInt as u128, u128 => UInt as u128, i64 => Int as i128, f64 => Float as f64);

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Records that know their CSV layout.
pub trait CsvRecord {
    fn header() -> &'static [&'static str];
    fn row(&self) -> Vec<Cell>;
}

pub fn csv_text<T: CsvRecord>(records: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(T::header())?;
    for r in records {
        w.write_record(r.row().iter().map(Cell::render))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn render<T: Serialize + CsvRecord>(records: &[T], format: Format) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyReport);
    }
    match format {
        Format::Json => json_lines(records),
        Format::Csv => csv_text(records),
    }
}

/// Replaces `path` atomically with `contents`; on failure nothing is left behind.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// [`render`] followed by [`write_atomic`].
pub fn emit_report<T: Serialize + CsvRecord>(records: &[T], format: Format, path: &Path) -> Result<()> {
    let text = render(records, format)?;
    write_atomic(path, &text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        x: f64,
        label: &'static str,
    }

    impl CsvRecord for Row {
        fn header() -> &'static [&'static str] {
            &["N", "x", "label"]
        }
        fn row(&self) -> Vec<Cell> {
            vec![self.n.into(), self.x.into(), self.label.into()]
        }
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0), "2.0");
        assert_eq!(fmt_float(123456.7890123456), "123456.789012");
        assert_eq!(fmt_float(1e-20 / 3.0), "3.33333333333e-21");
    }

    #[test]
    fn json_and_csv_layout() {
        let rows = [Row { n: 3, x: 0.1 + 0.2, label: "a" }, Row { n: 4, x: -1.5, label: "b,c" }];
        assert_eq!(
            render(&rows, Format::Json).unwrap(),
            "{\"n\":3,\"x\":0.3,\"label\":\"a\"}\n{\"n\":4,\"x\":-1.5,\"label\":\"b,c\"}\n"
        );
        assert_eq!(render(&rows, Format::Csv).unwrap(), "N,x,label\n3,0.3,a\n4,-1.5,\"b,c\"\n");
        assert!(matches!(render::<Row>(&[], Format::Json), Err(Error::EmptyReport)));
    }

    #[test]
    fn atomic_write_and_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = [Row { n: 1, x: 2.0, label: "z" }];
        emit_report(&rows, Format::Csv, &path).unwrap();
        let first = std::fs::read(&path).unwrap();
        emit_report(&rows, Format::Csv, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), first);
        let bad = dir.path().join("missing").join("r.csv");
        assert!(emit_report(&rows, Format::Csv, &bad).is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
