//! Flat tables written as CSV or JSON with fixed float formatting.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(u64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v)
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as u64)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

/// 17 significant digits in scientific notation, independent of locale.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

impl Field {
    fn csv(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => format_float(*v),
            Field::Text(s) => s.clone(),
            Field::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) if v.is_finite() => format_float(*v),
            Field::Float(_) => "null".to_string(),
            Field::Text(s) => serde_json::to_string(s).expect("strings serialize"),
            Field::Bool(b) => b.to_string(),
        }
    }
}

/// Rows sharing one fixed set of column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Field>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Field>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Field::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    fn json_object(&self, row: &[Field]) -> String {
        let body: Vec<String> = self
            .columns
            .iter()
            .zip(row)
            .map(|(name, f)| {
                format!(
                    "{}: {}",
                    serde_json::to_string(name).expect("names serialize"),
                    f.json()
                )
            })
            .collect();
        format!("{{{}}}", body.join(", "))
    }

    /// A JSON array of objects, or a bare object when `single` is set and
    /// the table has exactly one row.
    pub fn write_json(&self, mut out: impl Write, single: bool) -> Result<()> {
        if single && self.rows.len() == 1 {
            writeln!(out, "{}", self.json_object(&self.rows[0]))?;
            return Ok(());
        }
        writeln!(out, "[")?;
        for (i, row) in self.rows.iter().enumerate() {
            let sep = if i + 1 < self.rows.len() { "," } else { "" };
            writeln!(out, "  {}{sep}", self.json_object(row))?;
        }
        writeln!(out, "]")?;
        Ok(())
    }

    pub fn write(&self, out: impl Write, format: Format, single: bool) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out, single),
        }
    }
}

/// Writes to `path`, or to standard output when no path is given.
pub fn emit(table: &Table, path: Option<&Path>, format: Format, single: bool) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display()))?;
            let mut w = BufWriter::new(file);
            table.write(&mut w, format, single)?;
            w.flush()
                .with_context(|| format!("cannot write {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write(&mut lock, format, single)?;
            lock.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(2.0), "2.0000000000000000e0");
        assert_eq!(format_float(-0.75), "-7.5000000000000000e-1");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_and_json_share_column_names() {
        let mut t = Table::new(&["d", "value", "name"]);
        t.push(vec![
            Field::from(2usize),
            Field::from(1.5),
            Field::from("t1"),
        ]);
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(
            String::from_utf8(csv).unwrap(),
            "d,value,name\n2,1.5000000000000000e0,t1\n"
        );
        let mut json = Vec::new();
        t.write_json(&mut json, true).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(parsed["d"], 2);
        assert_eq!(parsed["value"], 1.5);
        assert_eq!(parsed["name"], "t1");
    }

    #[test]
    fn json_arrays_parse() {
        let mut t = Table::new(&["x"]);
        t.push(vec![Field::from(f64::NAN)]);
        t.push(vec![Field::from(0.25)]);
        let mut json = Vec::new();
        t.write_json(&mut json, false).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert!(parsed[0]["x"].is_null());
        assert_eq!(parsed[1]["x"], 0.25);
    }
}
