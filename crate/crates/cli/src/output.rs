use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// 15 significant digits in fixed exponent form; non-finite values spelled out.
pub fn fmt_f(x: f64) -> String {
    if x == 0.0 {
        "0.00000000000000e0".into()
    } else if x.is_finite() {
        format!("{x:.14e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// JSON number rounded to 15 significant digits, or a string for non-finite values.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::String(fmt_f(x));
    }
    let r: f64 = fmt_f(x).parse().expect("formatted float parses");
    Number::from_f64(r).map_or(Value::Null, Value::Number)
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// Rounds every float inside a serialized value.
pub fn round_all(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().expect("f64")),
        Value::Array(a) => Value::Array(a.into_iter().map(round_all).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_all(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

pub fn write_csv(w: Box<dyn Write>, table: &Table) -> io::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(&table.header)?;
    for r in &table.rows {
        wr.write_record(r)?;
    }
    wr.flush()
}

pub fn write_json(mut w: Box<dyn Write>, value: &Value) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_rendering() {
        assert_eq!(fmt_f(1.0), "1.00000000000000e0");
        assert_eq!(fmt_f(-0.0), fmt_f(0.0));
        assert_eq!(fmt_f(f64::INFINITY), "inf");
        assert_eq!(num(f64::NAN), Value::String("nan".into()));
        assert_eq!(num(0.1 + 0.2), num(0.3));
    }
}
