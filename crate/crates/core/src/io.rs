//! CSV and JSON serialisation of samples and derived tables.
//!
//! Reals are written with Rust's shortest round-trip formatting, so reading a
//! file back yields bit-identical values.

use std::io::{Read, Write};

use crate::inference::EllipsePoint;
use crate::{Error, Matrix, Result, Sample, Scalar};

pub fn write_sample<T: Scalar, W: Write>(sample: &Sample<T>, out: W) -> Result<()> {
    write_table(sample.data(), out)
}

/// Header `x1,...,xp`, one row per observation.
pub fn write_table<T: Scalar, W: Write>(table: &Matrix<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=table.cols()).map(|j| format!("x{j}")))?;
    for row in table.row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample<T: Scalar, R: Read>(input: R) -> Result<Sample<T>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let p = r.headers()?.len();
    if p == 0 {
        return Err(Error::invalid("sample file has no columns"));
    }
    let mut data = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != p {
            return Err(Error::invalid(format!("row {} has {} fields, expected {p}", i + 1, rec.len())));
        }
        for field in rec.iter() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::invalid(format!("row {}: cannot parse {field:?} as a number", i + 1)))?;
            data.push(T::c(v));
        }
    }
    let n = data.len() / p;
    Sample::new(Matrix::from_row_major(n, p, data)?)
}

/// Header `t,x1,x2`.
pub fn write_ellipse<T: Scalar, W: Write>(points: &[EllipsePoint<T>], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x1", "x2"])?;
    for p in points {
        w.write_record([p.t.to_string(), p.x[0].to_string(), p.x[1].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ellipse<R: Read>(input: R) -> Result<Vec<EllipsePoint<f64>>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |k: usize| -> Result<f64> {
            rec.get(k)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::invalid("malformed ellipse row"))
        };
        out.push(EllipsePoint { t: f(0)?, x: [f(1)?, f(2)?] });
    }
    Ok(out)
}

/// One column of reals with the given header.
pub fn write_column<T: Scalar, W: Write>(name: &str, values: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([name])?;
    for v in values {
        w.write_record([v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
