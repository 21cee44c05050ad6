//! CSV tables. Every float is written with 17 significant digits.

use std::io::Write;

/// Header of every probability and information table.
pub const HEADER: [&str; 6] = ["x", "tau", "mode", "value", "method", "err"];

pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub x: f64,
    pub tau: f64,
    pub mode: String,
    pub value: f64,
    pub method: String,
    pub err: f64,
}

pub fn write_rows<W: Write>(out: W, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record([
            fmt_f64(r.x),
            fmt_f64(r.tau),
            r.mode.clone(),
            fmt_f64(r.value),
            r.method.clone(),
            fmt_f64(r.err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generic CSV with a custom header.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated columns with a `#` header line, for gnuplot.
pub fn write_gnuplot<W: Write>(mut out: W, header: &[&str], rows: &[Vec<f64>]) -> std::io::Result<()> {
    writeln!(out, "# {}", header.join(" "))?;
    for r in rows {
        let cols: Vec<String> = r.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(out, "{}", cols.join(" "))?;
    }
    Ok(())
}
