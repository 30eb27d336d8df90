//! Machine-readable output: JSON with 17 significant digits and plot-ready CSV.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::entropy::EntropyChainReport;
use crate::majorization::{LadderMatrix, DENSE_EXPORT_MAX_DIM};
use crate::transition::TransitionGrid;

/// `%.17g`: enough digits to round-trip any `f64`.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{x:.*}", (16 - exp) as usize);
        trim_fraction(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Compact JSON whose floats use [`format_g17`]; everything else keeps
/// serde_json's compact layout.
#[derive(Debug, Default, Clone, Copy)]
pub struct G17Formatter;

impl Formatter for G17Formatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_g17(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Serializes `value` followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(out: &mut W, value: &T) -> io::Result<()> {
    let mut ser = Serializer::with_formatter(&mut *out, G17Formatter);
    value.serialize(&mut ser).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    write_json(&mut buf, value).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Header row followed by records; every float goes through [`format_g17`].
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn empty() -> Self {
        Table::new(Vec::<String>::new())
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(io::Error::other)?;
        for row in &self.rows {
            w.write_record(row).map_err(io::Error::other)?;
        }
        w.flush()
    }
}

/// Columns `i, 0, 1, ..., n_max, tail`.
pub fn grid_table(grid: &TransitionGrid) -> Table {
    let mut header = vec!["i".to_string()];
    header.extend((0..=grid.n_max).map(|n| n.to_string()));
    header.push("tail".into());
    let mut table = Table::new(header);
    for (i, (row, tail)) in grid.rows.iter().zip(&grid.tails).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| format_g17(*v)));
        rec.push(format_g17(*tail));
        table.push(rec);
    }
    table
}

/// Dense rows of `D`, or `None` above [`DENSE_EXPORT_MAX_DIM`].
pub fn ladder_table(d: &LadderMatrix) -> Option<Table> {
    (d.dim <= DENSE_EXPORT_MAX_DIM).then(|| {
        let mut table = Table::new((0..d.dim).map(|l| l.to_string()));
        for row in d.dense() {
            table.push(row.iter().map(|v| format_g17(*v)).collect());
        }
        table
    })
}

/// Two columns `i, S_i`.
pub fn entropy_table(report: &EntropyChainReport, scale: f64) -> Table {
    let mut table = Table::new(["i", "entropy"]);
    for (i, s) in report.values.iter().enumerate() {
        table.push(vec![i.to_string(), format_g17(s * scale)]);
    }
    table
}
