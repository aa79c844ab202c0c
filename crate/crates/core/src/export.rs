//! CSV and JSON writers for kernels, fields and result tables.

use std::io::{self, Write};

use serde::Serialize;

use crate::fields::{FieldSample, ScaleWindow};
use crate::lattice::GridPoint;

/// Writes `x1,x2,y1,y2,value` rows.
pub fn write_kernel_pairs<W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = (GridPoint, GridPoint, f64)>,
) -> io::Result<()> {
    writeln!(w, "x1,x2,y1,y2,value")?;
    for (x, y, v) in rows {
        writeln!(w, "{},{},{},{},{:.16e}", x.x1, x.x2, y.x1, y.x2, v)?;
    }
    Ok(())
}

/// Writes `dx,dy,value` rows for a stationary kernel.
pub fn write_kernel_offsets<W: Write>(
    mut w: W,
    rows: impl IntoIterator<Item = (i64, i64, f64)>,
) -> io::Result<()> {
    writeln!(w, "dx,dy,value")?;
    for (dx, dy, v) in rows {
        writeln!(w, "{dx},{dy},{v:.16e}")?;
    }
    Ok(())
}

/// Writes `x1,x2,value` rows.
pub fn write_field<W: Write>(mut w: W, sample: &FieldSample) -> io::Result<()> {
    writeln!(w, "x1,x2,value")?;
    for (i, v) in sample.values.iter().enumerate() {
        writeln!(w, "{},{},{:.16e}", i / sample.side, i % sample.side, v)?;
    }
    Ok(())
}

/// Sidecar metadata of a field dump.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldMeta {
    pub kind: String,
    pub n: Option<u32>,
    #[serde(rename = "N")]
    pub side: usize,
    pub window: Option<ScaleWindow>,
    pub seed: u64,
    pub killing: Option<f64>,
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n: Option<u32>,
    #[serde(rename = "N")]
    pub side: Option<usize>,
    pub kind: String,
    pub restriction: String,
    pub stat: String,
    pub value: f64,
    pub se: Option<f64>,
}

impl ResultRow {
    pub fn new(kind: impl Into<String>, stat: impl Into<String>, value: f64) -> Self {
        Self {
            n: None,
            side: None,
            kind: kind.into(),
            restriction: String::new(),
            stat: stat.into(),
            value,
            se: None,
        }
    }

    pub fn n(mut self, n: u32) -> Self {
        self.n = Some(n);
        self
    }

    pub fn side(mut self, side: usize) -> Self {
        self.side = Some(side);
        self
    }

    pub fn restriction(mut self, r: impl Into<String>) -> Self {
        self.restriction = r.into();
        self
    }

    pub fn se(mut self, se: f64) -> Self {
        self.se = Some(se);
        self
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

/// Writes `n,N,kind,restriction,stat,value,se` rows.
pub fn write_results_csv<W: Write>(mut w: W, rows: &[ResultRow]) -> io::Result<()> {
    writeln!(w, "n,N,kind,restriction,stat,value,se")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            opt(&r.n),
            opt(&r.side),
            r.kind,
            r.restriction,
            r.stat,
            num(r.value),
            r.se.map(num).unwrap_or_default()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::FieldKind;

    #[test]
    fn results_layout() {
        let rows = vec![
            ResultRow::new("gff", "mean_max", 0.5).n(3).side(8).restriction("full").se(0.01),
            ResultRow::new("brw", "c1", f64::NAN),
        ];
        let mut buf = Vec::new();
        write_results_csv(&mut buf, &rows).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "n,N,kind,restriction,stat,value,se");
        assert_eq!(lines[1], "3,8,gff,full,mean_max,5.0000000000000000e-1,1.0000000000000000e-2");
        assert_eq!(lines[2], ",,brw,,c1,NaN,");
    }

    #[test]
    fn field_roundtrip_precision() {
        let v = 0.1 + 0.2;
        let s = FieldSample {
            kind: FieldKind::Gff,
            side: 2,
            values: vec![v, -1.0 / 3.0, 0.0, 1e-300],
        };
        let mut buf = Vec::new();
        write_field(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let parsed: Vec<f64> = text
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(parsed, s.values);
        assert!(text.lines().nth(2).unwrap().starts_with("0,1,"));
    }
}
