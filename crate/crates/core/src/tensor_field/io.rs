//! Columnar binary container and CSV slices for grid fields.
//!
//! Container layout, little endian:
//! `b"ISOF"`, `u32` version, `u8` boundary (0 periodic, 1 clamped),
//! `u32` nx, `u32` ny, `f64` origin x2, `f64` extent x2, `u32` component
//! count, then one column per component of `nx * ny` row-major `f64`.

use std::io::{Read, Write};

use super::field::{ImmersionField, MetricField, ScalarField};
use super::{BoundaryMode, FieldError, GridChart};

const MAGIC: &[u8; 4] = b"ISOF";
const VERSION: u32 = 1;

/// Fields that can be flattened to named columns.
pub trait Columnar: Sized {
    fn column_names(&self) -> Vec<String>;
    fn chart_of(&self) -> &GridChart;
    fn to_columns(&self) -> Vec<Vec<f64>>;
    fn from_columns(chart: GridChart, cols: Vec<Vec<f64>>) -> Result<Self, FieldError>;
}

impl Columnar for ScalarField {
    fn column_names(&self) -> Vec<String> {
        vec!["value".into()]
    }
    fn chart_of(&self) -> &GridChart {
        &self.chart
    }
    fn to_columns(&self) -> Vec<Vec<f64>> {
        vec![self.values.clone()]
    }
    fn from_columns(chart: GridChart, mut cols: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if cols.len() != 1 {
            return Err(FieldError::Format(format!("expected 1 column, got {}", cols.len())));
        }
        ScalarField::new(chart, cols.remove(0))
    }
}

impl Columnar for MetricField {
    fn column_names(&self) -> Vec<String> {
        ["m11", "m12", "m22"].iter().map(|s| s.to_string()).collect()
    }
    fn chart_of(&self) -> &GridChart {
        &self.chart
    }
    fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..3)
            .map(|c| self.values.iter().map(|m| m[c]).collect())
            .collect()
    }
    fn from_columns(chart: GridChart, cols: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if cols.len() != 3 {
            return Err(FieldError::Format(format!("expected 3 columns, got {}", cols.len())));
        }
        let n = cols[0].len();
        MetricField::new(chart, (0..n).map(|k| [cols[0][k], cols[1][k], cols[2][k]]).collect())
    }
}

impl Columnar for ImmersionField {
    fn column_names(&self) -> Vec<String> {
        ["x", "y", "z"].iter().map(|s| s.to_string()).collect()
    }
    fn chart_of(&self) -> &GridChart {
        &self.chart
    }
    fn to_columns(&self) -> Vec<Vec<f64>> {
        (0..3)
            .map(|c| self.values.iter().map(|m| m[c]).collect())
            .collect()
    }
    fn from_columns(chart: GridChart, cols: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if cols.len() != 3 {
            return Err(FieldError::Format(format!("expected 3 columns, got {}", cols.len())));
        }
        let n = cols[0].len();
        ImmersionField::new(
            chart,
            (0..n).map(|k| [cols[0][k], cols[1][k], cols[2][k]]).collect(),
            Default::default(),
        )
    }
}

pub fn write_container<F: Columnar, W: Write>(field: &F, mut w: W) -> Result<(), FieldError> {
    let chart = field.chart_of();
    let cols = field.to_columns();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let mode: u8 = match chart.boundary() {
        BoundaryMode::Periodic => 0,
        BoundaryMode::Clamped => 1,
    };
    w.write_all(&[mode])?;
    w.write_all(&(chart.nx() as u32).to_le_bytes())?;
    w.write_all(&(chart.ny() as u32).to_le_bytes())?;
    for v in chart.origin().iter().chain(chart.extent().iter()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&(cols.len() as u32).to_le_bytes())?;
    for col in &cols {
        for v in col {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, FieldError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, FieldError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_container<F: Columnar, R: Read>(mut r: R) -> Result<F, FieldError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(FieldError::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(FieldError::Format(format!("unsupported version {version}")));
    }
    let mut mode = [0u8; 1];
    r.read_exact(&mut mode)?;
    let boundary = match mode[0] {
        0 => BoundaryMode::Periodic,
        1 => BoundaryMode::Clamped,
        m => return Err(FieldError::Format(format!("bad boundary byte {m}"))),
    };
    let nx = read_u32(&mut r)? as usize;
    let ny = read_u32(&mut r)? as usize;
    let origin = [read_f64(&mut r)?, read_f64(&mut r)?];
    let extent = [read_f64(&mut r)?, read_f64(&mut r)?];
    let chart = GridChart::new(origin, extent, [nx, ny], boundary)?;
    let ncomp = read_u32(&mut r)? as usize;
    let mut cols = Vec::with_capacity(ncomp);
    for _ in 0..ncomp {
        let mut col = Vec::with_capacity(nx * ny);
        for _ in 0..nx * ny {
            col.push(read_f64(&mut r)?);
        }
        cols.push(col);
    }
    F::from_columns(chart, cols)
}

/// CSV with columns `i,j,x,y,<components>`.
pub fn write_csv<F: Columnar, W: Write>(field: &F, mut w: W) -> Result<(), FieldError> {
    let chart = field.chart_of();
    let cols = field.to_columns();
    writeln!(w, "i,j,x,y,{}", field.column_names().join(","))?;
    for k in 0..chart.len() {
        let (i, j) = chart.ij(k);
        let x = chart.coords(i, j);
        write!(w, "{i},{j},{},{}", x[0], x[1])?;
        for c in &cols {
            write!(w, ",{}", c[k])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_round_trip() {
        let c = GridChart::torus(2.0, 9).unwrap();
        let m = MetricField::from_fn(&c, |x| [1.0 + x[0], 0.1 * x[1], 2.0]);
        let mut buf = Vec::new();
        write_container(&m, &mut buf).unwrap();
        let back: MetricField = read_container(buf.as_slice()).unwrap();
        assert_eq!(back.values, m.values);
        assert_eq!(back.chart, m.chart);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = GridChart::square(1.0, 8).unwrap();
        let f = ScalarField::constant(&c, 1.5);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 65);
        assert!(s.starts_with("i,j,x,y,value\n0,0,0,0,1.5"));
    }
}
