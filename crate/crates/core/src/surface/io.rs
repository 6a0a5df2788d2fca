//! Surface CSV files with a JSON grid sidecar.
//!
//! The CSV has a header `s\z, z_0, z_1, …` followed by one row per horizon
//! index `i`: `s_i, f(i,0), f(i,1), …`. Numbers use 12 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Surface, SurfaceGrid};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Grid metadata stored next to a surface CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub h: f64,
    pub n_s: usize,
    pub n_z: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub valid_rows: Option<usize>,
}

impl GridSidecar {
    pub fn of<T: Scalar>(f: &Surface<T>) -> Self {
        let g = f.grid();
        Self {
            h: g.h().as_f64(),
            n_s: g.n_s(),
            n_z: g.n_z(),
            valid_rows: (f.valid_rows() < g.n_s()).then_some(f.valid_rows()),
        }
    }

    pub fn grid<T: Scalar>(&self) -> Result<SurfaceGrid<T>> {
        SurfaceGrid::new(T::lit(self.h), self.n_s, self.n_z)
    }
}

/// Formats with 12 significant digits in scientific notation.
pub fn fmt_sig12<T: Scalar>(x: T) -> String {
    let v = x.as_f64();
    if v == 0.0 {
        // avoid "-0.00000000000e0"
        return "0.00000000000e0".to_string();
    }
    format!("{v:.11e}")
}

pub fn write_surface_csv<T: Scalar, W: Write>(f: &Surface<T>, out: W) -> Result<()> {
    let g = f.grid();
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(g.n_z() + 1);
    header.push("s\\z".to_string());
    header.extend((0..g.n_z()).map(|j| fmt_sig12(g.z(j))));
    w.write_record(&header)?;
    for i in 0..g.n_s() {
        let mut rec = Vec::with_capacity(g.n_z() + 1);
        rec.push(fmt_sig12(g.s(i)));
        rec.extend(f.row(i).iter().map(|&v| fmt_sig12(v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a surface CSV against known grid metadata.
pub fn read_surface_csv<T: Scalar, R: Read>(input: R, meta: &GridSidecar) -> Result<Surface<T>> {
    let grid = meta.grid::<T>()?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.len() != grid.n_z() + 1 || header.get(0) != Some("s\\z") {
        return Err(Error::Parse(format!(
            "surface header must be `s\\z` plus {} ages",
            grid.n_z()
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != grid.n_z() + 1 {
            return Err(Error::Parse(format!("row {rows} has {} fields", rec.len())));
        }
        for field in rec.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{field}` in row {rows}")))?;
            values.push(T::lit(v));
        }
        rows += 1;
    }
    if rows != grid.n_s() {
        return Err(Error::Parse(format!(
            "expected {} rows, found {rows}",
            grid.n_s()
        )));
    }
    let mut s = Surface::new(grid, values)?;
    if let Some(v) = meta.valid_rows {
        s.set_valid_rows(v);
    }
    Ok(s)
}

/// Writes `<stem>.csv` and `<stem>.json` in `dir`.
pub fn save_surface<T: Scalar>(f: &Surface<T>, dir: &Path, stem: &str) -> Result<()> {
    let mut csv_bytes = Vec::new();
    write_surface_csv(f, &mut csv_bytes)?;
    std::fs::write(dir.join(format!("{stem}.csv")), csv_bytes)?;
    let meta = serde_json::to_vec_pretty(&GridSidecar::of(f))?;
    std::fs::write(dir.join(format!("{stem}.json")), meta)?;
    Ok(())
}

/// Loads a surface from `path` (the CSV) and the sidecar with the same stem.
pub fn load_surface<T: Scalar>(path: &Path) -> Result<Surface<T>> {
    let meta_path = path.with_extension("json");
    let meta: GridSidecar = serde_json::from_slice(&std::fs::read(&meta_path)?)?;
    read_surface_csv(std::fs::File::open(path)?, &meta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_format() {
        assert_eq!(fmt_sig12(1.0_f64), "1.00000000000e0");
        assert_eq!(fmt_sig12(-0.0_f64), "0.00000000000e0");
        assert_eq!(fmt_sig12(0.1234567890123_f64), "1.23456789012e-1");
    }

    #[test]
    fn round_trip_through_memory() {
        let g = SurfaceGrid::new(0.5, 3, 4).unwrap();
        let f = Surface::from_fn(g, |s, y| s * 10.0 + y).unwrap();
        let mut buf = Vec::new();
        write_surface_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("s\\z,"));
        let back: Surface<f64> = read_surface_csv(&buf[..], &GridSidecar::of(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn wrong_shape_rejected() {
        let meta = GridSidecar {
            h: 1.0,
            n_s: 2,
            n_z: 2,
            valid_rows: None,
        };
        let text = "s\\z,0,1\n0,1,2\n";
        assert!(read_surface_csv::<f64, _>(text.as_bytes(), &meta).is_err());
        let text = "x,0,1\n0,1,2\n1,3,4\n";
        assert!(read_surface_csv::<f64, _>(text.as_bytes(), &meta).is_err());
    }
}
