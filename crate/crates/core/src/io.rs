//! Image and table files.
//!
//! Raw images are little-endian `f64`, row-major (rows are `y`), with a
//! `.hdr` text sidecar:
//!
//! ```text
//! n = 256
//! pitch_m = 3.1640625e-5
//! domain = position
//! origin_x_m = 8.6e-3
//! origin_y_m = 0
//! normalization = peak-1
//! dtype = f64le
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::field::{Domain, Grid2D, IntensityMap, Normalization};

fn with_ext(stem: &Path, ext: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

pub fn header_text(img: &IntensityMap) -> String {
    format!(
        "n = {}\npitch_m = {:e}\ndomain = {}\norigin_x_m = {:e}\norigin_y_m = {:e}\nnormalization = {}\ndtype = f64le\n",
        img.grid.n(),
        img.grid.pitch(),
        img.grid.domain().as_str(),
        img.origin[0],
        img.origin[1],
        img.normalization.as_str()
    )
}

/// Write `<stem>.f64` and `<stem>.hdr`.
pub fn write_raw(stem: &Path, img: &IntensityMap) -> Result<()> {
    let mut bytes = Vec::with_capacity(img.values.len() * 8);
    for v in img.values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(with_ext(stem, "f64"), bytes)?;
    fs::write(with_ext(stem, "hdr"), header_text(img))?;
    Ok(())
}

pub fn read_raw(stem: &Path) -> Result<IntensityMap> {
    let hdr = fs::read_to_string(with_ext(stem, "hdr"))?;
    let get = |key: &str| {
        hdr.lines()
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == key)
            .map(|(_, v)| v.trim().to_string())
            .ok_or_else(|| Error::Config(format!("header lacks {key}")))
    };
    let num = |key: &str| -> Result<f64> {
        get(key)?.parse().map_err(|_| Error::Config(format!("header {key} is not a number")))
    };
    let n: usize = get("n")?.parse().map_err(|_| Error::Config("header n is not an integer".into()))?;
    let domain = match get("domain")?.as_str() {
        "position" => Domain::Position,
        "momentum" => Domain::Momentum,
        other => return Err(Error::Config(format!("unknown domain {other:?}"))),
    };
    let normalization = match get("normalization")?.as_str() {
        "peak-1" => Normalization::PeakOne,
        "unit-sum" => Normalization::UnitSum,
        "raw" => Normalization::Raw,
        other => return Err(Error::Config(format!("unknown normalization {other:?}"))),
    };
    let grid = Grid2D::new(n, num("pitch_m")?, domain)?;
    let bytes = fs::read(with_ext(stem, "f64"))?;
    if bytes.len() != n * n * 8 {
        return Err(Error::ShapeMismatch(format!("raw file holds {} bytes, expected {}", bytes.len(), n * n * 8)));
    }
    let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    let values = Array2::from_shape_vec((n, n), data).map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let mut img = IntensityMap::new(grid, [num("origin_x_m")?, num("origin_y_m")?], values)?;
    img.normalization = normalization;
    Ok(img)
}

/// 8-bit binary graymap, peak mapped to 255, gamma 1.
pub fn write_pgm(path: &Path, img: &IntensityMap) -> Result<()> {
    let (rows, cols) = img.values.dim();
    let peak = img.peak();
    let mut w = BufWriter::new(fs::File::create(path)?);
    write!(w, "P5\n{cols} {rows}\n255\n")?;
    let bytes: Vec<u8> = img
        .values
        .iter()
        .map(|v| if peak > 0.0 { (v / peak * 255.0).round().clamp(0.0, 255.0) as u8 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    w.flush()?;
    Ok(())
}

/// Simple comma-separated table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn write_csv(path: &Path, table: &Table) -> Result<()> {
    fs::write(path, table.to_csv())?;
    Ok(())
}
