//! On-disk formats.
//!
//! Fields and operators are stored as a JSON header `<stem>.json` next to a
//! data file `<stem>.bin` (little-endian interleaved `re, im` f64 pairs) or
//! `<stem>.csv` (`re,im` rows). Both layouts are row-major; for fields the
//! row index runs along `q`. Any of the three paths may be handed to the
//! readers.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockOperator;
use crate::phase::{ComplexField, PhaseGrid, PhasePoint};
use crate::positivity::{Provenance, SampleSet};

pub const FORMAT: &str = "phasecone";
pub const VERSION: u32 = 1;

/// What a stored field represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    #[default]
    Plain,
    Characteristic,
    Wigner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    F64le,
    Csv,
}

impl Encoding {
    fn extension(self) -> &'static str {
        match self {
            Encoding::F64le => "bin",
            Encoding::Csv => "csv",
        }
    }

    /// `.csv` selects CSV, anything else binary.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Encoding::Csv,
            _ => Encoding::F64le,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Layout {
    Field { half_extent: f64, points_per_axis: usize, side: Side },
    Operator { dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub layout: Layout,
    pub encoding: Encoding,
    /// Data file name, relative to the header.
    pub data: String,
}

/// Header and data paths for a stem or either member of the pair.
fn pair_paths(path: &Path, encoding: Encoding) -> (PathBuf, PathBuf) {
    (path.with_extension("json"), path.with_extension(encoding.extension()))
}

fn write_pair(path: &Path, layout: Layout, encoding: Encoding, values: &[Complex64]) -> Result<Vec<PathBuf>> {
    let (header_path, data_path) = pair_paths(path, encoding);
    if let Some(dir) = header_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let data_name = data_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::Parse(format!("unusable path {}", path.display())))?
        .to_owned();
    let header = Header { format: FORMAT.into(), version: VERSION, layout, encoding, data: data_name };
    match encoding {
        Encoding::F64le => {
            let mut bytes = Vec::with_capacity(values.len() * 16);
            for v in values {
                bytes.extend_from_slice(&v.re.to_le_bytes());
                bytes.extend_from_slice(&v.im.to_le_bytes());
            }
            fs::write(&data_path, bytes)?;
        }
        Encoding::Csv => {
            let mut w = csv::Writer::from_path(&data_path).map_err(csv_err)?;
            w.write_record(["re", "im"]).map_err(csv_err)?;
            for v in values {
                w.write_record([fmt_f64(v.re), fmt_f64(v.im)]).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    write_json(&header_path, &header)?;
    Ok(vec![header_path, data_path])
}

fn read_pair(path: &Path) -> Result<(Header, Vec<Complex64>)> {
    let header_path = path.with_extension("json");
    let header: Header = serde_json::from_slice(&fs::read(&header_path)?)?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Parse(format!(
            "{}: unsupported format {} v{}",
            header_path.display(),
            header.format,
            header.version
        )));
    }
    let data_path = header_path.with_file_name(&header.data);
    let values = match header.encoding {
        Encoding::F64le => {
            let bytes = fs::read(&data_path)?;
            if bytes.len() % 16 != 0 {
                return Err(Error::Parse(format!("{}: length not a multiple of 16", data_path.display())));
            }
            bytes
                .chunks_exact(16)
                .map(|c| {
                    let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                    let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                    Complex64::new(re, im)
                })
                .collect()
        }
        Encoding::Csv => {
            let mut r = csv::Reader::from_path(&data_path).map_err(csv_err)?;
            let mut out = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(csv_err)?;
                out.push(Complex64::new(parse_f64(rec.get(0))?, parse_f64(rec.get(1))?));
            }
            out
        }
    };
    Ok((header, values))
}

pub fn write_field(path: &Path, field: &ComplexField, side: Side, encoding: Encoding) -> Result<Vec<PathBuf>> {
    let g = field.grid();
    let layout = Layout::Field { half_extent: g.half_extent(), points_per_axis: g.points(), side };
    write_pair(path, layout, encoding, field.values())
}

pub fn read_field(path: &Path) -> Result<(ComplexField, Side)> {
    let (header, values) = read_pair(path)?;
    match header.layout {
        Layout::Field { half_extent, points_per_axis, side } => {
            let grid = PhaseGrid::new(half_extent, points_per_axis)?;
            Ok((ComplexField::from_values(grid, values)?, side))
        }
        Layout::Operator { .. } => Err(Error::Parse(format!("{} holds an operator, not a field", path.display()))),
    }
}

pub fn write_operator(path: &Path, op: &FockOperator, encoding: Encoding) -> Result<Vec<PathBuf>> {
    let n = op.dim();
    let values: Vec<Complex64> = (0..n * n).map(|i| op.get(i / n, i % n)).collect();
    write_pair(path, Layout::Operator { dim: n }, encoding, &values)
}

pub fn read_operator(path: &Path) -> Result<FockOperator> {
    let (header, values) = read_pair(path)?;
    match header.layout {
        Layout::Operator { dim } => {
            if values.len() != dim * dim {
                return Err(Error::Parse(format!("expected {} entries, found {}", dim * dim, values.len())));
            }
            FockOperator::new(DMatrix::from_row_slice(dim, dim, &values))
        }
        Layout::Field { .. } => Err(Error::Parse(format!("{} holds a field, not an operator", path.display()))),
    }
}

pub fn write_sample_set(path: &Path, s: &SampleSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["q", "p"]).map_err(csv_err)?;
    for z in s.points() {
        w.write_record([fmt_f64(z.q), fmt_f64(z.p)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sample_set(path: &Path) -> Result<SampleSet> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        points.push(PhasePoint::try_new(parse_f64(rec.get(0))?, parse_f64(rec.get(1))?)?);
    }
    SampleSet::new(points, Provenance::User)
}

/// Pretty JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: Option<&str>) -> Result<f64> {
    let s = s.ok_or_else(|| Error::Parse("missing column".into()))?;
    s.trim().parse().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
