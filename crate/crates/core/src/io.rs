//! Dataset files: fvecs and CSV. Reads of either format may be gzipped.
//!
//! fvecs stores each vector as a little-endian `i32` dimension followed by
//! that many `f32` values. Coordinates are widened to `f64` on load and
//! narrowed on save, so only `f32`-representable data round-trips exactly.
//! CSV rows use `,` and 17 significant digits, enough to round-trip any `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Fvecs,
    Csv,
}

impl Format {
    /// Guess from the extension, looking through a trailing `.gz`.
    pub fn from_path(path: &Path) -> Option<Format> {
        let name = path.file_name()?.to_str()?.to_ascii_lowercase();
        let name = name.strip_suffix(".gz").unwrap_or(&name);
        if name.ends_with(".fvecs") {
            Some(Format::Fvecs)
        } else if name.ends_with(".csv") {
            Some(Format::Csv)
        } else {
            None
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fvecs" => Ok(Format::Fvecs),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}` (expected fvecs or csv)"))),
        }
    }
}

fn resolve(path: &Path, format: Option<Format>) -> Result<Format> {
    format.or_else(|| Format::from_path(path)).ok_or_else(|| {
        Error::Config(format!("cannot tell the format of {}; pass it explicitly", path.display()))
    })
}

/// Loads a dataset. With `format` unset the extension decides.
pub fn load(path: impl AsRef<Path>, format: Option<Format>) -> Result<Dataset> {
    let path = path.as_ref();
    let format = resolve(path, format)?;
    let reader = open(path)?;
    match format {
        Format::Fvecs => read_fvecs(reader, path),
        Format::Csv => read_csv(reader, path),
    }
}

/// Writes a dataset uncompressed.
pub fn save(dataset: &Dataset, path: impl AsRef<Path>, format: Option<Format>) -> Result<()> {
    let path = path.as_ref();
    let format = resolve(path, format)?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    match format {
        Format::Fvecs => write_fvecs(dataset, &mut w),
        Format::Csv => write_csv(dataset, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(|e| Error::io(path, e))
}

/// Opens a file, unwrapping gzip when the magic bytes say so.
fn open(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufReader::new(file);
    let head = buf.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.starts_with(&[0x1f, 0x8b]) {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(buf))))
    } else {
        Ok(Box::new(buf))
    }
}

fn parse_err(path: &Path, location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        location,
        message: message.into(),
    }
}

/// Fills `buf` completely. Returns how many bytes arrived before EOF.
fn read_full(r: &mut dyn Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut got = 0;
    while got < buf.len() {
        match r.read(&mut buf[got..]) {
            Ok(0) => break,
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(got)
}

pub fn read_fvecs(mut r: impl Read, path: &Path) -> Result<Dataset> {
    let mut ds: Option<Dataset> = None;
    let mut offset: u64 = 0;
    let mut record = 0usize;
    let mut body = Vec::new();
    let mut row = Vec::new();
    loop {
        let at = |record, offset| format!("record {record} (byte {offset})");
        let mut head = [0u8; 4];
        let got = read_full(&mut r, &mut head).map_err(|e| Error::io(path, e))?;
        if got == 0 {
            break;
        }
        if got < 4 {
            return Err(parse_err(path, at(record, offset), "truncated dimension header"));
        }
        let dim = i32::from_le_bytes(head);
        if dim <= 0 {
            return Err(parse_err(path, at(record, offset), format!("bad dimension {dim}")));
        }
        let dim = dim as usize;
        if let Some(expected) = ds.as_ref().map(Dataset::dim) {
            if dim != expected {
                return Err(parse_err(
                    path,
                    at(record, offset),
                    format!("dimension {dim} differs from {expected} in earlier records"),
                ));
            }
        }
        body.resize(dim * 4, 0);
        let got = read_full(&mut r, &mut body).map_err(|e| Error::io(path, e))?;
        if got < body.len() {
            return Err(parse_err(
                path,
                at(record, offset),
                format!("truncated: {got} of {} value bytes", body.len()),
            ));
        }
        row.clear();
        row.extend(body.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64));
        ds.get_or_insert_with(|| Dataset::new(dim))
            .push(&row)
            .map_err(|e| parse_err(path, at(record, offset), e.to_string()))?;
        offset += 4 + body.len() as u64;
        record += 1;
    }
    Ok(ds.unwrap_or_default())
}

pub fn write_fvecs(ds: &Dataset, w: &mut impl Write) -> std::io::Result<()> {
    for p in ds.iter() {
        w.write_all(&(ds.dim() as i32).to_le_bytes())?;
        for &v in p.coords {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

/// Rows of numbers separated by `,`. A first line that does not parse is
/// taken as a header. Blank lines are skipped.
pub fn read_csv(r: impl Read, path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut ds: Option<Dataset> = None;
    let mut row = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(i as u64 + 1, |p| p.line());
            parse_err(path, format!("line {line}"), e.to_string())
        })?;
        let line = rec.position().map_or(i as u64 + 1, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        row.clear();
        let mut bad = None;
        for field in rec.iter() {
            match field.parse::<f64>() {
                Ok(v) => row.push(v),
                Err(_) => {
                    bad = Some(field.to_string());
                    break;
                }
            }
        }
        if let Some(field) = bad {
            if ds.is_none() && i == 0 {
                continue;
            }
            return Err(parse_err(path, format!("line {line}"), format!("not a number: `{field}`")));
        }
        let target = ds.get_or_insert_with(|| Dataset::new(row.len()));
        target
            .push(&row)
            .map_err(|e| parse_err(path, format!("line {line}"), e.to_string()))?;
    }
    Ok(ds.unwrap_or_default())
}

pub fn write_csv(ds: &Dataset, w: &mut impl Write) -> std::io::Result<()> {
    let mut line = String::new();
    for p in ds.iter() {
        line.clear();
        for (j, v) in p.coords.iter().enumerate() {
            if j > 0 {
                line.push(',');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}
