//! Reading and writing vector files.
//!
//! Two formats are supported:
//!
//! * CSV: an optional leading `#` comment line, then one point per line as
//!   comma-separated decimal floats. No id column.
//! * OPDR-VEC v1 binary, all integers little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic "OPDR"
//!      4     4  version (u32) = 1
//!      8     8  count (u64)
//!     16     8  dim (u64)
//!     24     1  dtype tag: 0 = float32, 1 = float64
//!     25     7  zero padding
//!     32     -  count * dim values, row-major
//! ```
//!
//! Row order is point identity in both formats. Writes go to a temporary
//! file in the destination directory which is renamed into place only after
//! the payload is fully written.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_traits::NumCast;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::vectors::{VectorError, VectorSet};

pub const MAGIC: &[u8; 4] = b"OPDR";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Binary,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "binary" | "bin" => Ok(Format::Binary),
            other => Err(format!("unknown format '{other}' (expected csv or binary)")),
        }
    }
}

/// On-disk element width of a binary payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dtype {
    Float32,
    Float64,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::Float32 => 0,
            Dtype::Float64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Dtype::Float32),
            1 => Some(Dtype::Float64),
            _ => None,
        }
    }

    pub fn width(self) -> usize {
        match self {
            Dtype::Float32 => 4,
            Dtype::Float64 => 8,
        }
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    IoWrite {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("file is empty")]
    EmptyFile,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("row {row}: has {found} values, expected {expected}")]
    InconsistentRowWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}, column {col}: cannot parse '{text}' as a number")]
    Parse {
        row: usize,
        col: usize,
        text: String,
    },
    #[error("row {row}: non-finite value")]
    NonFiniteValue { row: usize },
    #[error("byte offset {offset}: non-finite value")]
    NonFiniteAt { offset: usize },
    #[error("payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} trailing bytes after payload")]
    TrailingBytes { extra: usize },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

pub fn load_vectors<T: Scalar>(path: &Path, format: Format) -> Result<VectorSet<T>, IoError> {
    let bytes = fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        Format::Csv => parse_csv(&bytes),
        Format::Binary => parse_binary(&bytes),
    }
}

/// Saves `vs`; binary output is always float64.
pub fn save_vectors<T: Scalar>(vs: &VectorSet<T>, path: &Path, format: Format) -> Result<(), IoError> {
    match format {
        Format::Csv => write_atomic(path, |w| write_csv(vs, w)),
        Format::Binary => save_binary(vs, path, Dtype::Float64),
    }
}

pub fn save_binary<T: Scalar>(vs: &VectorSet<T>, path: &Path, dtype: Dtype) -> Result<(), IoError> {
    write_atomic(path, |w| w.write_all(&encode_binary(vs, dtype)))
}

/// Writes through a sibling temp file, renamed over `path` on success.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), IoError>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    let io_err = |source| IoError::IoWrite {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w).map_err(io_err)?;
        w.flush().map_err(io_err)?;
    }
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

pub fn encode_binary<T: Scalar>(vs: &VectorSet<T>, dtype: Dtype) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + vs.as_flat().len() * dtype.width());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(vs.count() as u64).to_le_bytes());
    out.extend_from_slice(&(vs.dim() as u64).to_le_bytes());
    out.push(dtype.tag());
    out.extend_from_slice(&[0u8; 7]);
    for &v in vs.as_flat() {
        match dtype {
            Dtype::Float32 => {
                let x: f32 = NumCast::from(v).unwrap_or(f32::NAN);
                out.extend_from_slice(&x.to_le_bytes());
            }
            Dtype::Float64 => {
                let x: f64 = NumCast::from(v).unwrap_or(f64::NAN);
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

pub fn parse_binary<T: Scalar>(bytes: &[u8]) -> Result<VectorSet<T>, IoError> {
    if bytes.is_empty() {
        return Err(IoError::EmptyFile);
    }
    if bytes.len() < HEADER_LEN {
        return Err(IoError::MalformedHeader(format!(
            "header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    if &bytes[0..4] != MAGIC {
        return Err(IoError::MalformedHeader("bad magic, expected \"OPDR\"".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(IoError::MalformedHeader(format!("unsupported version {version}")));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let dtype = Dtype::from_tag(bytes[24])
        .ok_or_else(|| IoError::MalformedHeader(format!("unknown dtype tag {}", bytes[24])))?;
    if bytes[25..32].iter().any(|&b| b != 0) {
        return Err(IoError::MalformedHeader("non-zero padding in bytes 25..32".into()));
    }
    if count == 0 {
        return Err(IoError::Vector(VectorError::Empty));
    }
    if dim == 0 {
        return Err(IoError::Vector(VectorError::ZeroDim));
    }
    let values = count
        .checked_mul(dim)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| IoError::MalformedHeader(format!("count {count} x dim {dim} overflows")))?;
    let payload_len = values
        .checked_mul(dtype.width())
        .ok_or_else(|| IoError::MalformedHeader("payload size overflows".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < payload_len {
        return Err(IoError::Truncated {
            expected: payload_len,
            found: payload.len(),
        });
    }
    if payload.len() > payload_len {
        return Err(IoError::TrailingBytes {
            extra: payload.len() - payload_len,
        });
    }
    let mut data = Vec::with_capacity(values);
    for (i, chunk) in payload.chunks_exact(dtype.width()).enumerate() {
        let v = match dtype {
            Dtype::Float32 => f32::from_le_bytes(chunk.try_into().unwrap()) as f64,
            Dtype::Float64 => f64::from_le_bytes(chunk.try_into().unwrap()),
        };
        if !v.is_finite() {
            return Err(IoError::NonFiniteAt {
                offset: HEADER_LEN + i * dtype.width(),
            });
        }
        data.push(<T as NumCast>::from(v).unwrap_or_else(T::nan));
    }
    Ok(VectorSet::from_flat(count as usize, dim as usize, data)?)
}

pub fn parse_csv<T: Scalar>(bytes: &[u8]) -> Result<VectorSet<T>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut data = Vec::new();
    let mut dim = None;
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| IoError::Csv(e.to_string()))?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *dim.get_or_insert(record.len());
        if record.len() != expected {
            return Err(IoError::InconsistentRowWidth {
                row: rows,
                expected,
                found: record.len(),
            });
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| IoError::Parse {
                row: rows,
                col,
                text: field.to_string(),
            })?;
            if !v.is_finite() {
                return Err(IoError::NonFiniteValue { row: rows });
            }
            data.push(<T as NumCast>::from(v).unwrap_or_else(T::nan));
        }
        rows += 1;
    }
    match dim {
        None => Err(IoError::EmptyFile),
        Some(d) => Ok(VectorSet::from_flat(rows, d, data)?),
    }
}

/// Writes one line per point using the shortest round-trip decimal form.
pub fn write_csv<T: Scalar, W: Write + ?Sized>(vs: &VectorSet<T>, w: &mut W) -> std::io::Result<()> {
    for row in vs.rows() {
        let mut first = true;
        for v in row {
            if !first {
                w.write_all(b",")?;
            }
            first = false;
            write!(w, "{v}")?;
        }
        w.write_all(b"\n")?;
    }
    Ok(())
}
