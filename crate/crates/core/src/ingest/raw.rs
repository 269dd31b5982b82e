use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Dims, Field4D};

pub const HEADER_FILE: &str = "header.json";
pub const DATA_FILE: &str = "data.f32";

const DTYPE: &str = "f32le";
const ORDER: &str = "tzyx";

/// JSON sidecar describing a flat little-endian `f32` payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawVolumeHeader {
    pub dims: Dims,
    pub dtype: String,
    pub order: String,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub units: String,
}

impl RawVolumeHeader {
    pub fn for_field(field: &Field4D) -> Self {
        Self {
            dims: field.dims(),
            dtype: DTYPE.into(),
            order: ORDER.into(),
            name: field.name.clone(),
            units: field.units.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dtype != DTYPE {
            return Err(Error::UnsupportedFormat(format!(
                "dtype {:?} (only {DTYPE:?} is supported)",
                self.dtype
            )));
        }
        if self.order != ORDER {
            return Err(Error::UnsupportedFormat(format!(
                "order {:?} (only {ORDER:?} is supported)",
                self.order
            )));
        }
        self.dims.validate()
    }
}

/// Reads a header + payload pair. Non-finite samples become 0.0 and are counted
/// in [`Field4D::non_finite_replaced`].
pub fn read_raw_volume(header_path: &Path, data_path: &Path) -> Result<Field4D> {
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: RawVolumeHeader = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: header_path.to_owned(),
        source: e,
    })?;
    header.validate()?;

    let expected = header.dims.len() as u64 * 4;
    let actual = fs::metadata(data_path)
        .map_err(|e| Error::io(data_path, e))?
        .len();
    if actual != expected {
        return Err(Error::CorruptInput {
            path: data_path.to_owned(),
            expected,
            actual,
        });
    }
    let bytes = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
    if bytes.len() as u64 != expected {
        return Err(Error::CorruptInput {
            path: data_path.to_owned(),
            expected,
            actual: bytes.len() as u64,
        });
    }

    let mut replaced = 0u64;
    let values = bytes
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            if v.is_finite() {
                f64::from(v)
            } else {
                replaced += 1;
                0.0
            }
        })
        .collect();
    let mut field = Field4D::new(header.dims, values, header.name, header.units)?;
    field.non_finite_replaced = replaced;
    Ok(field)
}

/// Values are narrowed to `f32`; fields read from this format round-trip exactly.
pub fn write_raw_volume(field: &Field4D, header_path: &Path, data_path: &Path) -> Result<()> {
    let header = serde_json::to_string_pretty(&RawVolumeHeader::for_field(field))
        .expect("header serializes");
    fs::write(header_path, header + "\n").map_err(|e| Error::io(header_path, e))?;

    let file = fs::File::create(data_path).map_err(|e| Error::io(data_path, e))?;
    let mut w = BufWriter::new(file);
    for &v in field.values() {
        w.write_all(&(v as f32).to_le_bytes())
            .map_err(|e| Error::io(data_path, e))?;
    }
    w.flush().map_err(|e| Error::io(data_path, e))
}

pub fn read_raw_dir(dir: &Path) -> Result<Field4D> {
    read_raw_volume(&dir.join(HEADER_FILE), &dir.join(DATA_FILE))
}

pub fn write_raw_dir(field: &Field4D, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_raw_volume(field, &dir.join(HEADER_FILE), &dir.join(DATA_FILE))
}
