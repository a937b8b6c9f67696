//! Binary netpbm reader/writer: P5 (PGM, grayscale) and P6 (PPM, RGB),
//! maxval 255 only. This is the on-disk image format for datasets and for
//! the external-classifier handoff.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::snr::{ImageF, SnrError};

#[derive(Debug, thiserror::Error)]
pub enum PnmError {
    #[error("{path}: {detail}")]
    Format { path: String, detail: String },
    #[error("{path}: unsupported maxval {maxval} (only 255)")]
    UnsupportedMaxval { path: String, maxval: u32 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Shape(#[from] SnrError),
}

fn format_err(path: &Path, detail: impl Into<String>) -> PnmError {
    PnmError::Format { path: path.display().to_string(), detail: detail.into() }
}

fn io_err(path: &Path, source: std::io::Error) -> PnmError {
    PnmError::Io { path: path.display().to_string(), source }
}

/// Reads a P5 or P6 file into a float raster with intensities in 0..255.
pub fn read(path: &Path) -> Result<ImageF, PnmError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    parse(&bytes, path)
}

/// Parses bytes already in memory; `path` is only used in error messages.
pub fn parse(bytes: &[u8], path: &Path) -> Result<ImageF, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(format_err(path, "missing P5/P6 magic")),
    };
    let mut cursor = 2;
    let width = read_header_int(bytes, &mut cursor, path, "width")?;
    let height = read_header_int(bytes, &mut cursor, path, "height")?;
    let maxval = read_header_int(bytes, &mut cursor, path, "maxval")?;
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval {
            path: path.display().to_string(),
            maxval: maxval as u32,
        });
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(cursor) {
        Some(b) if b.is_ascii_whitespace() => cursor += 1,
        _ => return Err(format_err(path, "missing whitespace after maxval")),
    }
    let expected = width * height * channels;
    let raster = bytes
        .get(cursor..cursor + expected)
        .ok_or_else(|| {
            format_err(
                path,
                format!("raster truncated: expected {expected} bytes, have {}", bytes.len() - cursor),
            )
        })?;
    let data = raster.iter().map(|&b| b as f64).collect();
    Ok(ImageF::new(width, height, channels, data)?)
}

fn read_header_int(
    bytes: &[u8],
    cursor: &mut usize,
    path: &Path,
    what: &str,
) -> Result<usize, PnmError> {
    // skip whitespace and '#' comments
    loop {
        match bytes.get(*cursor) {
            Some(b) if b.is_ascii_whitespace() => *cursor += 1,
            Some(b'#') => {
                while let Some(&b) = bytes.get(*cursor) {
                    *cursor += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(format_err(path, format!("missing {what}"))),
        }
    }
    let start = *cursor;
    while matches!(bytes.get(*cursor), Some(b) if b.is_ascii_digit()) {
        *cursor += 1;
    }
    if *cursor == start {
        return Err(format_err(path, format!("malformed {what}")));
    }
    let text = std::str::from_utf8(&bytes[start..*cursor]).expect("ascii digits");
    let value: usize = text
        .parse()
        .map_err(|_| format_err(path, format!("{what} out of range")))?;
    if value == 0 {
        return Err(format_err(path, format!("{what} must be >= 1")));
    }
    Ok(value)
}

/// Encodes a raster as P5 (1 channel) or P6 (3 channels), clamping each
/// entry to [0, 255] and rounding to the nearest integer.
pub fn encode(image: &ImageF) -> Result<Vec<u8>, PnmError> {
    let magic = match image.channels() {
        1 => "P5",
        3 => "P6",
        c => {
            return Err(PnmError::Format {
                path: "<memory>".to_string(),
                detail: format!("cannot encode {c}-channel raster as PNM"),
            })
        }
    };
    let mut out = Vec::with_capacity(image.data().len() + 32);
    write!(out, "{magic}\n{} {}\n255\n", image.width(), image.height()).expect("vec write");
    out.extend(image.data().iter().map(|&v| v.clamp(0.0, 255.0).round() as u8));
    Ok(out)
}

/// Writes a raster to disk as P5/P6.
pub fn write(image: &ImageF, path: &Path) -> Result<(), PnmError> {
    let bytes = encode(image)?;
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}
