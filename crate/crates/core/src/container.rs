//! Binary container for float arrays: a 16-byte header (magic `LCW1`,
//! then `n`, `channels`, `length` as little-endian u32) followed by
//! little-endian f64 arrays.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"LCW1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: bad magic (not an LCW1 container)")]
    BadMagic { path: String },
    #[error("{path}: payload holds {got} f64 values, expected {expected}")]
    SizeMismatch {
        path: String,
        got: usize,
        expected: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub n: u32,
    pub channels: u32,
    pub length: u32,
}

/// Write a header followed by the given arrays, in order.
pub fn write_container(
    path: &Path,
    header: ContainerHeader,
    blocks: &[&[f64]],
) -> Result<(), ContainerError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&header.n.to_le_bytes())?;
    w.write_all(&header.channels.to_le_bytes())?;
    w.write_all(&header.length.to_le_bytes())?;
    for block in blocks {
        for v in *block {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a header and the full f64 payload that follows it.
pub fn read_container(path: &Path) -> Result<(ContainerHeader, Vec<f64>), ContainerError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ContainerError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)?;
    let n = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u32buf)?;
    let channels = u32::from_le_bytes(u32buf);
    r.read_exact(&mut u32buf)?;
    let length = u32::from_le_bytes(u32buf);

    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(ContainerError::SizeMismatch {
            path: path.display().to_string(),
            got: bytes.len(),
            expected: bytes.len() / 8 * 8,
        });
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((ContainerHeader { n, channels, length }, data))
}

/// Check that a payload length matches what the caller expects.
pub fn expect_len(path: &Path, data: &[f64], expected: usize) -> Result<(), ContainerError> {
    if data.len() != expected {
        return Err(ContainerError::SizeMismatch {
            path: path.display().to_string(),
            got: data.len(),
            expected,
        });
    }
    Ok(())
}
