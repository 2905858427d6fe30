//! Restart dumps: little-endian `b"FSNP"`, `u32` version, `f64` time,
//! `u64` node count, then one `f64` per node.

use std::path::Path;

use super::{io_err, IoError};
use crate::fem::TemperatureField;

const MAGIC: &[u8; 4] = b"FSNP";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER: usize = 4 + 4 + 8 + 8;

pub fn snapshot_write(field: &TemperatureField, path: impl AsRef<Path>) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, encode(field, SNAPSHOT_VERSION)).map_err(io_err(path))
}

fn encode(field: &TemperatureField, version: u32) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER + 8 * field.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&version.to_le_bytes());
    buf.extend_from_slice(&field.time.to_le_bytes());
    buf.extend_from_slice(&(field.len() as u64).to_le_bytes());
    for v in &field.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

/// Reads a dump and checks it against the mesh node count.
pub fn snapshot_read(
    path: impl AsRef<Path>,
    expected_nodes: usize,
) -> Result<TemperatureField, IoError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    decode(&bytes, expected_nodes, &path.display().to_string())
}

fn decode(bytes: &[u8], expected_nodes: usize, path: &str) -> Result<TemperatureField, IoError> {
    let path = path.to_string();
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(IoError::BadMagic { path });
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != SNAPSHOT_VERSION {
        return Err(IoError::Version {
            path,
            found: version,
            expected: SNAPSHOT_VERSION,
        });
    }
    if bytes.len() < HEADER {
        return Err(IoError::Truncated { path });
    }
    let time = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    if n != expected_nodes {
        return Err(IoError::NodeCount {
            path,
            found: n,
            expected: expected_nodes,
        });
    }
    if bytes.len() != HEADER + 8 * n {
        return Err(IoError::Truncated { path });
    }
    let values = bytes[HEADER..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TemperatureField { values, time })
}
