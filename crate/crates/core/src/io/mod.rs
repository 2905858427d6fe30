//! Output files: legacy VTK snapshots, probe time series and binary restart dumps.
//!
//! A run writes into one directory:
//! `step_%06d.vtk`, `probes.csv` and `restart_%06d.bin`.

mod probes;
mod snapshot;
mod vtk;

pub use probes::{write_probes, ProbeWriter};
pub use snapshot::{snapshot_read, snapshot_write, SNAPSHOT_VERSION};
pub use vtk::{format_vtk, write_vtk};

use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: not a snapshot file")]
    BadMagic { path: String },
    #[error("{path}: snapshot format version {found}, expected version {expected}")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
    #[error("{path}: snapshot holds {found} nodes but the mesh has {expected}")]
    NodeCount {
        path: String,
        found: usize,
        expected: usize,
    },
    #[error("{path}: truncated snapshot")]
    Truncated { path: String },
    #[error("mesh and field disagree: {nodes} nodes, {values} values")]
    FieldSize { nodes: usize, values: usize },
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn vtk_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("step_{step:06}.vtk"))
}

pub fn restart_path(dir: &Path, step: usize) -> PathBuf {
    dir.join(format!("restart_{step:06}.bin"))
}

pub fn probes_path(dir: &Path) -> PathBuf {
    dir.join("probes.csv")
}
