//! Readers and writers for every on-disk artifact.
//!
//! All binary fields are little-endian. Readers re-validate what they load and
//! fail instead of constructing out-of-contract values.

mod config;
mod depth;
mod ply;
mod frames;
mod tracks;
mod trajectory;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub use config::{OrbitConfig, PathsConfig, PipelineConfig};
pub use depth::{read_depth, read_pfm, read_png16, sidecar_path, write_pfm, write_png16, DepthFormat, DepthRange};
pub use ply::{read_ply, read_ply_any, read_ply_soup, write_ply, PlyMesh};
pub use frames::{
    read_frame, read_frame_sequence, read_mask, read_mask_sequence, write_color_sequence, write_frame, write_mask,
    write_mask_sequence,
};
pub use tracks::{parse_tracks, read_tracks, TrackRecord};
pub use trajectory::{read_trajectory, write_trajectory};

/// `prefix_%05d.ext` file name for frame `t`.
pub fn sequence_name(prefix: &str, t: usize, ext: &str) -> String {
    format!("{prefix}_{t:05}.{ext}")
}

/// Files in `dir` with the given extension (case-insensitive), sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let matches = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if matches && path.is_file() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
