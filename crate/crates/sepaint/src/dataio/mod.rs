//! File formats and renders.

pub mod checkpoint;
pub mod render;
pub mod smap;

use std::path::{Path, PathBuf};

use sepaint_core::LabelMap;

pub use checkpoint::Checkpoint;
pub use sepaint_core::synth::{synth, SynthSpec};

use crate::error::{Error, Result};

/// `dir/stem_0007.ext`
pub fn numbered(dir: &Path, stem: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{index:04}.{ext}"))
}

/// All `.smap` files directly inside `dir`, in file-name order.
pub fn list_maps(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e == "smap") {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<LabelMap>> {
    let paths = list_maps(dir)?;
    if paths.is_empty() {
        return Err(Error::Usage(format!("no .smap files in {}", dir.display())));
    }
    paths.iter().map(|p| smap::read_smap(p)).collect()
}

pub fn write_dataset(dir: &Path, maps: &[LabelMap]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, map) in maps.iter().enumerate() {
        smap::write_smap(&numbered(dir, "map", i, "smap"), map)?;
    }
    Ok(())
}
