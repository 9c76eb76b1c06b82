//! Ingestion, normalization, splitting, synthetic data and persistence.

pub mod csv;
pub mod model_file;
pub mod normalize;
pub mod synth;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::Dataset;

pub use self::csv::{format_matrix, load_matrix, parse_matrix, save_matrix};
pub use model_file::{load_model, save_model, ModelFile, FORMAT_VERSION};
pub use normalize::{normalize_apply, normalize_fit, normalize_invert};
pub use synth::{synth_traveling_wave, synth_uniform_1d};

/// Prefix length of a chronological train/test split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: usize,
}

/// First `train_count` rows as training data, the rest as test data.
pub fn split_prefix(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    if spec.train_count == 0 || spec.train_count >= data.len() {
        return Err(Error::config(format!(
            "train_count must lie in [1, {}), got {}",
            data.len(),
            spec.train_count
        )));
    }
    Ok((
        data.slice(0, spec.train_count)?,
        data.slice(spec.train_count, data.len())?,
    ))
}

/// Writes `contents` to a temporary file beside `path` and renames it into
/// place, so readers never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.flush().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
