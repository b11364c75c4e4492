//! File formats: dataset CSV, scheme documents, split JSON.

mod dataset_csv;
mod schemes;

use std::fs;
use std::path::Path;

use naap_core::dataset::Split;

pub use dataset_csv::{
    extend, load_csv, normalize_header, read_csv, write_csv, AliasTable, CsvLayout,
    NEW_SCHEME_COLUMNS,
};
pub use schemes::{load_schemes, parse_schemes, write_schemes_jsonl, SchemeDocument};

use crate::error::{DataError, Error, Result};

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let wrap = |source| Error::Write {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(wrap)?;
    }
    fs::write(path, bytes).map_err(wrap)
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// `{"kind": "...", "train": [...], "test": [...]}`
pub fn write_split_json(split: &Split, path: &Path) -> Result<()> {
    let json = serde_json::to_vec_pretty(split).map_err(|e| Error::Internal(e.to_string()))?;
    write_file(path, &json)
}

pub fn read_split_json(path: &Path) -> Result<Split, DataError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| DataError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
