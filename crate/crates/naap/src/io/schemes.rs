//! Scheme documents, either a JSON array or one JSON object per line:
//!
//! ```json
//! {"id": "arch_000", "input": [32, 32, 3], "layers": [{"out_width": 16, "kernel": 3, "stride": 1}]}
//! ```
//!
//! `input` defaults to 32x32x3 and `skip` to false.

use std::collections::HashSet;
use std::path::Path;

use naap_core::scheme::{ArchitectureScheme, LayerDescription, DEFAULT_INPUT};
use serde::{Deserialize, Serialize};

use super::{read_to_string, write_file};
use crate::error::{DataError, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDocument {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<[u32; 3]>,
    pub layers: Vec<LayerDescription>,
}

impl SchemeDocument {
    pub fn from_scheme(scheme: &ArchitectureScheme) -> Self {
        let input = scheme.input();
        Self {
            id: scheme.name().to_string(),
            input: (input != DEFAULT_INPUT).then_some([input.0, input.1, input.2]),
            layers: scheme.descriptions(),
        }
    }

    pub fn to_scheme(&self) -> Result<ArchitectureScheme, naap_core::scheme::SchemeError> {
        let input = self.input.map_or(DEFAULT_INPUT, |[h, w, c]| (h, w, c));
        ArchitectureScheme::from_descriptions(self.id.clone(), input, &self.layers)
    }
}

/// Parses and validates scheme documents. `path` only labels errors.
pub fn parse_schemes(text: &str, path: &Path) -> Result<Vec<ArchitectureScheme>, DataError> {
    let err = |line: usize, id: Option<&str>, message: String| DataError::Scheme {
        path: path.to_path_buf(),
        line,
        id: id.map(str::to_string),
        message,
    };
    let docs: Vec<(usize, SchemeDocument)> = if text.trim_start().starts_with('[') {
        let docs: Vec<SchemeDocument> =
            serde_json::from_str(text).map_err(|e| err(e.line(), None, e.to_string()))?;
        // array elements carry no reliable line of their own; report the position instead
        docs.into_iter()
            .enumerate()
            .map(|(i, d)| (i + 1, d))
            .collect()
    } else {
        let mut docs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc = serde_json::from_str(line).map_err(|e| err(i + 1, None, e.to_string()))?;
            docs.push((i + 1, doc));
        }
        docs
    };
    let mut seen = HashSet::new();
    let mut schemes = Vec::with_capacity(docs.len());
    for (line, doc) in docs {
        if !seen.insert(doc.id.clone()) {
            return Err(err(line, Some(&doc.id), "duplicate id".into()));
        }
        schemes.push(
            doc.to_scheme()
                .map_err(|e| err(line, Some(&doc.id), e.to_string()))?,
        );
    }
    Ok(schemes)
}

pub fn load_schemes(path: &Path) -> Result<Vec<ArchitectureScheme>, DataError> {
    parse_schemes(&read_to_string(path)?, path)
}

pub fn write_schemes_jsonl(schemes: &[ArchitectureScheme], path: &Path) -> Result<()> {
    let mut out = Vec::new();
    for s in schemes {
        serde_json::to_writer(&mut out, &SchemeDocument::from_scheme(s))
            .map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
    }
    write_file(path, &out)
}
