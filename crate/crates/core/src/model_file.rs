//! Versioned JSON persistence for [`Model`].
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "learning_rate": 0.1,
//!   "n_features": 1,
//!   "feature_names": ["x"],
//!   "trees": [
//!     {"kind": "split", "feature_index": 0, "threshold": 3.5,
//!      "left":  {"kind": "leaf", "leaf_id": 1, "gamma": 0.6666666666666666},
//!      "right": {"kind": "leaf", "leaf_id": 2, "gamma": -0.6666666666666666}}
//!   ]
//! }
//! ```
//!
//! Floats are written in shortest round-trip form, so a reloaded model
//! predicts bit-identically.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::booster::{Model, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::tree::{Node, RegressionTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub format_version: u64,
    pub learning_rate: f64,
    pub n_features: usize,
    pub feature_names: Vec<String>,
    pub trees: Vec<Node>,
}

impl From<&Model> for ModelFile {
    fn from(model: &Model) -> Self {
        Self {
            format_version: model.format_version(),
            learning_rate: model.learning_rate(),
            n_features: model.n_features(),
            feature_names: model.feature_names().to_vec(),
            trees: model.trees().iter().map(|t| t.root().clone()).collect(),
        }
    }
}

impl TryFrom<ModelFile> for Model {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        let trees = file
            .trees
            .into_iter()
            .enumerate()
            .map(|(m, root)| {
                RegressionTree::from_root(root).map_err(|e| invalid(format!("tree {}: {e}", m + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Model::new(
            trees,
            file.learning_rate,
            file.n_features,
            file.feature_names,
        )
        .map_err(|e| invalid(e.to_string()))
    }
}

fn invalid(message: String) -> Error {
    Error::ModelFormat { offset: 0, message }
}

pub fn serialize(model: &Model) -> String {
    let mut s = serde_json::to_string_pretty(&ModelFile::from(model))
        .expect("model file contains only finite numbers and strings");
    s.push('\n');
    s
}

pub fn deserialize(text: &str) -> Result<Model> {
    // Read the version first so a newer file is reported as such rather
    // than as a schema mismatch.
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
    match value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
    {
        Some(FORMAT_VERSION) => {}
        Some(found) => {
            return Err(Error::UnsupportedVersion {
                found,
                expected: FORMAT_VERSION,
            })
        }
        None => return Err(invalid("missing or non-integer format_version".into())),
    }
    let file: ModelFile = serde_json::from_str(text).map_err(|e| parse_error(text, &e))?;
    Model::try_from(file)
}

pub fn write_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serialize(model)).map_err(|e| Error::io(path, e))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    deserialize(&text)
}

fn parse_error(text: &str, err: &serde_json::Error) -> Error {
    Error::ModelFormat {
        offset: byte_offset(text, err.line(), err.column()),
        message: err.to_string(),
    }
}

/// Converts serde_json's 1-based line and byte column into a 0-based
/// byte offset into `text`.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    (line_start + column.saturating_sub(1)).min(text.len())
}
