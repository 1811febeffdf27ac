//! JSON system description files.
//!
//! Indices in files are 1-based: node `1..=nodes`, label `1..=num_labels`.
//! Matrices are row-major, one per label in label order.

use std::path::Path;

use cjsr_core::automaton::{Edge, LiftedSystem};
use cjsr_core::{Automaton, AutomatonError, Matrix, SwitchedSystem, SystemError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("unsupported schema_version {0} (this build reads {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("field `matrices[{label}]`: matrix is {rows}x{cols}, but dim is {dim}")]
    DimensionMismatch {
        label: usize,
        rows: usize,
        cols: usize,
        dim: usize,
    },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Provenance of a lifted file: the depth and, per label, the base word it
/// stands for (1-based base labels, first label acts first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LiftTable {
    pub depth: usize,
    pub words: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    pub dim: usize,
    pub num_labels: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    pub nodes: usize,
    pub edges: Vec<[usize; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lift: Option<LiftTable>,
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}

fn field(field: impl Into<String>, message: impl Into<String>) -> FileError {
    FileError::Field {
        field: field.into(),
        message: message.into(),
    }
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<Self, FileError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|err| {
            let path = err.path().to_string();
            let inner = err.into_inner();
            FileError::Parse {
                line: inner.line(),
                column: inner.column(),
                field: path,
                message: inner.to_string(),
            }
        })
    }

    pub fn read(path: &Path) -> Result<Self, FileError> {
        let text = std::fs::read_to_string(path).map_err(|source| FileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system files always serialize")
    }

    /// Checks shapes and index ranges, then builds the validated system.
    pub fn to_system(&self) -> Result<SwitchedSystem, FileError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(FileError::SchemaVersion(self.schema_version));
        }
        if self.dim == 0 {
            return Err(field("dim", "must be at least 1"));
        }
        if self.matrices.len() != self.num_labels {
            return Err(field(
                "matrices",
                format!("{} matrices for num_labels = {}", self.matrices.len(), self.num_labels),
            ));
        }
        let mut matrices = Vec::with_capacity(self.num_labels);
        for (label, rows) in self.matrices.iter().enumerate() {
            let cols = rows.iter().map(Vec::len).find(|&c| c != self.dim).unwrap_or(self.dim);
            if rows.len() != self.dim || cols != self.dim {
                return Err(FileError::DimensionMismatch {
                    label,
                    rows: rows.len(),
                    cols,
                    dim: self.dim,
                });
            }
            let data = rows.iter().flatten().copied().collect();
            matrices.push(Matrix::new(self.dim, self.dim, data).map_err(SystemError::from)?);
        }
        let mut edges = Vec::with_capacity(self.edges.len());
        for (k, &[from, to, label]) in self.edges.iter().enumerate() {
            for (name, value, max) in [("from", from, self.nodes), ("to", to, self.nodes), ("label", label, self.num_labels)] {
                if value == 0 || value > max {
                    return Err(field(format!("edges[{k}].{name}"), format!("{value} is outside 1..={max}")));
                }
            }
            edges.push(Edge::new(from - 1, to - 1, label - 1));
        }
        if let Some(table) = &self.lift {
            if table.words.len() != self.num_labels {
                return Err(field("lift.words", "needs one word per label"));
            }
            if let Some(k) = table.words.iter().position(|w| w.len() != table.depth) {
                return Err(field(format!("lift.words[{k}]"), format!("length differs from depth {}", table.depth)));
            }
        }
        let aut = Automaton::new(self.nodes, self.num_labels, edges)?;
        Ok(SwitchedSystem::new(aut, matrices)?)
    }

    pub fn from_system(sys: &SwitchedSystem) -> Self {
        let aut = sys.automaton();
        SystemFile {
            schema_version: SCHEMA_VERSION,
            dim: sys.dim(),
            num_labels: aut.num_labels(),
            matrices: sys.matrices().iter().map(Matrix::to_rows).collect(),
            nodes: aut.num_nodes(),
            edges: aut.edges().iter().map(|e| [e.from + 1, e.to + 1, e.label + 1]).collect(),
            lift: None,
        }
    }

    /// The lift as a file whose labels are its distinct words.
    pub fn from_lift(lifted: &LiftedSystem) -> Self {
        let mut file = Self::from_system(&lifted.as_system());
        file.lift = Some(LiftTable {
            depth: lifted.depth(),
            words: lifted
                .word_table()
                .into_iter()
                .map(|w| w.into_iter().map(|l| l + 1).collect())
                .collect(),
        });
        file
    }
}

pub fn load_system(path: &Path) -> Result<SwitchedSystem, FileError> {
    SystemFile::read(path)?.to_system()
}
