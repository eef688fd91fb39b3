//! Readers for LETOR feature files, rating triples and QA pairs, plus seeded
//! synthetic generators with a planted relevance model.

mod interactions;
mod letor;
mod qa;
mod synth;

use std::path::{Path, PathBuf};

pub use interactions::{parse_interactions, parse_interactions_str, DEFAULT_RATING_THRESHOLD};
pub use letor::{normalize_min_max, parse_letor, parse_letor_str, write_letor};
pub use qa::{parse_qa_pairs, parse_qa_str, QaParse, Vocab};
pub use synth::{
    synth_interactions, synth_qa, synth_retrieval, synth_retrieval_with, PlantedTruth,
    SyntheticSpec,
};

use crate::dataset::DatasetError;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

fn read_file(path: &Path) -> Result<String, DataError> {
    std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        line,
        message: message.into(),
    }
}
