//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("edge stream is empty after cleaning")]
    EmptyStream,

    #[error("graph is empty: {0}")]
    EmptyGraph(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("node {0} not present in graph or has degree zero")]
    MissingNode(u32),

    #[error("vocabulary has no row for node {0}")]
    VocabMiss(u32),

    #[error("row mapping mismatch: {0}")]
    RowMismatch(String),

    #[error("non-finite value during training: {0}")]
    NonFinite(String),

    #[error("embedding format error: {0}")]
    EmbeddingFormat(String),

    #[error("could not sample non-edges: {0}")]
    NegativeSampling(String),

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
