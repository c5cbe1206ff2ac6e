use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tiff: {0}")]
    Tiff(String),

    #[error("shapefile: {0}")]
    Shapefile(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("grid: {0}")]
    Grid(String),

    #[error("raster: {0}")]
    Raster(String),

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("model: {0}")]
    Model(String),

    #[error("eval: {0}")]
    Eval(String),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error with any context layers peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }
}
