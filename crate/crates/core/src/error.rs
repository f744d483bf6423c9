use std::path::{Path, PathBuf};

use crate::features::FeatureError;
use crate::flow::FlowError;
use crate::gbdt::GbdtError;
use crate::geo::GeoError;
use crate::sim::SimError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Gbdt(#[from] GbdtError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        Error::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}
