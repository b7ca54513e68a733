//! Error type shared across the crate.

use std::path::PathBuf;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("scene: missing file {0}")]
    MissingFile(PathBuf),

    #[error("scene: unsupported camera model `{0}` (PINHOLE only)")]
    UnsupportedCameraModel(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error("raster: {0}")]
    Raster(String),

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    /// Stable one-word class used by the CLI for machine-parsable failures.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io(_) => "io",
            Error::Image(_) => "image",
            Error::MissingFile(_) | Error::UnsupportedCameraModel(_) | Error::Scene(_) => "scene",
            Error::Raster(_) => "raster",
            Error::Geometry(_) => "geometry",
            Error::Config(_) => "config",
        }
    }
}
