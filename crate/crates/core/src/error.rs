use thiserror::Error;

/// Failure modes of the simulator. The `kind` string of each variant is
/// stable and is what the CLI and config validator report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid-resolution: {0}")]
    GridResolution(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("degenerate-spec: {0}")]
    DegenerateSpec(String),
    #[error("shape-mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dispersion-range: {0}")]
    DispersionRange(String),
    #[error("evanescent: {0}")]
    Evanescent(String),
    #[error("aperture-resolution: {0}")]
    ApertureResolution(String),
    #[error("sampling-miss: {0}")]
    SamplingMiss(String),
    #[error("grating-resolution: {0}")]
    GratingResolution(String),
    #[error("order-overlap: {0}")]
    OrderOverlap(String),
    #[error("degenerate-image: {0}")]
    DegenerateImage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GridResolution(_) => "grid-resolution",
            Error::Domain(_) => "domain",
            Error::DegenerateSpec(_) => "degenerate-spec",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::DispersionRange(_) => "dispersion-range",
            Error::Evanescent(_) => "evanescent",
            Error::ApertureResolution(_) => "aperture-resolution",
            Error::SamplingMiss(_) => "sampling-miss",
            Error::GratingResolution(_) => "grating-resolution",
            Error::OrderOverlap(_) => "order-overlap",
            Error::DegenerateImage(_) => "degenerate-image",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
