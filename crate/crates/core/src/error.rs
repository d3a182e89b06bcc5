use std::path::PathBuf;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid disparity range: beta ({beta}) must exceed alpha ({alpha})")]
    InvalidRange { alpha: f64, beta: f64 },
    #[error("index-range bins need alpha > 0, got {alpha}")]
    InvalidLogRange { alpha: f64 },
    #[error("at least 2 bins are required, got {0}")]
    TooFewBins(usize),
    #[error("invalid probability mass: {0}")]
    InvalidPmf(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("coverage must lie in (0, 1), got {0}")]
    InvalidCoverage(f64),
    #[error("non-finite disparity label {0}")]
    NonFiniteLabel(f64),
    #[error("mask selects no pixels")]
    EmptyMask,
    #[error("image {height}x{width} is too small for census window {window}")]
    ImageTooSmall {
        height: usize,
        width: usize,
        window: usize,
    },
    #[error("census window must be odd and in 3..=11, got {0}")]
    InvalidWindow(usize),
    #[error("cost volume needs a uniform layout with integer edges and integer bin width")]
    NonUniformLayout,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    DivergentLoss { epoch: usize, loss: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding bank is empty")]
    EmptyBank,
    #[error("input is empty")]
    EmptyInput,
    #[error("mean EPE is zero; AUSE normalizer is degenerate")]
    ZeroNormalizer,
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("disparity {value} outside [{lo}, {hi}]")]
    OutOfRangeDisparity { value: f64, lo: f64, hi: f64 },
    #[error("bad magic: {0}")]
    BadMagic(String),
    #[error("truncated payload: needed {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u32),
    #[error("dimension overflow in tensor '{0}'")]
    DimOverflow(String),
    #[error("empty dims in tensor '{0}'")]
    EmptyDims(String),
    #[error("unknown section '{0}'")]
    MissingSection(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
