use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not agree. The message names both dimensions.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A layer in a network's weight chain has the wrong shape.
    #[error("layer {layer}: {detail}")]
    LayerShape { layer: usize, detail: String },

    /// Tile size or input extent was zero.
    #[error("invalid tiling: {0}")]
    InvalidTiling(String),

    /// Segment width must satisfy 8/k integer (power-of-two widths only).
    #[error(
        "invalid piecewise segment width k={0}: 8/k must be an integer from a power-of-two family"
    )]
    InvalidSegmentWidth(f64),

    /// A simulator parameter is out of range.
    #[error("invalid simulator config: {0}")]
    InvalidSimConfig(String),

    /// No unit made progress for longer than the total-work bound.
    #[error("simulator deadlock at cycle {cycle}: no unit progressed for {idle} cycles\n{dump}")]
    Deadlock { cycle: u64, idle: u64, dump: String },

    /// Tensor file did not start with the DLT1 magic bytes.
    #[error("bad magic: expected \"DLT1\", found {found:?}")]
    BadMagic { found: [u8; 4] },

    /// Tensor file header declares an unsupported rank.
    #[error("unsupported tensor rank {0} (only rank 2 is defined)")]
    UnsupportedRank(u32),

    /// Tensor file header declares an unsupported element type.
    #[error("unsupported dtype code {0} (only 1 = f32 little-endian is defined)")]
    UnsupportedDtype(u8),

    /// Tensor payload shorter or longer than the header promises.
    #[error("truncated or oversized payload: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },

    /// A tensor value was NaN or infinite.
    #[error("non-finite value at element {index}")]
    NonFinite { index: usize },

    /// A config file contained a key this tool does not define.
    #[error("unknown config key \"{0}\"")]
    UnknownKey(String),

    /// A config value failed to parse for the named key.
    #[error("invalid value for \"{key}\": \"{value}\"")]
    InvalidValue { key: String, value: String },

    /// A required config field was never supplied.
    #[error("missing required config field: {0}")]
    MissingField(&'static str),

    /// Two report runs carried the same label.
    #[error("duplicate run label \"{0}\"")]
    DuplicateLabel(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
