use alloc::string::String;

/// Errors produced by the core pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("malformed PNM header: {0}")]
    PnmHeader(String),
    #[error("unsupported PNM maxval {0} (only 255 is accepted)")]
    PnmMaxval(u32),
    #[error("truncated PNM payload: expected {expected} bytes, found {found}")]
    PnmTruncated { expected: usize, found: usize },

    #[error("expected a {expected}-channel raster, got {found} channels")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("invalid raster dimensions {width}x{height}x{channels}")]
    InvalidDimensions {
        width: usize,
        height: usize,
        channels: usize,
    },
    #[error("box ({x0}, {y0}, {w}x{h}) does not fit inside a {width}x{height} raster")]
    BoxOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },

    #[error("requested {requested} superpixels but the image has only {pixels} pixels")]
    TooManySuperpixels { requested: usize, pixels: usize },
    #[error("binary image contains no foreground region")]
    NoRegion,
    #[error("crop side {side} exceeds image dimension {limit}")]
    CropTooLarge { side: usize, limit: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter vector length {found} does not match {expected} free parameters")]
    ParamLength { expected: usize, found: usize },
    #[error("freeze count {requested} exceeds {available} parameterized layers")]
    FreezeOutOfRange { requested: usize, available: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("metric {0} is undefined (zero denominator)")]
    UndefinedMetric(&'static str),
    #[error("class {class} has {size} members, fewer than k = {k}")]
    ClassTooSmall { class: usize, size: usize, k: usize },
    #[error("both classes are required, found only one")]
    SingleClass,
    #[error("need at least {needed} values, got {found}")]
    TooFewValues { needed: usize, found: usize },

    #[error("disc of radius {radius} cannot fit inside a {width}x{height} image")]
    DiscTooLarge { radius: f64, width: usize, height: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
