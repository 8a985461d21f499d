use thiserror::Error;

/// Errors produced by grid construction, field operations and norms.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid configuration: {0}")]
    GridConfig(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("preset parameters: {0}")]
    PresetParams(String),

    #[error("expected a {expected} field, found {found}")]
    Representation {
        expected: &'static str,
        found: &'static str,
    },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected {expected} components, found {found}")]
    ComponentCount { expected: usize, found: usize },

    #[error("axis {axis} out of range for dimension {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("heat semigroup requires t >= 0, got {0}")]
    NegativeTime(f64),

    #[error("multiplier symbol is not finite at xi = {0:?}")]
    NonFiniteSymbol([f64; 3]),

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("region of cells is empty")]
    EmptyRegion,

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("block index j = {j} outside stored range [{lo}, {hi}]")]
    BlockIndex { j: i32, lo: i32, hi: i32 },

    #[error("annulus index k = {k} outside resolvable range [{lo}, {hi}]")]
    AnnulusIndex { k: i32, lo: i32, hi: i32 },

    #[error("hypothesis violated: p <= n/2 (p = {p}, n = {n})")]
    MildPTooSmall { p: f64, n: usize },

    #[error("hypothesis violated: p must be finite")]
    MildPInfinite,

    #[error("hypothesis violated: q must satisfy 1 <= q <= inf (q = {q})")]
    MildQRange { q: f64 },

    #[error("hypothesis violated: alpha >= min{{1 - n/2p, n/2p}} = {bound} (alpha = {alpha})")]
    MildAlphaWindow { alpha: f64, bound: f64 },

    #[error("hypothesis violated: alpha must be >= 0 (alpha = {alpha})")]
    MildAlphaNegative { alpha: f64 },

    #[error("time grid: {0}")]
    TimeGrid(String),

    #[error("time t = {t} is not a stored grid time in [{t_min}, {t_max}]")]
    TimeOutsideGrid { t: f64, t_min: f64, t_max: f64 },

    #[error("time step {dt} exceeds advective stability limit {limit}")]
    CflViolation { dt: f64, limit: f64 },

    #[error("bad magic {found:?}, expected \"BHF1\"")]
    BadMagic { found: [u8; 4] },

    #[error("truncated field file: expected {expected} bytes of payload, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("field file header: {0}")]
    Header(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
