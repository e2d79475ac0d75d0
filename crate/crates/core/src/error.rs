use thiserror::Error;

/// Errors raised by the scattering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("certification failed: {condition} violated near {witness:?} (margin {margin:.3e})")]
    Certification { condition: String, witness: [[f64; 2]; 2], margin: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no bracket: {0}")]
    NoBracket(String),

    #[error("expected 2 shadow-boundary roots, found {found}")]
    RootCount { found: usize },

    #[error("not in the open illuminated region: {0}")]
    NotIlluminated(String),

    #[error("under-resolved grid: N = {n}, need at least {required}")]
    Resolution { n: usize, required: usize },

    #[error("near interior resonance (condition estimate {cond:.3e}); perturb k")]
    NearResonance { cond: f64 },

    #[error("solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("target {distance:.3e} from boundary, below the minimum {d_min:.3e}")]
    NearBoundary { distance: f64, d_min: f64 },

    #[error("series not converged: {0}")]
    Truncation(String),

    #[error("degenerate stationary point: {0}")]
    Degenerate(String),

    #[error("not implemented: {0}")]
    NotImplemented(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::OutOfRange(_) => "out_of_range",
            Error::Geometry(_) => "geometry",
            Error::Certification { .. } => "certification",
            Error::Precondition(_) => "precondition",
            Error::NoBracket(_) => "no_bracket",
            Error::RootCount { .. } => "root_count",
            Error::NotIlluminated(_) => "not_illuminated",
            Error::Resolution { .. } => "resolution",
            Error::NearResonance { .. } => "near_resonance",
            Error::Residual { .. } => "residual",
            Error::NearBoundary { .. } => "near_boundary",
            Error::Truncation(_) => "truncation",
            Error::Degenerate(_) => "degenerate",
            Error::NotImplemented(_) => "not_implemented",
            Error::NonFinite(_) => "non_finite",
            Error::Config(_) => "config",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }

    /// Process exit status: 2 for bad input, 3 for geometry, 4 for numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Format(_) => 2,
            Error::Geometry(_) | Error::Certification { .. } => 3,
            _ => 4,
        }
    }
}
