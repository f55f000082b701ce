use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate out of range: lat {lat}, lon {lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },

    #[error("degenerate {0} span in raster spec")]
    DegenerateRaster(&'static str),

    #[error("invalid raster spec: {0}")]
    InvalidRaster(String),

    #[error("duplicate forecast release at {0}")]
    DuplicateRelease(String),

    #[error("invalid forecast release at {time}: {reason}")]
    InvalidRelease { time: String, reason: String },

    #[error("releases belong to more than one site")]
    MixedSites,

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("negative {what}: {value}")]
    Negative { what: &'static str, value: f64 },

    #[error("log wind law undefined: heights must exceed roughness length (z1={z1}, z2={z2}, z0={z0})")]
    InvalidHeights { z1: f64, z2: f64, z0: f64 },

    #[error("non-positive value {value} at day index {index}; cannot take logarithm")]
    NonPositiveValue { index: usize, value: f64 },

    #[error("series transform mismatch: expected {expected}, found {found}")]
    TransformMismatch {
        expected: &'static str,
        found: &'static str,
    },

    #[error("gaps longer than {max_gap_days} days: {}", format_ranges(.gaps))]
    GapTooLong {
        max_gap_days: usize,
        gaps: Vec<(NaiveDate, NaiveDate)>,
    },

    #[error("series has missing values (first at {0}); fill gaps before fitting")]
    IncompleteSeries(NaiveDate),

    #[error("series too short: need at least {needed} values, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("rank-deficient design matrix: {0}")]
    RankDeficient(String),

    #[error("singular AR design: {0}")]
    SingularDesign(String),

    #[error("degenerate residual variance: fitted b0 = {0}")]
    DegenerateVariance(f64),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("negative lag distance {0}")]
    NegativeLag(f64),

    #[error("no site pairs within max lag {0} km")]
    NoPairs(f64),

    #[error("too few bins: need at least 4 non-empty bins, got {0}")]
    TooFewBins(usize),

    #[error("invalid variogram model: {0}")]
    InvalidModel(String),

    #[error("variogram fit failed: no candidate produced a finite objective")]
    FitFailed,

    #[error("duplicate sites at indices {0} and {1}")]
    DuplicateSites(usize, usize),

    #[error("ill-conditioned kriging system (condition estimate {0:.3e})")]
    IllConditioned(f64),

    #[error("kriging solve inaccurate: relative residual {0:.3e}")]
    SolveResidual(f64),

    #[error("negative kriging variance {0:.3e}; variogram model is not valid for these sites")]
    NegativeKrigingVariance(f64),

    #[error("kriging failed at cell (lat {lat}, lon {lon}): {source}")]
    CellFailed {
        lat: f64,
        lon: f64,
        source: Box<Error>,
    },

    #[error("missing AR lag values on: {}", format_dates(.0))]
    MissingLags(Vec<NaiveDate>),

    #[error("zero actual value at index {0}")]
    ZeroActual(usize),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_ranges(gaps: &[(NaiveDate, NaiveDate)]) -> String {
    gaps.iter()
        .map(|(a, b)| format!("{a}..{b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn format_dates(dates: &[NaiveDate]) -> String {
    dates
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}
