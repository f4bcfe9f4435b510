use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ingestion / validation
    #[error("DuplicateLocationId: location id {0} appears more than once")]
    DuplicateLocationId(u32),
    #[error("UnknownRxId: PDP references rx_id {0} with no matching location")]
    UnknownRxId(u32),
    #[error("NonMonotoneDelays: delays of a PDP at rx_id {rx_id} are not strictly increasing")]
    NonMonotoneDelays { rx_id: u32 },
    #[error("DelaySpacingBelowResolution: rx_id {rx_id} has samples {spacing_ns} ns apart (bin width {bin_width_ns} ns)")]
    DelaySpacingBelowResolution {
        rx_id: u32,
        spacing_ns: f64,
        bin_width_ns: f64,
    },
    #[error("NonPositivePower: rx_id {rx_id} has a non-positive or non-finite power sample")]
    NonPositivePower { rx_id: u32 },
    #[error("BelowNoiseThreshold: rx_id {rx_id} has a sample {below_peak_db:.3} dB below its PDP peak (threshold {threshold_db} dB)")]
    BelowNoiseThreshold {
        rx_id: u32,
        below_peak_db: f64,
        threshold_db: f64,
    },
    #[error("InvalidValue: {0}")]
    InvalidValue(String),

    // pdp-stats
    #[error("EmptyInput: {0}")]
    EmptyInput(&'static str),
    #[error("MixedRxIds: directional PDPs belong to rx_id {0} and {1}")]
    MixedRxIds(u32, u32),
    #[error("ZeroPower: total power is zero")]
    ZeroPower,
    #[error("ResultantZero: power-weighted angular resultant vanishes, angular spread is unbounded")]
    ResultantZero,

    // path loss
    #[error("DistanceBelowReference: distance {0} m is below 1 m reference")]
    DistanceBelowReference(f64),
    #[error("InsufficientSamples: {op} needs at least {needed} samples, got {got}")]
    InsufficientSamples {
        op: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("DegenerateDistances: all samples share one T-R distance")]
    DegenerateDistances,

    // spatial stats
    #[error("TooFewEntries: autocorrelation needs at least 2 entries, got {0}")]
    TooFewEntries(usize),
    #[error("InsufficientBins: correlation fit needs at least 3 populated bins, got {0}")]
    InsufficientBins(usize),
    #[error("NonConvergence: refinement did not converge within {0} iterations")]
    NonConvergence(usize),
    #[error("NeverCrosses: correlation stays at or above 1/e up to {0} m")]
    NeverCrosses(f64),

    // files
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Process exit codes used by the command-line front end.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const PARSE: i32 = 2;
    pub const PRECONDITION: i32 = 3;
    pub const NON_CONVERGENCE: i32 = 4;
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            DuplicateLocationId(_)
            | UnknownRxId(_)
            | NonMonotoneDelays { .. }
            | DelaySpacingBelowResolution { .. }
            | NonPositivePower { .. }
            | BelowNoiseThreshold { .. }
            | InvalidValue(_)
            | DistanceBelowReference(_)
            | Parse { .. }
            | Schema { .. }
            | Io { .. } => exit::PARSE,
            NonConvergence(_) => exit::NON_CONVERGENCE,
            EmptyInput(_)
            | MixedRxIds(..)
            | ZeroPower
            | ResultantZero
            | InsufficientSamples { .. }
            | DegenerateDistances
            | TooFewEntries(_)
            | InsufficientBins(_)
            | NeverCrosses(_) => exit::PRECONDITION,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidValue(msg.into())
    }
}
