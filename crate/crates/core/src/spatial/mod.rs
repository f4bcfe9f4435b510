//! Spatial autocorrelation: binned estimation over location pairs, analytic
//! correlation functions, model fitting and correlation distance.

mod autocorr;
mod fit;
mod model;

pub use autocorr::{
    ensemble_autocorr, estimate_autocorr, estimate_autocorr_pooled, AutocorrBin, AutocorrEstimate, ParamSeries,
    DEFAULT_DELTA_D_M, DEFAULT_MIN_PAIRS,
};
pub use fit::{fit_corr_model, FitOptions};
pub use model::{
    correlation_distance, eval_corr_model, CorrFamily, CorrModel, CorrShape, DEFAULT_SCAN_STEP_M,
};
