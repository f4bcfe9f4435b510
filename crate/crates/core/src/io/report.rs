use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::LosClass;
use crate::pathloss::ClassFits;
use crate::spatial::{AutocorrEstimate, CorrModel};

/// `fits.json` written by `subthz analyze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitsReport {
    pub freq_ghz: f64,
    pub delta_d_m: f64,
    pub path_loss: ClassFits,
    /// Keyed by parameter tag (`sf`, `ds`, `as`).
    pub correlation: BTreeMap<String, Option<CorrModel>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinJson {
    pub d_k: f64,
    pub rho: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamAutocorr {
    pub bins: Vec<BinJson>,
    pub model: Option<CorrModel>,
}

impl ParamAutocorr {
    pub fn new(est: &AutocorrEstimate, model: Option<CorrModel>) -> Self {
        Self {
            bins: est
                .bins
                .iter()
                .map(|b| BinJson {
                    d_k: b.distance_m,
                    rho: b.rho,
                    pair_count: b.pair_count,
                })
                .collect(),
            model,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassMeans {
    pub los: Option<f64>,
    pub nlos: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointSummary {
    pub rx_id: u32,
    pub los: LosClass,
    pub distance_m: f64,
    pub path_loss_mean_db: f64,
    /// Population standard deviation over realizations.
    pub path_loss_std_db: f64,
}

/// `summary.json` written by `subthz simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryReport {
    pub seed: u64,
    pub realizations: usize,
    pub freq_ghz: f64,
    pub waypoints: Vec<WaypointSummary>,
    /// Mean of the per-realization CI fits.
    pub path_loss: ClassFits,
    pub delay_spread_mean_ns: ClassMeans,
    pub angular_spread_mean_rad: ClassMeans,
    pub autocorrelation: BTreeMap<String, ParamAutocorr>,
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

pub fn fits_json(r: &FitsReport) -> String {
    pretty(r)
}

pub fn summary_json(r: &SummaryReport) -> String {
    pretty(r)
}
