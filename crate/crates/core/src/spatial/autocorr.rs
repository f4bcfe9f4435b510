use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::Location;
use crate::error::{Error, Result};

/// One channel parameter observed over a set of locations.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSeries {
    entries: Vec<(Location, f64)>,
}

impl ParamSeries {
    pub fn new(entries: Vec<(Location, f64)>) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for (loc, v) in &entries {
            if !seen.insert(loc.id) {
                return Err(Error::DuplicateLocationId(loc.id));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "parameter value at location {} is not finite",
                    loc.id
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(Location, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrBin {
    pub k: i64,
    pub distance_m: f64,
    pub rho: f64,
    pub pair_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrEstimate {
    pub delta_d_m: f64,
    pub bins: Vec<AutocorrBin>,
}

impl AutocorrEstimate {
    pub fn total_pairs(&self) -> usize {
        self.bins.iter().map(|b| b.pair_count).sum()
    }
}

pub const DEFAULT_DELTA_D_M: f64 = 0.05;
pub const DEFAULT_MIN_PAIRS: usize = 2;

/// Bin index `k` with `d - k*delta` in `[-delta/2, +delta/2)`.
pub(crate) fn bin_index(d: f64, delta: f64) -> i64 {
    (d / delta + 0.5).floor() as i64
}

/// Binned spatial autocorrelation of a parameter series.
///
/// Each unordered pair `i < j` (series order) lands in exactly one distance
/// bin. Within a bin the coefficient is a Pearson quotient whose means are
/// taken separately over the first and second members of the pairs. Bins with
/// fewer than `min_pairs` pairs, or with no spread in either member set, are
/// left out.
pub fn estimate_autocorr(
    series: &ParamSeries,
    delta_d_m: f64,
    min_pairs: usize,
) -> Result<AutocorrEstimate> {
    if series.len() < 2 {
        return Err(Error::TooFewEntries(series.len()));
    }
    check_args(delta_d_m, min_pairs)?;
    let mut bins = BTreeMap::new();
    collect_pairs(series, delta_d_m, &mut bins);
    Ok(finish(bins, delta_d_m, min_pairs))
}

/// Ensemble estimate: the pair sets of every realization are pooled bin by
/// bin before the quotient is formed, so the bin means are ensemble means.
///
/// Averaging per-realization coefficients instead (see [`ensemble_autocorr`])
/// inherits the small-window bias of each realization's own bin means.
pub fn estimate_autocorr_pooled(
    realizations: &[ParamSeries],
    delta_d_m: f64,
    min_pairs: usize,
) -> Result<AutocorrEstimate> {
    if realizations.is_empty() {
        return Err(Error::TooFewEntries(0));
    }
    if let Some(short) = realizations.iter().find(|s| s.len() < 2) {
        return Err(Error::TooFewEntries(short.len()));
    }
    check_args(delta_d_m, min_pairs)?;
    let mut bins = BTreeMap::new();
    for series in realizations {
        collect_pairs(series, delta_d_m, &mut bins);
    }
    Ok(finish(bins, delta_d_m, min_pairs))
}

fn check_args(delta_d_m: f64, min_pairs: usize) -> Result<()> {
    if !(delta_d_m > 0.0 && delta_d_m.is_finite()) {
        return Err(Error::invalid(format!("delta_d must be positive, got {delta_d_m}")));
    }
    if min_pairs < 2 {
        return Err(Error::invalid(format!("min_pairs must be >= 2, got {min_pairs}")));
    }
    Ok(())
}

type PairBins = BTreeMap<i64, Vec<(f64, f64)>>;

fn collect_pairs(series: &ParamSeries, delta_d_m: f64, bins: &mut PairBins) {
    let e = series.entries();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let d = e[i].0.distance_2d(&e[j].0);
            bins.entry(bin_index(d, delta_d_m))
                .or_default()
                .push((e[i].1, e[j].1));
        }
    }
}

fn finish(bins: PairBins, delta_d_m: f64, min_pairs: usize) -> AutocorrEstimate {
    let bins = bins
        .into_iter()
        .filter(|(_, pairs)| pairs.len() >= min_pairs)
        .filter_map(|(k, pairs)| {
            pearson(&pairs).map(|rho| AutocorrBin {
                k,
                distance_m: k as f64 * delta_d_m,
                rho,
                pair_count: pairs.len(),
            })
        })
        .collect();
    AutocorrEstimate { delta_d_m, bins }
}

/// Pearson quotient over pairs; `None` when either side has no spread.
fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    let mu_a = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mu_b = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        let (da, db) = (a - mu_a, b - mu_b);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    // spread indistinguishable from rounding noise counts as none
    let scale_a = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
    let scale_b = pairs.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    let floor = |s: f64| n * (1e-12 * s).powi(2);
    if saa <= floor(scale_a) || sbb <= floor(scale_b) {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Averages per-realization estimates bin by bin.
///
/// A bin's coefficient is the mean over the realizations where it is present;
/// its pair count is the total over those realizations.
pub fn ensemble_autocorr(estimates: &[AutocorrEstimate]) -> Result<AutocorrEstimate> {
    let first = estimates
        .first()
        .ok_or(Error::EmptyInput("ensemble_autocorr needs at least one estimate"))?;
    let delta = first.delta_d_m;
    if estimates.iter().any(|e| e.delta_d_m != delta) {
        return Err(Error::invalid("estimates use different bin widths"));
    }
    let mut acc: BTreeMap<i64, (f64, usize, usize)> = BTreeMap::new();
    for est in estimates {
        for b in &est.bins {
            let slot = acc.entry(b.k).or_insert((0.0, 0, 0));
            slot.0 += b.rho;
            slot.1 += 1;
            slot.2 += b.pair_count;
        }
    }
    Ok(AutocorrEstimate {
        delta_d_m: delta,
        bins: acc
            .into_iter()
            .map(|(k, (sum, n, pairs))| AutocorrBin {
                k,
                distance_m: k as f64 * delta,
                rho: sum / n as f64,
                pair_count: pairs,
            })
            .collect(),
    })
}
