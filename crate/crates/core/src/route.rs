//! Route scenarios: forward simulation of spatially consistent large-scale
//! parameters along a receiver route, and the matching analysis that turns a
//! route's records back into path-loss and correlation models.
//!
//! One unit-variance correlated field per parameter and realization covers
//! every waypoint. LOS/NLOS class only scales amplitude (shadow-fading sigma,
//! DS/AS moments), so correlation carries across class boundaries.

use serde::{Deserialize, Serialize};

use crate::channel::{Location, LosClass, RxRecord};
use crate::error::{Error, Result};
use crate::field::{rectified_gaussian_latent, CorrelatedField, Seed};
use crate::pathloss::{ci_path_loss, fit_ci_by_class, shadow_fading, CiModel, ClassFits, PathLossSample};
use crate::spatial::{
    estimate_autocorr, estimate_autocorr_pooled, fit_corr_model, AutocorrEstimate, CorrFamily,
    CorrModel, CorrShape, FitOptions, ParamSeries, DEFAULT_DELTA_D_M, DEFAULT_MIN_PAIRS,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassStats {
    pub mean: f64,
    pub std: f64,
}

/// A value per LOS class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerClass<T> {
    pub los: T,
    pub nlos: T,
}

impl<T> PerClass<T> {
    pub fn get(&self, class: LosClass) -> &T {
        match class {
            LosClass::Los => &self.los,
            LosClass::Nlos => &self.nlos,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub location: Location,
    pub los: LosClass,
    pub excess_loss_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteScenario {
    pub freq_ghz: f64,
    pub tx: Location,
    pub waypoints: Vec<Waypoint>,
    pub los_model: CiModel,
    pub nlos_model: CiModel,
    pub sf_corr: CorrShape,
    pub ds_corr: CorrShape,
    pub as_corr: CorrShape,
    pub ds_stats: PerClass<ClassStats>,
    pub as_stats: PerClass<ClassStats>,
    pub seed: Seed,
}

impl RouteScenario {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::invalid("scenario needs at least one waypoint"));
        }
        let mut ids = std::collections::BTreeSet::new();
        for w in &self.waypoints {
            if !ids.insert(w.location.id) {
                return Err(Error::DuplicateLocationId(w.location.id));
            }
            let d = self.tx.distance_2d(&w.location);
            if !(d >= 1.0) {
                return Err(Error::invalid(format!(
                    "waypoint {}: distance below 1 m reference ({d:.3} m from TX)",
                    w.location.id
                )));
            }
            if let Some(x) = w.excess_loss_db {
                if !x.is_finite() {
                    return Err(Error::invalid(format!(
                        "waypoint {}: non-finite excess loss",
                        w.location.id
                    )));
                }
            }
        }
        for m in [&self.los_model, &self.nlos_model] {
            CiModel::new(m.freq_ghz, m.ple, m.sigma_db)?;
            if m.freq_ghz != self.freq_ghz {
                return Err(Error::invalid(format!(
                    "CI model frequency {} GHz differs from scenario frequency {} GHz",
                    m.freq_ghz, self.freq_ghz
                )));
            }
        }
        for c in [&self.sf_corr, &self.ds_corr, &self.as_corr] {
            c.validate()?;
        }
        for s in [
            &self.ds_stats.los,
            &self.ds_stats.nlos,
            &self.as_stats.los,
            &self.as_stats.nlos,
        ] {
            rectified_gaussian_latent(s.mean, s.std)?;
        }
        Ok(())
    }

    pub fn model(&self, class: LosClass) -> &CiModel {
        match class {
            LosClass::Los => &self.los_model,
            LosClass::Nlos => &self.nlos_model,
        }
    }

    pub fn tr_distance(&self, w: &Waypoint) -> f64 {
        self.tx.distance_2d(&w.location)
    }

    pub fn points(&self) -> Vec<Location> {
        self.waypoints.iter().map(|w| w.location).collect()
    }
}

/// The 142 GHz UMi courtyard route: 34 receivers 3 m apart around a
/// 39 m x 12 m rectangle, TX above the top-left corner.
///
/// RX1-RX5 and RX23-RX34 are LOS, RX6-RX22 NLOS. Foliage adds 10 dB at RX2
/// and 15 dB at RX29.
pub fn default_paper_scenario() -> RouteScenario {
    const FREQ: f64 = 142.0;
    let perimeter_point = |s: usize| -> (f64, f64) {
        // counter-clockwise from the top-left corner: down, east, up, west
        let t = 3.0 * s as f64;
        match t {
            t if t <= 12.0 => (0.0, 12.0 - t),
            t if t <= 51.0 => (t - 12.0, 0.0),
            t if t <= 63.0 => (39.0, t - 51.0),
            t => (39.0 - (t - 63.0), 12.0),
        }
    };
    let waypoints = (0..34)
        .map(|s| {
            let id = s as u32 + 1;
            let (x, y) = perimeter_point(s);
            Waypoint {
                location: Location { id, x, y, z: 1.5 },
                los: if (6..=22).contains(&id) {
                    LosClass::Nlos
                } else {
                    LosClass::Los
                },
                excess_loss_db: match id {
                    2 => Some(10.0),
                    29 => Some(15.0),
                    _ => None,
                },
            }
        })
        .collect();
    RouteScenario {
        freq_ghz: FREQ,
        tx: Location {
            id: 0,
            x: 0.5,
            y: 36.0,
            z: 4.0,
        },
        waypoints,
        los_model: CiModel {
            freq_ghz: FREQ,
            ple: 2.01,
            sigma_db: 2.9,
        },
        nlos_model: CiModel {
            freq_ghz: FREQ,
            ple: 3.20,
            sigma_db: 7.1,
        },
        sf_corr: CorrShape::ExpDecaySinusoid { d1: 6.2, d2: 2.8 },
        ds_corr: CorrShape::ExpDecaySinusoid { d1: 25.5, d2: 8.9 },
        as_corr: CorrShape::ExpDecaySinusoid { d1: 55.6, d2: 9.4 },
        ds_stats: PerClass {
            los: ClassStats { mean: 5.7, std: 8.9 },
            nlos: ClassStats {
                mean: 21.9,
                std: 23.9,
            },
        },
        as_stats: PerClass {
            los: ClassStats {
                mean: 0.26,
                std: 0.22,
            },
            nlos: ClassStats {
                mean: 0.65,
                std: 0.32,
            },
        },
        seed: Seed(142),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub realization_index: u64,
    pub records: Vec<RxRecord>,
    /// Shadow-fading draw per waypoint, dB, before excess loss.
    pub shadow_fading_db: Vec<f64>,
}

/// A scenario with its correlation factors precomputed.
#[derive(Debug, Clone)]
pub struct Simulator {
    scenario: RouteScenario,
    sf: CorrelatedField,
    ds: CorrelatedField,
    angular: CorrelatedField,
    ds_latent: PerClass<(f64, f64)>,
    as_latent: PerClass<(f64, f64)>,
}

const SF_STREAM: u64 = 0;
const DS_STREAM: u64 = 1;
const AS_STREAM: u64 = 2;

impl Simulator {
    pub fn new(scenario: RouteScenario) -> Result<Self> {
        scenario.validate()?;
        let points = scenario.points();
        let latent = |s: &PerClass<ClassStats>| -> Result<PerClass<(f64, f64)>> {
            Ok(PerClass {
                los: rectified_gaussian_latent(s.los.mean, s.los.std)?,
                nlos: rectified_gaussian_latent(s.nlos.mean, s.nlos.std)?,
            })
        };
        Ok(Self {
            sf: CorrelatedField::new(&points, &scenario.sf_corr)?,
            ds: CorrelatedField::new(&points, &scenario.ds_corr)?,
            angular: CorrelatedField::new(&points, &scenario.as_corr)?,
            ds_latent: latent(&scenario.ds_stats)?,
            as_latent: latent(&scenario.as_stats)?,
            scenario,
        })
    }

    pub fn scenario(&self) -> &RouteScenario {
        &self.scenario
    }

    /// Largest relative PSD repair over the three correlation matrices.
    pub fn max_relative_repair(&self) -> f64 {
        [&self.sf, &self.ds, &self.angular]
            .iter()
            .map(|f| f.relative_repair())
            .fold(0.0, f64::max)
    }

    pub fn realization(&self, index: u64) -> Result<SimResult> {
        let sc = &self.scenario;
        let seed = sc.seed.derive(index);
        let u_sf = self.sf.unit_draw(seed.derive(SF_STREAM));
        let u_ds = self.ds.unit_draw(seed.derive(DS_STREAM));
        let u_as = self.angular.unit_draw(seed.derive(AS_STREAM));

        let mut records = Vec::with_capacity(sc.waypoints.len());
        let mut chi = Vec::with_capacity(sc.waypoints.len());
        for (i, w) in sc.waypoints.iter().enumerate() {
            let model = sc.model(w.los);
            let d = sc.tr_distance(w);
            let sf = model.sigma_db * u_sf[i];
            let pl = ci_path_loss(model, d, sf)? + w.excess_loss_db.unwrap_or(0.0);
            let (ds_mu, ds_sigma) = *self.ds_latent.get(w.los);
            let (as_mu, as_sigma) = *self.as_latent.get(w.los);
            chi.push(sf);
            records.push(RxRecord {
                location: w.location,
                los: w.los,
                tr_distance_m: d,
                omni_path_loss_db: pl,
                delay_spread_ns: (ds_mu + ds_sigma * u_ds[i]).max(0.0),
                angular_spread_rad: (as_mu + as_sigma * u_as[i]).max(0.0),
                excess_loss_db: w.excess_loss_db,
            });
        }
        Ok(SimResult {
            realization_index: index,
            records,
            shadow_fading_db: chi,
        })
    }

    pub fn run(&self, n_realizations: usize) -> Result<Vec<SimResult>> {
        (0..n_realizations as u64).map(|i| self.realization(i)).collect()
    }
}

/// Simulates `n_realizations` independent realizations of the scenario.
pub fn simulate(scenario: &RouteScenario, n_realizations: usize) -> Result<Vec<SimResult>> {
    if n_realizations == 0 {
        return Err(Error::invalid("need at least one realization"));
    }
    Simulator::new(scenario.clone())?.run(n_realizations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    ShadowFading,
    DelaySpread,
    AngularSpread,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::ShadowFading, Param::DelaySpread, Param::AngularSpread];

    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Param::ShadowFading => "sf",
            Param::DelaySpread => "ds",
            Param::AngularSpread => "as",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub freq_ghz: f64,
    pub delta_d_m: f64,
    pub min_pairs: usize,
    /// Correlation family fitted to SF, DS and AS, in that order.
    pub families: [CorrFamily; 3],
    pub fit: FitOptions,
    /// Records needed in each LOS class present on the route.
    pub min_per_class: usize,
}

impl AnalysisConfig {
    pub fn new(freq_ghz: f64) -> Self {
        Self {
            freq_ghz,
            delta_d_m: DEFAULT_DELTA_D_M,
            min_pairs: DEFAULT_MIN_PAIRS,
            families: [CorrFamily::ExpDecaySinusoid; 3],
            fit: FitOptions::default(),
            min_per_class: 3,
        }
    }

    pub fn family(&self, p: Param) -> CorrFamily {
        self.families[p as usize]
    }
}

/// Per-class CI fits and per-location series for one route.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteSeries {
    pub ci: ClassFits,
    /// `(rx_id, chi)` for every record whose class has a model.
    pub shadow_fading: Vec<(u32, f64)>,
    /// SF (flagged records left out), DS, AS.
    pub series: [ParamSeries; 3],
}

/// CI fits per class on unflagged records, then the three parameter series.
pub fn route_series(records: &[RxRecord], cfg: &AnalysisConfig) -> Result<RouteSeries> {
    for r in records {
        r.validate(cfg.freq_ghz)?;
    }
    let samples: Vec<PathLossSample> = records.iter().map(PathLossSample::from_record).collect();
    let fit_samples: Vec<PathLossSample> = records
        .iter()
        .zip(&samples)
        .filter(|(r, _)| !r.is_flagged())
        .map(|(_, s)| *s)
        .collect();
    let ci = fit_ci_by_class(&fit_samples, cfg.freq_ghz, cfg.min_per_class)?;

    let mut chi = Vec::new();
    let mut sf_entries = Vec::new();
    for (r, s) in records.iter().zip(&samples) {
        if let Some(model) = ci.get(r.los) {
            let (id, x) = shadow_fading(std::slice::from_ref(s), model)[0];
            chi.push((id, x));
            if !r.is_flagged() {
                sf_entries.push((r.location, x));
            }
        }
    }
    let ds = records
        .iter()
        .map(|r| (r.location, r.delay_spread_ns))
        .collect();
    let angular = records
        .iter()
        .map(|r| (r.location, r.angular_spread_rad))
        .collect();
    Ok(RouteSeries {
        ci,
        shadow_fading: chi,
        series: [
            ParamSeries::new(sf_entries)?,
            ParamSeries::new(ds)?,
            ParamSeries::new(angular)?,
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamReport {
    pub param: Param,
    pub estimate: AutocorrEstimate,
    pub model: CorrModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteReport {
    pub ci: ClassFits,
    pub shadow_fading: Vec<(u32, f64)>,
    pub params: Vec<ParamReport>,
}

impl RouteReport {
    pub fn param(&self, p: Param) -> Option<&ParamReport> {
        self.params.iter().find(|r| r.param == p)
    }
}

/// Path-loss fits, shadow fading, autocorrelation estimates and fitted
/// correlation models for one route.
pub fn analyze_route(records: &[RxRecord], cfg: &AnalysisConfig) -> Result<RouteReport> {
    let rs = route_series(records, cfg)?;
    let mut params = Vec::with_capacity(3);
    for (p, series) in Param::ALL.into_iter().zip(&rs.series) {
        let estimate = estimate_autocorr(series, cfg.delta_d_m, cfg.min_pairs)?;
        let model = fit_corr_model(&estimate, cfg.family(p), &cfg.fit)?;
        params.push(ParamReport {
            param: p,
            estimate,
            model,
        });
    }
    Ok(RouteReport {
        ci: rs.ci,
        shadow_fading: rs.shadow_fading,
        params,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub realizations: usize,
    /// Mean of the per-realization CI parameters, per class.
    pub ci_mean: ClassFits,
    /// Per-class sample means of DS and AS over all realizations.
    pub ds_mean: PerClass<Option<f64>>,
    pub as_mean: PerClass<Option<f64>>,
    /// Pooled ensemble estimates and their fits; a failed fit is `None`.
    pub estimates: Vec<(Param, AutocorrEstimate)>,
    pub models: Vec<(Param, Option<CorrModel>)>,
}

impl EnsembleReport {
    pub fn model(&self, p: Param) -> Option<&CorrModel> {
        self.models
            .iter()
            .find(|(q, _)| *q == p)
            .and_then(|(_, m)| m.as_ref())
    }

    pub fn estimate(&self, p: Param) -> Option<&AutocorrEstimate> {
        self.estimates.iter().find(|(q, _)| *q == p).map(|(_, e)| e)
    }
}

/// Analyzes every realization and pools their pairs into one ensemble
/// autocorrelation estimate per parameter before fitting.
pub fn analyze_ensemble(results: &[SimResult], cfg: &AnalysisConfig) -> Result<EnsembleReport> {
    if results.is_empty() {
        return Err(Error::EmptyInput("ensemble analysis needs at least one realization"));
    }
    let per_real: Vec<RouteSeries> = results
        .iter()
        .map(|r| route_series(&r.records, cfg))
        .collect::<Result<_>>()?;

    let mean_fit = |get: fn(&ClassFits) -> Option<CiModel>| -> Option<CiModel> {
        let models: Vec<CiModel> = per_real.iter().filter_map(|s| get(&s.ci)).collect();
        let first = models.first()?;
        let n = models.len() as f64;
        Some(CiModel {
            freq_ghz: first.freq_ghz,
            ple: models.iter().map(|m| m.ple).sum::<f64>() / n,
            sigma_db: models.iter().map(|m| m.sigma_db).sum::<f64>() / n,
        })
    };
    let ci_mean = ClassFits {
        los: mean_fit(|c| c.los),
        nlos: mean_fit(|c| c.nlos),
    };

    let class_mean = |class: LosClass, value: fn(&RxRecord) -> f64| -> Option<f64> {
        let vals: Vec<f64> = results
            .iter()
            .flat_map(|r| r.records.iter().filter(|x| x.los == class).map(value))
            .collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let ds_mean = PerClass {
        los: class_mean(LosClass::Los, |r| r.delay_spread_ns),
        nlos: class_mean(LosClass::Nlos, |r| r.delay_spread_ns),
    };
    let as_mean = PerClass {
        los: class_mean(LosClass::Los, |r| r.angular_spread_rad),
        nlos: class_mean(LosClass::Nlos, |r| r.angular_spread_rad),
    };

    let mut estimates = Vec::new();
    let mut models = Vec::new();
    for (idx, p) in Param::ALL.into_iter().enumerate() {
        let series: Vec<ParamSeries> = per_real.iter().map(|s| s.series[idx].clone()).collect();
        let est = estimate_autocorr_pooled(&series, cfg.delta_d_m, cfg.min_pairs)?;
        let model = match fit_corr_model(&est, cfg.family(p), &cfg.fit) {
            Ok(m) => Some(m),
            Err(e) => {
                log::warn!("ensemble {} fit failed: {e}", p.tag());
                None
            }
        };
        estimates.push((p, est));
        models.push((p, model));
    }
    Ok(EnsembleReport {
        realizations: results.len(),
        ci_mean,
        ds_mean,
        as_mean,
        estimates,
        models,
    })
}
