use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Location, LosClass};
use crate::error::{Error, Result};
use crate::field::Seed;
use crate::pathloss::CiModel;
use crate::route::{ClassStats, PerClass, RouteScenario, Waypoint};
use crate::spatial::CorrShape;

use super::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossParams {
    pub ple: f64,
    pub sigma_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrSection {
    pub sf: CorrShape,
    pub ds: CorrShape,
    #[serde(rename = "as")]
    pub angular: CorrShape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointEntry {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub los: LosClass,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excess_loss_db: Option<f64>,
}

/// TOML form of a [`RouteScenario`].
///
/// ```toml
/// freq_ghz = 142.0
/// seed = 142
///
/// [tx]
/// x = 0.5
/// y = 36.0
/// z = 4.0
///
/// [path_loss.los]
/// ple = 2.01
/// sigma_db = 2.9
///
/// [correlation.sf]
/// family = "exp_decay_sinusoid"
/// d1 = 6.2
/// d2 = 2.8
///
/// [delay_spread_ns.los]
/// mean = 5.7
/// std = 8.9
///
/// [[waypoints]]
/// id = 1
/// x = 0.0
/// y = 12.0
/// z = 1.5
/// los = "LOS"
/// ```
///
/// plus `path_loss.nlos`, `correlation.ds`, `correlation.as`, the NLOS
/// spread moments, `angular_spread_rad`, and one `[[waypoints]]` table per
/// receiver. `excess_loss_db` on a waypoint is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub freq_ghz: f64,
    pub seed: u64,
    pub tx: Point,
    pub path_loss: PerClass<PathLossParams>,
    pub correlation: CorrSection,
    pub delay_spread_ns: PerClass<ClassStats>,
    pub angular_spread_rad: PerClass<ClassStats>,
    pub waypoints: Vec<WaypointEntry>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<RouteScenario> {
        let model = |p: PathLossParams| CiModel::new(self.freq_ghz, p.ple, p.sigma_db);
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| {
                Ok(Waypoint {
                    location: Location::new(w.id, w.x, w.y, w.z)?,
                    los: w.los,
                    excess_loss_db: w.excess_loss_db,
                })
            })
            .collect::<Result<_>>()?;
        let sc = RouteScenario {
            freq_ghz: self.freq_ghz,
            tx: Location::new(0, self.tx.x, self.tx.y, self.tx.z)?,
            waypoints,
            los_model: model(self.path_loss.los)?,
            nlos_model: model(self.path_loss.nlos)?,
            sf_corr: self.correlation.sf,
            ds_corr: self.correlation.ds,
            as_corr: self.correlation.angular,
            ds_stats: self.delay_spread_ns,
            as_stats: self.angular_spread_rad,
            seed: Seed(self.seed),
        };
        sc.validate()?;
        Ok(sc)
    }

    pub fn from_scenario(sc: &RouteScenario) -> Self {
        let pl = |m: &CiModel| PathLossParams {
            ple: m.ple,
            sigma_db: m.sigma_db,
        };
        Self {
            freq_ghz: sc.freq_ghz,
            seed: sc.seed.0,
            tx: Point {
                x: sc.tx.x,
                y: sc.tx.y,
                z: sc.tx.z,
            },
            path_loss: PerClass {
                los: pl(&sc.los_model),
                nlos: pl(&sc.nlos_model),
            },
            correlation: CorrSection {
                sf: sc.sf_corr,
                ds: sc.ds_corr,
                angular: sc.as_corr,
            },
            delay_spread_ns: sc.ds_stats,
            angular_spread_rad: sc.as_stats,
            waypoints: sc
                .waypoints
                .iter()
                .map(|w| WaypointEntry {
                    id: w.location.id,
                    x: w.location.x,
                    y: w.location.y,
                    z: w.location.z,
                    los: w.los,
                    excess_loss_db: w.excess_loss_db,
                })
                .collect(),
        }
    }
}

pub fn read_scenario(path: &Path) -> Result<RouteScenario> {
    parse_scenario(&read_text(path)?, path)
}

/// Parses and validates a scenario document. Structural problems and range
/// violations both surface as [`Error::Schema`] naming the offending key.
pub fn parse_scenario(text: &str, path: &Path) -> Result<RouteScenario> {
    let schema = |message: String| Error::Schema {
        path: path.to_path_buf(),
        message,
    };
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let at = e.span().map(|s| {
            let line = text[..s.start].matches('\n').count() + 1;
            format!("line {line}: ")
        });
        schema(format!("{}{}", at.unwrap_or_default(), e.message()))
    })?;
    file.into_scenario().map_err(|e| schema(e.to_string()))
}

pub fn scenario_toml(sc: &RouteScenario) -> String {
    toml::to_string_pretty(&ScenarioFile::from_scenario(sc)).expect("scenario serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::default_paper_scenario;

    #[test]
    fn default_scenario_round_trips() {
        let sc = default_paper_scenario();
        let text = scenario_toml(&sc);
        assert_eq!(parse_scenario(&text, Path::new("s.toml")).unwrap(), sc);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = scenario_toml(&default_paper_scenario()).replace("seed = 142", "seed = 142\ncolour = 1");
        let e = parse_scenario(&text, Path::new("s.toml")).unwrap_err();
        assert!(matches!(e, Error::Schema { .. }));
        assert!(e.to_string().contains("colour"), "{e}");
    }

    #[test]
    fn missing_key_is_named() {
        let text = scenario_toml(&default_paper_scenario()).replacen("sigma_db = 2.9\n", "", 1);
        let e = parse_scenario(&text, Path::new("s.toml")).unwrap_err().to_string();
        assert!(e.contains("sigma_db"), "{e}");
    }

    #[test]
    fn range_violation_is_schema_error() {
        let mut sc = default_paper_scenario();
        sc.waypoints[3].location = Location::new(4, 0.5, 35.5, 1.5).unwrap();
        let text = scenario_toml(&sc);
        let e = parse_scenario(&text, Path::new("s.toml")).unwrap_err();
        assert_eq!(e.exit_code(), crate::error::exit::PARSE);
        assert!(e.to_string().contains("distance below 1 m reference"), "{e}");
    }
}
