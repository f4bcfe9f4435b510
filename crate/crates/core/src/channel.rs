//! Shared domain types: locations, pointing angles, power delay profiles and
//! per-location records, plus campaign-level validation.
//!
//! Powers are stored as linear milliwatts everywhere; losses and gains are in
//! dB. Distances are 2D (ground plane); antenna heights are carried along but
//! never enter distance math.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Linear power ratio to dB.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dB to linear power ratio.
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Location {
    pub fn new(id: u32, x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::invalid(format!(
                "location {id} has non-finite coordinates"
            )));
        }
        Ok(Self { id, x, y, z })
    }

    /// Ground-plane separation in meters.
    pub fn distance_2d(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingAngle {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl PointingAngle {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !(0.0..360.0).contains(&azimuth_deg) {
            return Err(Error::invalid(format!(
                "azimuth {azimuth_deg} deg outside [0, 360)"
            )));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(Error::invalid(format!(
                "elevation {elevation_deg} deg outside [-90, 90]"
            )));
        }
        Ok(Self {
            azimuth_deg,
            elevation_deg,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdpSample {
    pub delay_ns: f64,
    pub power_mw: f64,
}

impl PdpSample {
    pub fn new(delay_ns: f64, power_mw: f64) -> Self {
        Self { delay_ns, power_mw }
    }
}

/// One power delay profile for a fixed TX/RX pointing pair, on absolute delays.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalPdp {
    pub rx_id: u32,
    pub tx_angle: PointingAngle,
    pub rx_angle: PointingAngle,
    pub samples: Vec<PdpSample>,
}

impl DirectionalPdp {
    pub fn total_power_mw(&self) -> f64 {
        self.samples.iter().map(|s| s.power_mw).sum()
    }

    pub fn peak_power_mw(&self) -> f64 {
        self.samples.iter().map(|s| s.power_mw).fold(0.0, f64::max)
    }

    fn validate(&self, limits: &IngestLimits) -> Result<()> {
        let rx_id = self.rx_id;
        if self
            .samples
            .iter()
            .any(|s| !(s.power_mw > 0.0 && s.power_mw.is_finite()))
        {
            return Err(Error::NonPositivePower { rx_id });
        }
        if self
            .samples
            .iter()
            .any(|s| !(s.delay_ns >= 0.0 && s.delay_ns.is_finite()))
        {
            return Err(Error::invalid(format!(
                "rx_id {rx_id} has a negative or non-finite delay"
            )));
        }
        for pair in self.samples.windows(2) {
            let spacing = pair[1].delay_ns - pair[0].delay_ns;
            if spacing <= 0.0 {
                return Err(Error::NonMonotoneDelays { rx_id });
            }
            if spacing < limits.bin_width_ns {
                return Err(Error::DelaySpacingBelowResolution {
                    rx_id,
                    spacing_ns: spacing,
                    bin_width_ns: limits.bin_width_ns,
                });
            }
        }
        let peak = self.peak_power_mw();
        for s in &self.samples {
            let below = to_db(peak / s.power_mw);
            if below > limits.noise_threshold_db {
                return Err(Error::BelowNoiseThreshold {
                    rx_id,
                    below_peak_db: below,
                    threshold_db: limits.noise_threshold_db,
                });
            }
        }
        Ok(())
    }
}

/// Omnidirectional PDP on the common absolute-delay grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmniPdp {
    pub rx_id: u32,
    pub samples: Vec<PdpSample>,
}

impl OmniPdp {
    /// Builds an omni PDP, checking that delays increase strictly and that the
    /// total power is positive.
    pub fn new(rx_id: u32, samples: Vec<PdpSample>) -> Result<Self> {
        if samples.windows(2).any(|w| w[1].delay_ns <= w[0].delay_ns) {
            return Err(Error::NonMonotoneDelays { rx_id });
        }
        if samples.iter().any(|s| !(s.power_mw > 0.0)) {
            return Err(Error::NonPositivePower { rx_id });
        }
        if samples.is_empty() {
            return Err(Error::ZeroPower);
        }
        Ok(Self { rx_id, samples })
    }

    pub fn total_power_mw(&self) -> f64 {
        self.samples.iter().map(|s| s.power_mw).sum()
    }
}

/// A multipath component seen from the receiver's azimuth plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    pub aoa_azimuth_rad: f64,
    pub power_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LosClass {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
}

impl LosClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LosClass::Los => "LOS",
            LosClass::Nlos => "NLOS",
        }
    }
}

impl std::str::FromStr for LosClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "LOS" | "los" => Ok(LosClass::Los),
            "NLOS" | "nlos" => Ok(LosClass::Nlos),
            other => Err(Error::invalid(format!(
                "los flag must be LOS or NLOS, got {other:?}"
            ))),
        }
    }
}

impl std::fmt::Display for LosClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Large-scale parameters at one receiver location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxRecord {
    pub location: Location,
    pub los: LosClass,
    pub tr_distance_m: f64,
    pub omni_path_loss_db: f64,
    pub delay_spread_ns: f64,
    pub angular_spread_rad: f64,
    /// Known extra attenuation (foliage and the like). Flagged records are
    /// left out of path-loss fits.
    pub excess_loss_db: Option<f64>,
}

impl RxRecord {
    /// Checks the record against the CI reference: d >= 1 m, path loss at or
    /// above free space at 1 m, nonnegative spreads.
    pub fn validate(&self, freq_ghz: f64) -> Result<()> {
        let id = self.location.id;
        if !(self.tr_distance_m >= 1.0) {
            return Err(Error::DistanceBelowReference(self.tr_distance_m));
        }
        let floor = crate::pathloss::fspl_1m(freq_ghz);
        if !(self.omni_path_loss_db >= floor) {
            return Err(Error::invalid(format!(
                "rx_id {id}: path loss {:.3} dB below free-space loss at 1 m ({floor:.3} dB)",
                self.omni_path_loss_db
            )));
        }
        if !(self.delay_spread_ns >= 0.0 && self.angular_spread_rad >= 0.0) {
            return Err(Error::invalid(format!("rx_id {id}: negative spread")));
        }
        if let Some(x) = self.excess_loss_db {
            if !x.is_finite() {
                return Err(Error::invalid(format!("rx_id {id}: non-finite excess loss")));
            }
        }
        Ok(())
    }

    pub fn is_flagged(&self) -> bool {
        self.excess_loss_db.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub center_freq_ghz: f64,
    pub noise_threshold_db_below_peak: f64,
}

impl LinkBudget {
    pub fn new(
        tx_power_dbm: f64,
        tx_gain_dbi: f64,
        rx_gain_dbi: f64,
        center_freq_ghz: f64,
        noise_threshold_db_below_peak: f64,
    ) -> Result<Self> {
        if !(center_freq_ghz > 0.0 && center_freq_ghz.is_finite()) {
            return Err(Error::invalid(format!(
                "center frequency must be positive, got {center_freq_ghz}"
            )));
        }
        if !(noise_threshold_db_below_peak > 0.0) {
            return Err(Error::invalid(format!(
                "noise threshold must be positive, got {noise_threshold_db_below_peak}"
            )));
        }
        if ![tx_power_dbm, tx_gain_dbi, rx_gain_dbi]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("link budget terms must be finite"));
        }
        Ok(Self {
            tx_power_dbm,
            tx_gain_dbi,
            rx_gain_dbi,
            center_freq_ghz,
            noise_threshold_db_below_peak,
        })
    }

    /// EIRP plus receive gain, i.e. the received power in dBm for 0 dB loss.
    pub fn budget_dbm(&self) -> f64 {
        self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi
    }
}

impl Default for LinkBudget {
    /// 142 GHz sounder with two 27 dBi horns, 0 dBm reference TX power and a
    /// 25 dB detection threshold.
    fn default() -> Self {
        Self {
            tx_power_dbm: 0.0,
            tx_gain_dbi: 27.0,
            rx_gain_dbi: 27.0,
            center_freq_ghz: 142.0,
            noise_threshold_db_below_peak: 25.0,
        }
    }
}

/// Ingestion limits applied by [`validate_campaign`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestLimits {
    pub bin_width_ns: f64,
    pub noise_threshold_db: f64,
}

impl Default for IngestLimits {
    fn default() -> Self {
        Self {
            bin_width_ns: 2.0,
            noise_threshold_db: 25.0,
        }
    }
}

/// A validated measurement campaign indexed by receiver id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Campaign {
    pub locations: BTreeMap<u32, Location>,
    pub pdps: BTreeMap<u32, Vec<DirectionalPdp>>,
}

impl Campaign {
    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    pub fn pdps_for(&self, rx_id: u32) -> &[DirectionalPdp] {
        self.pdps.get(&rx_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Checks every PDP against its location and the ingestion limits and indexes
/// the result by receiver id.
///
/// The noise threshold is applied against each directional PDP's own peak.
pub fn validate_campaign(
    records: Vec<DirectionalPdp>,
    locations: Vec<Location>,
    limits: &IngestLimits,
) -> Result<Campaign> {
    let mut campaign = Campaign::default();
    for loc in locations {
        if campaign.locations.insert(loc.id, loc).is_some() {
            return Err(Error::DuplicateLocationId(loc.id));
        }
    }
    for pdp in records {
        if !campaign.locations.contains_key(&pdp.rx_id) {
            return Err(Error::UnknownRxId(pdp.rx_id));
        }
        pdp.validate(limits)?;
        campaign.pdps.entry(pdp.rx_id).or_default().push(pdp);
    }
    Ok(campaign)
}
