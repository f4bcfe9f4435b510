//! Synthetic measurement campaigns: directional sweeps built so the analysis
//! pipeline reproduces a given set of per-location records.
//!
//! Each location gets one or two directional PDPs with identical delay
//! profiles. Two equal-power paths (or a strong/weak pair when the target
//! spread is below the delay resolution) set the delay spread; the azimuth
//! gap between the two pointing directions sets the angular spread.

use crate::channel::{
    from_db, DirectionalPdp, LinkBudget, Location, PdpSample, PointingAngle, RxRecord,
    SPEED_OF_LIGHT,
};
use crate::error::Result;
use crate::io::{CampaignFile, CampaignHeader, CampaignSite};

/// Weakest second path, relative to the first, the builder will use.
const MIN_PATH_RATIO_DB: f64 = -24.0;

fn azimuth_deg(from: &Location, to: &Location) -> f64 {
    (to.y - from.y).atan2(to.x - from.x).to_degrees().rem_euclid(360.0)
}

/// Delays and linear weights (summing to 1) of a profile with the given RMS
/// delay spread.
fn delay_profile(first_ns: f64, ds_ns: f64, bin_width_ns: f64) -> Vec<(f64, f64)> {
    let min_gap = 2.0 * bin_width_ns;
    if 2.0 * ds_ns >= min_gap {
        return vec![(first_ns, 0.5), (first_ns + 2.0 * ds_ns, 0.5)];
    }
    // two paths min_gap apart with ratio r: ds = gap * sqrt(r) / (1 + r)
    let x = ds_ns / min_gap;
    let s = if x > 0.0 {
        (1.0 - (1.0 - 4.0 * x * x).sqrt()) / (2.0 * x)
    } else {
        0.0
    };
    let r = s * s;
    if r < from_db(MIN_PATH_RATIO_DB) {
        return vec![(first_ns, 1.0)];
    }
    vec![(first_ns, 1.0 / (1.0 + r)), (first_ns + min_gap, r / (1.0 + r))]
}

/// Builds a campaign whose analysis reproduces `records` up to file rounding.
///
/// Records need a positive path loss below the link budget; spreads may be
/// zero.
pub fn synthesize_campaign(
    tx: Location,
    records: &[RxRecord],
    budget: LinkBudget,
    bin_width_ns: f64,
) -> Result<CampaignFile> {
    let mut sites = Vec::with_capacity(records.len());
    let mut pdps = Vec::new();
    for r in records {
        r.validate(budget.center_freq_ghz)?;
        let loc = r.location;
        sites.push(CampaignSite {
            location: loc,
            los: r.los,
            excess_loss_db: r.excess_loss_db,
        });
        let total_mw = from_db(budget.budget_dbm() - r.omni_path_loss_db);
        let first_ns = r.tr_distance_m / SPEED_OF_LIGHT * 1e9;
        let profile = delay_profile(first_ns, r.delay_spread_ns, bin_width_ns);
        let samples: Vec<PdpSample> = profile
            .iter()
            .map(|&(d, w)| PdpSample::new(d, w * total_mw))
            .collect();

        // two equal directions 2*theta apart have resultant cos(theta)
        let half_gap = (-0.5 * r.angular_spread_rad.powi(2)).exp().acos().to_degrees();
        let boresight = azimuth_deg(&loc, &tx);
        let mut azimuths = vec![boresight];
        if 2.0 * half_gap >= 1e-3 {
            azimuths.push((boresight + 2.0 * half_gap).rem_euclid(360.0));
        }
        let tx_angle = PointingAngle::new(azimuth_deg(&tx, &loc), 0.0)?;
        for az in azimuths {
            pdps.push(DirectionalPdp {
                rx_id: loc.id,
                tx_angle,
                rx_angle: PointingAngle::new(az, 0.0)?,
                samples: samples.clone(),
            });
        }
    }
    Ok(CampaignFile {
        header: CampaignHeader {
            budget,
            bin_width_ns,
            tx,
        },
        sites,
        pdps,
    })
}
