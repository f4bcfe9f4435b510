//! Omnidirectional PDP synthesis and per-location statistics: omni path
//! loss, RMS delay spread and AOA angular spread.

use std::collections::BTreeMap;

use crate::channel::{to_db, DirectionalPdp, LinkBudget, Mpc, OmniPdp, PdpSample};
use crate::error::{Error, Result};

/// Absolute-delay binning used to merge directional PDPs.
///
/// Bin `k` covers `[k * w, (k + 1) * w)` nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayGrid {
    pub bin_width_ns: f64,
}

impl DelayGrid {
    pub fn new(bin_width_ns: f64) -> Result<Self> {
        if !(bin_width_ns > 0.0 && bin_width_ns.is_finite()) {
            return Err(Error::invalid(format!(
                "delay bin width must be positive, got {bin_width_ns}"
            )));
        }
        Ok(Self { bin_width_ns })
    }

    pub fn bin_of(&self, delay_ns: f64) -> i64 {
        (delay_ns / self.bin_width_ns).floor() as i64
    }
}

impl Default for DelayGrid {
    fn default() -> Self {
        Self { bin_width_ns: 2.0 }
    }
}

/// Merges the directional PDPs of one receiver into an omnidirectional PDP.
///
/// Every delay bin keeps the strongest sample seen in it across all pointing
/// directions, with that sample's own delay. Neighbouring beams see the same
/// physical path, so a bin contributes its power once.
pub fn synthesize_omni_pdp(pdps: &[DirectionalPdp], grid: &DelayGrid) -> Result<OmniPdp> {
    let first = pdps
        .first()
        .ok_or(Error::EmptyInput("synthesize_omni_pdp needs at least one PDP"))?;
    let rx_id = first.rx_id;
    if let Some(other) = pdps.iter().find(|p| p.rx_id != rx_id) {
        return Err(Error::MixedRxIds(rx_id, other.rx_id));
    }

    let mut bins: BTreeMap<i64, PdpSample> = BTreeMap::new();
    for sample in pdps.iter().flat_map(|p| &p.samples) {
        bins.entry(grid.bin_of(sample.delay_ns))
            .and_modify(|kept| {
                if sample.power_mw > kept.power_mw {
                    *kept = *sample;
                }
            })
            .or_insert(*sample);
    }
    OmniPdp::new(rx_id, bins.into_values().collect())
}

/// Omnidirectional path loss in dB from the synthesized profile.
pub fn omni_path_loss(omni: &OmniPdp, budget: &LinkBudget) -> Result<f64> {
    let total = omni.total_power_mw();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    Ok(budget.budget_dbm() - to_db(total))
}

/// Power-weighted RMS delay spread in nanoseconds.
pub fn rms_delay_spread(omni: &OmniPdp) -> Result<f64> {
    let total = omni.total_power_mw();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let mean = omni
        .samples
        .iter()
        .map(|s| s.power_mw * s.delay_ns)
        .sum::<f64>()
        / total;
    let var = omni
        .samples
        .iter()
        .map(|s| s.power_mw * (s.delay_ns - mean).powi(2))
        .sum::<f64>()
        / total;
    Ok(var.sqrt())
}

/// Resultant magnitudes at or below this are treated as a vanishing resultant.
const RESULTANT_EPS: f64 = 1e-12;

/// Circular angular spread of arrival azimuths in radians.
pub fn angular_spread(mpcs: &[Mpc]) -> Result<f64> {
    if mpcs.is_empty() {
        return Err(Error::EmptyInput("angular_spread needs at least one component"));
    }
    let total: f64 = mpcs.iter().map(|m| m.power_mw).sum();
    if !(total > 0.0) {
        return Err(Error::ZeroPower);
    }
    let (re, im) = mpcs.iter().fold((0.0, 0.0), |(re, im), m| {
        let (s, c) = m.aoa_azimuth_rad.sin_cos();
        (re + m.power_mw * c, im + m.power_mw * s)
    });
    let resultant = re.hypot(im) / total;
    if resultant <= RESULTANT_EPS {
        return Err(Error::ResultantZero);
    }
    if resultant < 0.7 {
        return Ok((-2.0 * resultant.ln()).sqrt());
    }
    // Near-unit resultant: 1 - R^2 from pairwise angle differences avoids the
    // cancellation in ln(R).
    let mut deficit = 0.0;
    for (i, a) in mpcs.iter().enumerate() {
        for b in &mpcs[i + 1..] {
            let half = 0.5 * (a.aoa_azimuth_rad - b.aoa_azimuth_rad);
            deficit += 4.0 * a.power_mw * b.power_mw * half.sin().powi(2);
        }
    }
    Ok((-(-deficit / (total * total)).ln_1p()).max(0.0).sqrt())
}

/// Omnidirectional power angular spectrum: one component per distinct RX
/// azimuth, carrying the strongest directional PDP power seen at that azimuth
/// over all TX pointings and RX elevations.
pub fn angular_spectrum(pdps: &[DirectionalPdp]) -> Vec<Mpc> {
    let mut by_az: BTreeMap<i64, Mpc> = BTreeMap::new();
    for pdp in pdps {
        // micro-degree key so that equal azimuths from different rows collide
        let key = (pdp.rx_angle.azimuth_deg * 1e6).round() as i64;
        let power = pdp.total_power_mw();
        let mpc = Mpc {
            aoa_azimuth_rad: pdp.rx_angle.azimuth_deg.to_radians(),
            power_mw: power,
        };
        by_az
            .entry(key)
            .and_modify(|kept| {
                if power > kept.power_mw {
                    *kept = mpc;
                }
            })
            .or_insert(mpc);
    }
    by_az.into_values().collect()
}

/// Everything the pipeline derives from one receiver's directional sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationStats {
    pub omni: OmniPdp,
    pub path_loss_db: f64,
    pub delay_spread_ns: f64,
    pub angular_spread_rad: f64,
}

pub fn location_stats(
    pdps: &[DirectionalPdp],
    budget: &LinkBudget,
    grid: &DelayGrid,
) -> Result<LocationStats> {
    let omni = synthesize_omni_pdp(pdps, grid)?;
    let path_loss_db = omni_path_loss(&omni, budget)?;
    let delay_spread_ns = rms_delay_spread(&omni)?;
    let angular_spread_rad = angular_spread(&angular_spectrum(pdps))?;
    Ok(LocationStats {
        omni,
        path_loss_db,
        delay_spread_ns,
        angular_spread_rad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{from_db, PointingAngle};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dpdp(rx_id: u32, az: f64, samples: &[(f64, f64)]) -> DirectionalPdp {
        DirectionalPdp {
            rx_id,
            tx_angle: PointingAngle::new(0.0, 0.0).unwrap(),
            rx_angle: PointingAngle::new(az, 0.0).unwrap(),
            samples: samples.iter().map(|&(d, p)| PdpSample::new(d, p)).collect(),
        }
    }

    fn omni(samples: &[(f64, f64)]) -> OmniPdp {
        OmniPdp::new(1, samples.iter().map(|&(d, p)| PdpSample::new(d, p)).collect()).unwrap()
    }

    // Raw-moment form, kept apart from the centred form used in the library.
    fn brute_delay_spread(samples: &[(f64, f64)]) -> f64 {
        let p: f64 = samples.iter().map(|s| s.1).sum();
        let m1: f64 = samples.iter().map(|s| s.1 * s.0).sum::<f64>() / p;
        let m2: f64 = samples.iter().map(|s| s.1 * s.0 * s.0).sum::<f64>() / p;
        (m2 - m1 * m1).max(0.0).sqrt()
    }

    #[test]
    fn single_pdp_is_identity() {
        let p = dpdp(3, 0.0, &[(100.0, 1.0), (104.0, 0.5), (110.5, 0.2)]);
        let o = synthesize_omni_pdp(std::slice::from_ref(&p), &DelayGrid::default()).unwrap();
        assert_eq!(o.samples, p.samples);
        assert_eq!(o.rx_id, 3);
    }

    #[test]
    fn overlapped_paths_keep_the_maximum() {
        let a = dpdp(1, 0.0, &[(100.0, 1.0)]);
        let b = dpdp(1, 8.0, &[(100.0, 0.5)]);
        let o = synthesize_omni_pdp(&[a, b], &DelayGrid::default()).unwrap();
        assert_eq!(o.samples, vec![PdpSample::new(100.0, 1.0)]);
    }

    #[test]
    fn non_overlapped_paths_sum() {
        let a = dpdp(1, 0.0, &[(100.0, 1.0)]);
        let b = dpdp(1, 8.0, &[(150.0, 0.5)]);
        let o = synthesize_omni_pdp(&[a, b], &DelayGrid::default()).unwrap();
        assert_eq!(o.samples.len(), 2);
        assert_eq!(o.total_power_mw(), 1.5);
    }

    #[test]
    fn synthesis_errors() {
        assert!(matches!(
            synthesize_omni_pdp(&[], &DelayGrid::default()),
            Err(Error::EmptyInput(_))
        ));
        let a = dpdp(1, 0.0, &[(100.0, 1.0)]);
        let b = dpdp(2, 0.0, &[(100.0, 1.0)]);
        assert!(matches!(
            synthesize_omni_pdp(&[a, b], &DelayGrid::default()),
            Err(Error::MixedRxIds(1, 2))
        ));
    }

    #[test]
    fn path_loss_cases() {
        let zero_gain = LinkBudget::new(10.0, 0.0, 0.0, 142.0, 25.0).unwrap();
        let o = omni(&[(0.0, 10.0)]);
        assert_relative_eq!(omni_path_loss(&o, &zero_gain).unwrap(), 0.0, epsilon = 1e-12);

        let budget = LinkBudget::default();
        let o = omni(&[(80.0, from_db(-75.49))]);
        assert_relative_eq!(omni_path_loss(&o, &budget).unwrap(), 129.49, epsilon = 1e-9);

        let a = omni(&[(0.0, 1e-9), (10.0, 3e-10)]);
        let b = omni(&[(0.0, 2e-9), (10.0, 6e-10)]);
        let diff = omni_path_loss(&a, &budget).unwrap() - omni_path_loss(&b, &budget).unwrap();
        assert_relative_eq!(diff, 3.010299956639812, epsilon = 1e-9);
    }

    #[test]
    fn delay_spread_closed_forms() {
        assert_eq!(rms_delay_spread(&omni(&[(120.0, 1.0)])).unwrap(), 0.0);
        assert_relative_eq!(
            rms_delay_spread(&omni(&[(0.0, 1.0), (14.0, 1.0)])).unwrap(),
            7.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn delay_spread_matches_raw_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut t = rng.random_range(0.0..300.0);
            let s: Vec<(f64, f64)> = (0..10)
                .map(|_| {
                    t += rng.random_range(2.0..40.0);
                    (t, rng.random_range(1e-9..1e-6))
                })
                .collect();
            let got = rms_delay_spread(&omni(&s)).unwrap();
            assert_relative_eq!(got, brute_delay_spread(&s), max_relative = 1e-9);
        }
    }

    #[test]
    fn angular_spread_cases() {
        let one = [Mpc {
            aoa_azimuth_rad: 2.3,
            power_mw: 4.0,
        }];
        assert_eq!(angular_spread(&one).unwrap(), 0.0);

        let pm = [
            Mpc {
                aoa_azimuth_rad: PI / 3.0,
                power_mw: 1.0,
            },
            Mpc {
                aoa_azimuth_rad: -PI / 3.0,
                power_mw: 1.0,
            },
        ];
        let expected = (-2.0 * 0.5f64.ln()).sqrt();
        assert_relative_eq!(angular_spread(&pm).unwrap(), expected, max_relative = 1e-9);
        assert_relative_eq!(expected, 1.1774, epsilon = 1e-4);

        let cancel = [
            Mpc {
                aoa_azimuth_rad: 0.0,
                power_mw: 1.0,
            },
            Mpc {
                aoa_azimuth_rad: PI,
                power_mw: 1.0,
            },
        ];
        assert!(matches!(angular_spread(&cancel), Err(Error::ResultantZero)));
        assert!(matches!(angular_spread(&[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn spectrum_keeps_strongest_per_azimuth() {
        let a = dpdp(1, 16.0, &[(100.0, 1.0)]);
        let mut b = dpdp(1, 16.0, &[(104.0, 3.0)]);
        b.tx_angle = PointingAngle::new(90.0, 0.0).unwrap();
        let c = dpdp(1, 24.0, &[(130.0, 0.5)]);
        let spec = angular_spectrum(&[a, b, c]);
        assert_eq!(spec.len(), 2);
        assert_eq!(spec[0].power_mw, 3.0);
        assert_relative_eq!(spec[1].aoa_azimuth_rad, 24f64.to_radians());
    }

    fn profile() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((2.0f64..50.0, 1e-9f64..1e-3), 1..12).prop_map(|v| {
            let mut t = 0.0;
            v.into_iter()
                .map(|(gap, p)| {
                    t += gap;
                    (t, p)
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn delay_shift_and_power_scale_invariance(
            s in profile(), shift in 0.0f64..1000.0, c in 1e-3f64..1e3,
        ) {
            let base = rms_delay_spread(&omni(&s)).unwrap();
            let shifted: Vec<_> = s.iter().map(|&(d, p)| (d + shift, p)).collect();
            let scaled: Vec<_> = s.iter().map(|&(d, p)| (d, p * c)).collect();
            let tol = 1e-9 * base.max(1e-9) + 1e-9;
            prop_assert!((rms_delay_spread(&omni(&shifted)).unwrap() - base).abs() <= tol);
            prop_assert!((rms_delay_spread(&omni(&scaled)).unwrap() - base).abs() <= tol);

            let budget = LinkBudget::default();
            let pl = omni_path_loss(&omni(&s), &budget).unwrap();
            let pl_c = omni_path_loss(&omni(&scaled), &budget).unwrap();
            prop_assert!((pl - pl_c - to_db(c)).abs() < 1e-9);
        }

        #[test]
        fn angular_spread_rotation_and_scale_invariance(
            comps in prop::collection::vec((-PI..PI, 1e-6f64..1.0), 1..10),
            theta0 in -10.0f64..10.0,
            c in 1e-3f64..1e3,
        ) {
            let mpcs: Vec<_> = comps.iter().map(|&(a, p)| Mpc { aoa_azimuth_rad: a, power_mw: p }).collect();
            let base = match angular_spread(&mpcs) {
                Ok(v) if v < 3.0 => v,
                _ => return Ok(()),
            };
            let rot: Vec<_> = mpcs.iter().map(|m| Mpc { aoa_azimuth_rad: m.aoa_azimuth_rad + theta0, ..*m }).collect();
            let sc: Vec<_> = mpcs.iter().map(|m| Mpc { power_mw: m.power_mw * c, ..*m }).collect();
            prop_assert!((angular_spread(&rot).unwrap() - base).abs() < 1e-9);
            prop_assert!((angular_spread(&sc).unwrap() - base).abs() < 1e-9);
        }

        #[test]
        fn synthesis_is_idempotent(s in profile()) {
            let p = dpdp(1, 0.0, &s);
            let grid = DelayGrid::default();
            let once = synthesize_omni_pdp(&[p], &grid).unwrap();
            let again = synthesize_omni_pdp(&[DirectionalPdp {
                rx_id: 1,
                tx_angle: PointingAngle::new(0.0, 0.0).unwrap(),
                rx_angle: PointingAngle::new(0.0, 0.0).unwrap(),
                samples: once.samples.clone(),
            }], &grid).unwrap();
            prop_assert_eq!(once, again);
        }
    }
}
