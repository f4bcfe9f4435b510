//! Close-in free-space reference (CI) path-loss model with a 1 m anchor.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::{LosClass, RxRecord, SPEED_OF_LIGHT};
use crate::error::{Error, Result};

/// Free-space path loss at 1 m in dB.
pub fn fspl_1m(freq_ghz: f64) -> f64 {
    20.0 * (4.0 * PI * freq_ghz * 1e9 / SPEED_OF_LIGHT).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiModel {
    pub freq_ghz: f64,
    /// Path loss exponent.
    pub ple: f64,
    /// Shadow-fading standard deviation in dB.
    pub sigma_db: f64,
}

impl CiModel {
    pub fn new(freq_ghz: f64, ple: f64, sigma_db: f64) -> Result<Self> {
        if !(freq_ghz > 0.0 && freq_ghz.is_finite()) {
            return Err(Error::invalid(format!("frequency must be positive, got {freq_ghz}")));
        }
        if !(ple > 0.0 && ple.is_finite()) {
            return Err(Error::invalid(format!("PLE must be positive, got {ple}")));
        }
        if !(sigma_db >= 0.0 && sigma_db.is_finite()) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {sigma_db}")));
        }
        Ok(Self {
            freq_ghz,
            ple,
            sigma_db,
        })
    }

    /// Mean path loss (no shadow fading) at distance `d` meters.
    pub fn mean_path_loss(&self, d: f64) -> Result<f64> {
        ci_path_loss(self, d, 0.0)
    }
}

/// `FSPL(f, 1 m) + 10 n log10(d) + chi`.
pub fn ci_path_loss(model: &CiModel, d: f64, chi_db: f64) -> Result<f64> {
    if !(d >= 1.0) {
        return Err(Error::DistanceBelowReference(d));
    }
    Ok(fspl_1m(model.freq_ghz) + 10.0 * model.ple * d.log10() + chi_db)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub rx_id: u32,
    pub distance_m: f64,
    pub path_loss_db: f64,
    pub los: LosClass,
}

impl PathLossSample {
    pub fn from_record(r: &RxRecord) -> Self {
        Self {
            rx_id: r.location.id,
            distance_m: r.tr_distance_m,
            path_loss_db: r.omni_path_loss_db,
            los: r.los,
        }
    }
}

/// Least-squares PLE with the 1 m free-space anchor held fixed.
///
/// `sigma_db` is the population RMS of the residuals.
pub fn fit_ci(samples: &[PathLossSample], freq_ghz: f64) -> Result<CiModel> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            op: "fit_ci",
            needed: 2,
            got: samples.len(),
        });
    }
    if let Some(s) = samples.iter().find(|s| !(s.distance_m >= 1.0)) {
        return Err(Error::DistanceBelowReference(s.distance_m));
    }
    let d0 = samples[0].distance_m;
    if samples.iter().all(|s| s.distance_m == d0) {
        return Err(Error::DegenerateDistances);
    }
    let fspl = fspl_1m(freq_ghz);
    let (num, den) = samples.iter().fold((0.0, 0.0), |(num, den), s| {
        let a = s.path_loss_db - fspl;
        let b = 10.0 * s.distance_m.log10();
        (num + a * b, den + b * b)
    });
    let ple = num / den;
    let sse: f64 = samples
        .iter()
        .map(|s| (s.path_loss_db - fspl - 10.0 * ple * s.distance_m.log10()).powi(2))
        .sum();
    let sigma_db = (sse / samples.len() as f64).sqrt();
    CiModel::new(freq_ghz, ple, sigma_db)
}

/// Per-location residual `chi = PL - FSPL - 10 n log10(d)`.
pub fn shadow_fading(samples: &[PathLossSample], model: &CiModel) -> Vec<(u32, f64)> {
    let fspl = fspl_1m(model.freq_ghz);
    samples
        .iter()
        .map(|s| {
            (
                s.rx_id,
                s.path_loss_db - fspl - 10.0 * model.ple * s.distance_m.log10(),
            )
        })
        .collect()
}

/// LOS and NLOS fits, kept separate. A class with no samples has no model.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassFits {
    pub los: Option<CiModel>,
    pub nlos: Option<CiModel>,
}

impl ClassFits {
    pub fn get(&self, class: LosClass) -> Option<&CiModel> {
        match class {
            LosClass::Los => self.los.as_ref(),
            LosClass::Nlos => self.nlos.as_ref(),
        }
    }
}

/// Fits each LOS class that has samples; a present class needs `min_per_class`
/// samples.
pub fn fit_ci_by_class(
    samples: &[PathLossSample],
    freq_ghz: f64,
    min_per_class: usize,
) -> Result<ClassFits> {
    let mut fits = ClassFits::default();
    for class in [LosClass::Los, LosClass::Nlos] {
        let subset: Vec<_> = samples.iter().filter(|s| s.los == class).copied().collect();
        if subset.is_empty() {
            continue;
        }
        if subset.len() < min_per_class {
            return Err(Error::InsufficientSamples {
                op: "fit_ci",
                needed: min_per_class,
                got: subset.len(),
            });
        }
        let model = fit_ci(&subset, freq_ghz)?;
        match class {
            LosClass::Los => fits.los = Some(model),
            LosClass::Nlos => fits.nlos = Some(model),
        }
    }
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(id: u32, d: f64, pl: f64) -> PathLossSample {
        PathLossSample {
            rx_id: id,
            distance_m: d,
            path_loss_db: pl,
            los: LosClass::Nlos,
        }
    }

    #[test]
    fn fspl_anchors() {
        assert_relative_eq!(fspl_1m(142.0), 75.49, epsilon = 0.01);
        assert_relative_eq!(fspl_1m(1.0), 32.45, epsilon = 0.01);
        assert_relative_eq!(fspl_1m(4.0 * 37.0) - fspl_1m(37.0), 20.0 * 4f64.log10(), epsilon = 1e-12);
    }

    #[test]
    fn ci_evaluation() {
        let m = CiModel::new(142.0, 2.01, 2.9).unwrap();
        assert_eq!(ci_path_loss(&m, 1.0, 0.0).unwrap(), fspl_1m(142.0));
        assert_relative_eq!(ci_path_loss(&m, 30.0, 0.0).unwrap(), 105.18, epsilon = 0.01);
        let per_decade = ci_path_loss(&m, 470.0, 0.0).unwrap() - ci_path_loss(&m, 47.0, 0.0).unwrap();
        assert_relative_eq!(per_decade, 20.1, epsilon = 1e-9);
        assert!(matches!(ci_path_loss(&m, 0.5, 0.0), Err(Error::DistanceBelowReference(_))));
    }

    #[test]
    fn noiseless_round_trip() {
        let m = CiModel::new(142.0, 3.20, 0.0).unwrap();
        let s: Vec<_> = (0..20)
            .map(|i| {
                let d = 24.0 + 1.5 * i as f64;
                sample(i, d, m.mean_path_loss(d).unwrap())
            })
            .collect();
        let fit = fit_ci(&s, 142.0).unwrap();
        assert_relative_eq!(fit.ple, 3.20, epsilon = 1e-9);
        assert!(fit.sigma_db < 1e-9);
    }

    #[test]
    fn two_point_hand_solution() {
        let f = fspl_1m(142.0);
        let s = [sample(1, 10.0, f + 20.0), sample(2, 100.0, f + 40.0)];
        assert_relative_eq!(fit_ci(&s, 142.0).unwrap().ple, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn fit_errors() {
        let f = fspl_1m(142.0);
        assert!(matches!(
            fit_ci(&[sample(1, 10.0, f + 20.0)], 142.0),
            Err(Error::InsufficientSamples { got: 1, .. })
        ));
        assert!(matches!(
            fit_ci(&[sample(1, 10.0, f + 20.0), sample(2, 10.0, f + 25.0)], 142.0),
            Err(Error::DegenerateDistances)
        ));
    }

    #[test]
    fn residuals() {
        let m = CiModel::new(142.0, 2.5, 0.0).unwrap();
        let s = [sample(4, 33.0, m.mean_path_loss(33.0).unwrap())];
        let chi = shadow_fading(&s, &m);
        assert_eq!(chi[0].0, 4);
        assert!(chi[0].1.abs() < 1e-12);
    }

    #[test]
    fn injected_shadowing_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let truth = CiModel::new(142.0, 3.20, 7.1).unwrap();
        let normal = Normal::new(0.0, truth.sigma_db).unwrap();
        let s: Vec<_> = (0..10_000)
            .map(|i| {
                let d = rng.random_range(20.0..60.0);
                sample(i, d, ci_path_loss(&truth, d, normal.sample(&mut rng)).unwrap())
            })
            .collect();
        let fit = fit_ci(&s, 142.0).unwrap();
        assert!((fit.sigma_db - 7.1).abs() / 7.1 < 0.05);
        assert!((fit.ple - 3.20).abs() < 0.02);
    }

    #[test]
    fn classes_fit_separately() {
        let los = CiModel::new(142.0, 2.01, 0.0).unwrap();
        let nlos = CiModel::new(142.0, 3.20, 0.0).unwrap();
        let mut s = Vec::new();
        for i in 0..6 {
            let d = 25.0 + 4.0 * i as f64;
            s.push(PathLossSample { los: LosClass::Los, ..sample(i, d, los.mean_path_loss(d).unwrap()) });
            s.push(sample(10 + i, d, nlos.mean_path_loss(d).unwrap()));
        }
        let fits = fit_ci_by_class(&s, 142.0, 3).unwrap();
        assert_relative_eq!(fits.los.unwrap().ple, 2.01, epsilon = 1e-9);
        assert_relative_eq!(fits.nlos.unwrap().ple, 3.20, epsilon = 1e-9);

        let only_los: Vec<_> = s.iter().filter(|x| x.los == LosClass::Los).copied().collect();
        let fits = fit_ci_by_class(&only_los, 142.0, 3).unwrap();
        assert!(fits.nlos.is_none());
        assert!(fit_ci_by_class(&only_los[..2], 142.0, 3).is_err());
    }

    proptest! {
        #[test]
        fn self_fit_residuals_are_orthogonal_to_log_distance(
            pts in prop::collection::vec((1.0f64..500.0, 60.0f64..180.0), 3..40)
        ) {
            let s: Vec<_> = pts.iter().enumerate().map(|(i, &(d, pl))| sample(i as u32, d, pl)).collect();
            prop_assume!(pts.iter().any(|p| (p.0 - pts[0].0).abs() > 1e-3));
            let m = fit_ci(&s, 142.0).unwrap();
            let chi = shadow_fading(&s, &m);
            // normal equation of the one-parameter least-squares fit
            let dot: f64 = chi.iter().zip(&s).map(|(c, s)| c.1 * s.distance_m.log10()).sum();
            let scale: f64 = chi.iter().map(|c| c.1.abs()).sum::<f64>() + 1.0;
            prop_assert!(dot.abs() < 1e-9 * scale * 10.0);
        }
    }
}
