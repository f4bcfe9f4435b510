use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrFamily {
    Exponential,
    ExpDecaySinusoid,
}

impl std::str::FromStr for CorrFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" | "exponential" => Ok(CorrFamily::Exponential),
            "expsin" | "exp_decay_sinusoid" => Ok(CorrFamily::ExpDecaySinusoid),
            other => Err(Error::invalid(format!(
                "unknown correlation family {other:?} (expected exp or expsin)"
            ))),
        }
    }
}

/// Analytic spatial correlation function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CorrShape {
    /// `exp(-d / d0)`
    Exponential { d0: f64 },
    /// `exp(-d / d1) * (cos(d / d2) + (d2 / d1) sin(d / d2))`
    ExpDecaySinusoid { d1: f64, d2: f64 },
}

impl CorrShape {
    pub fn exponential(d0: f64) -> Result<Self> {
        check_length("d0", d0)?;
        Ok(CorrShape::Exponential { d0 })
    }

    pub fn exp_decay_sinusoid(d1: f64, d2: f64) -> Result<Self> {
        check_length("d1", d1)?;
        check_length("d2", d2)?;
        Ok(CorrShape::ExpDecaySinusoid { d1, d2 })
    }

    pub fn family(&self) -> CorrFamily {
        match self {
            CorrShape::Exponential { .. } => CorrFamily::Exponential,
            CorrShape::ExpDecaySinusoid { .. } => CorrFamily::ExpDecaySinusoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CorrShape::Exponential { d0 } => check_length("d0", d0),
            CorrShape::ExpDecaySinusoid { d1, d2 } => {
                check_length("d1", d1)?;
                check_length("d2", d2)
            }
        }
    }

    /// Correlation at separation `d` meters (symmetric in `d`).
    pub fn eval(&self, d: f64) -> f64 {
        let d = d.abs();
        match *self {
            CorrShape::Exponential { d0 } => (-d / d0).exp(),
            CorrShape::ExpDecaySinusoid { d1, d2 } => {
                let (s, c) = (d / d2).sin_cos();
                (-d / d1).exp() * (c + d2 / d1 * s)
            }
        }
    }

    /// A scan range that always contains the first 1/e crossing.
    ///
    /// The sinusoid form reaches zero before `pi * d2`.
    pub fn crossing_bound(&self) -> f64 {
        match *self {
            CorrShape::Exponential { d0 } => 2.0 * d0,
            CorrShape::ExpDecaySinusoid { d2, .. } => PI * d2,
        }
    }
}

fn check_length(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be a positive length, got {v}")))
    }
}

/// Correlation function with its derived correlation distance and, when
/// fitted, the fit error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrModel {
    #[serde(flatten)]
    pub shape: CorrShape,
    pub corr_distance_m: f64,
    pub rmse: Option<f64>,
}

impl CorrModel {
    pub fn new(shape: CorrShape) -> Result<Self> {
        shape.validate()?;
        let corr_distance_m =
            correlation_distance(&shape, shape.crossing_bound(), DEFAULT_SCAN_STEP_M)?;
        Ok(Self {
            shape,
            corr_distance_m,
            rmse: None,
        })
    }

    pub fn family(&self) -> CorrFamily {
        self.shape.family()
    }

    pub fn eval(&self, d: f64) -> f64 {
        self.shape.eval(d)
    }
}

pub fn eval_corr_model(model: &CorrModel, d: f64) -> f64 {
    model.eval(d)
}

pub const DEFAULT_SCAN_STEP_M: f64 = 0.01;
const BISECTION_TOL_M: f64 = 1e-6;

/// Smallest separation in `(0, d_max]` where the correlation drops below 1/e.
///
/// A forward scan at `step` brackets the first crossing, bisection narrows it.
pub fn correlation_distance(shape: &CorrShape, d_max: f64, step: f64) -> Result<f64> {
    if !(d_max > 0.0 && step > 0.0) {
        return Err(Error::invalid("d_max and step must be positive"));
    }
    let threshold = 1.0 / E;
    let below = |d: f64| shape.eval(d) < threshold;

    let n_steps = (d_max / step).ceil() as usize;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=n_steps {
        let d = (i as f64 * step).min(d_max);
        if below(d) {
            hi = Some(d);
            break;
        }
        lo = d;
    }
    let mut hi = hi.ok_or(Error::NeverCrosses(d_max))?;
    while hi - lo > BISECTION_TOL_M {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_at_origin() {
        for s in [
            CorrShape::exponential(4.0).unwrap(),
            CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap(),
        ] {
            assert_eq!(s.eval(0.0), 1.0);
        }
    }

    #[test]
    fn sinusoid_value_at_3_8_m() {
        let s = CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap();
        assert_relative_eq!(s.eval(3.8), 0.354, epsilon = 0.002);
    }

    #[test]
    fn exponential_is_one_over_e_at_d0() {
        let s = CorrShape::exponential(7.5).unwrap();
        assert_relative_eq!(s.eval(7.5), 1.0 / E, epsilon = 1e-15);
    }

    #[test]
    fn correlation_distances() {
        let cd = |d1, d2| {
            let s = CorrShape::exp_decay_sinusoid(d1, d2).unwrap();
            correlation_distance(&s, 100.0, DEFAULT_SCAN_STEP_M).unwrap()
        };
        assert!((cd(6.2, 2.8) - 3.8).abs() <= 0.1);
        assert!((cd(25.5, 8.9) - 11.8).abs() <= 0.1);
        assert!((cd(55.6, 9.4) - 12.0).abs() <= 0.1);
        let e = CorrShape::exponential(13.0).unwrap();
        assert!((correlation_distance(&e, 100.0, 0.01).unwrap() - 13.0).abs() <= 1e-3);
        assert!(matches!(
            correlation_distance(&e, 5.0, 0.01),
            Err(Error::NeverCrosses(_))
        ));
    }

    #[test]
    fn model_carries_its_correlation_distance() {
        let m = CorrModel::new(CorrShape::exp_decay_sinusoid(25.5, 8.9).unwrap()).unwrap();
        assert!((m.corr_distance_m - 11.8).abs() <= 0.1);
        assert!(m.rmse.is_none());
        assert!(CorrShape::exp_decay_sinusoid(-1.0, 2.0).is_err());
    }

    #[test]
    fn sinusoid_has_zero_slope_at_origin() {
        let h = 1e-6;
        for (d1, d2) in [(6.2, 2.8), (25.5, 8.9), (55.6, 9.4)] {
            let s = CorrShape::exp_decay_sinusoid(d1, d2).unwrap();
            assert!(((s.eval(h) - s.eval(0.0)) / h).abs() < 1e-4);
        }
    }
}
