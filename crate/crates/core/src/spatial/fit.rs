//! Least-squares fit of a correlation function to binned estimates.
//!
//! A log-spaced grid over the length parameters picks the starting point and
//! Levenberg-Marquardt in log-parameter space refines it. The oscillating
//! form has many local minima, so the grid does the global work and keeps the
//! result deterministic.

use crate::error::{Error, Result};

use super::autocorr::AutocorrEstimate;
use super::model::{CorrFamily, CorrModel, CorrShape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Weight bins by their pair count instead of uniformly.
    pub weighted: bool,
    /// Search box for every length parameter, meters.
    pub min_length_m: f64,
    pub max_length_m: f64,
    /// Grid points per parameter axis.
    pub grid_points: usize,
    /// Refinement stops once an accepted step moves every parameter less than this.
    pub tol_m: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            weighted: false,
            min_length_m: 0.1,
            max_length_m: 200.0,
            grid_points: 121,
            tol_m: 1e-4,
            max_iterations: 10_000,
        }
    }
}

struct Target {
    d: Vec<f64>,
    rho: Vec<f64>,
    w: Vec<f64>,
}

impl Target {
    fn cost(&self, shape: &CorrShape) -> f64 {
        self.d
            .iter()
            .zip(&self.rho)
            .zip(&self.w)
            .map(|((&d, &r), &w)| w * (shape.eval(d) - r).powi(2))
            .sum()
    }

    fn rmse(&self, shape: &CorrShape) -> f64 {
        let sse: f64 = self
            .d
            .iter()
            .zip(&self.rho)
            .map(|(&d, &r)| (shape.eval(d) - r).powi(2))
            .sum();
        (sse / self.d.len() as f64).sqrt()
    }
}

fn shape_from(family: CorrFamily, p: &[f64]) -> CorrShape {
    match family {
        CorrFamily::Exponential => CorrShape::Exponential { d0: p[0] },
        CorrFamily::ExpDecaySinusoid => CorrShape::ExpDecaySinusoid { d1: p[0], d2: p[1] },
    }
}

/// Derivatives of the correlation with respect to the log of each length
/// parameter.
pub(crate) fn log_gradient(shape: &CorrShape, d: f64) -> [f64; 2] {
    match *shape {
        CorrShape::Exponential { d0 } => {
            let rho = (-d / d0).exp();
            [d / d0 * rho, 0.0]
        }
        CorrShape::ExpDecaySinusoid { d1, d2 } => {
            let env = (-d / d1).exp();
            let (s, c) = (d / d2).sin_cos();
            let rho = env * (c + d2 / d1 * s);
            let by_d1 = d / (d1 * d1) * rho - env * d2 / (d1 * d1) * s;
            let by_d2 = env * (s * (d / (d2 * d2) + 1.0 / d1) - c * d / (d1 * d2));
            [d1 * by_d1, d2 * by_d2]
        }
    }
}

/// Fits `family` to the populated bins of `est`.
pub fn fit_corr_model(
    est: &AutocorrEstimate,
    family: CorrFamily,
    opts: &FitOptions,
) -> Result<CorrModel> {
    if est.bins.len() < 3 {
        return Err(Error::InsufficientBins(est.bins.len()));
    }
    let target = Target {
        d: est.bins.iter().map(|b| b.distance_m).collect(),
        rho: est.bins.iter().map(|b| b.rho).collect(),
        w: est
            .bins
            .iter()
            .map(|b| if opts.weighted { b.pair_count as f64 } else { 1.0 })
            .collect(),
    };
    let n_params = match family {
        CorrFamily::Exponential => 1,
        CorrFamily::ExpDecaySinusoid => 2,
    };

    let start = grid_search(&target, family, n_params, opts);
    let best = refine(&target, family, n_params, start, opts)?;
    let shape = shape_from(family, &best);
    let mut model = CorrModel::new(shape)?;
    model.rmse = Some(target.rmse(&shape));
    Ok(model)
}

fn grid_search(target: &Target, family: CorrFamily, n_params: usize, opts: &FitOptions) -> Vec<f64> {
    // one-parameter family gets a denser axis for the same budget
    let points = if n_params == 1 {
        opts.grid_points * opts.grid_points.min(16)
    } else {
        opts.grid_points
    }
    .max(2);
    let (lo, hi) = (opts.min_length_m.ln(), opts.max_length_m.ln());
    let axis: Vec<f64> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect();

    let mut best = (f64::INFINITY, vec![axis[0]; n_params]);
    let mut consider = |p: Vec<f64>| {
        let c = target.cost(&shape_from(family, &p));
        if c < best.0 {
            best = (c, p);
        }
    };
    if n_params == 1 {
        for &a in &axis {
            consider(vec![a]);
        }
    } else {
        for &a in &axis {
            for &b in &axis {
                consider(vec![a, b]);
            }
        }
    }
    best.1
}

fn refine(
    target: &Target,
    family: CorrFamily,
    n_params: usize,
    start: Vec<f64>,
    opts: &FitOptions,
) -> Result<Vec<f64>> {
    let (lo, hi) = (opts.min_length_m.ln(), opts.max_length_m.ln());
    let mut theta: Vec<f64> = start.iter().map(|p| p.ln()).collect();
    let params = |t: &[f64]| t.iter().map(|x| x.exp()).collect::<Vec<_>>();
    let mut cost = target.cost(&shape_from(family, &params(&theta)));
    let mut lambda = 1e-3;

    for _ in 0..opts.max_iterations {
        let shape = shape_from(family, &params(&theta));
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for ((&d, &r), &w) in target.d.iter().zip(&target.rho).zip(&target.w) {
            let res = shape.eval(d) - r;
            let g = log_gradient(&shape, d);
            for a in 0..n_params {
                jtr[a] += w * g[a] * res;
                for b in 0..n_params {
                    jtj[a][b] += w * g[a] * g[b];
                }
            }
        }
        if jtr[..n_params].iter().all(|&g| g == 0.0) {
            return Ok(params(&theta));
        }

        let step = solve_damped(&jtj, &jtr, lambda, n_params);
        let trial: Vec<f64> = theta
            .iter()
            .zip(&step)
            .map(|(t, s)| (t + s).clamp(lo, hi))
            .collect();
        let trial_cost = target.cost(&shape_from(family, &params(&trial)));
        if trial_cost < cost {
            let moved = params(&trial)
                .iter()
                .zip(params(&theta))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            theta = trial;
            cost = trial_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if moved < opts.tol_m {
                return Ok(params(&theta));
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // no descent direction left at machine precision
                return Ok(params(&theta));
            }
        }
    }
    Err(Error::NonConvergence(opts.max_iterations))
}

/// Solves `(J^T J + lambda diag(J^T J)) step = -J^T r` for one or two unknowns.
fn solve_damped(jtj: &[[f64; 2]; 2], jtr: &[f64; 2], lambda: f64, n: usize) -> Vec<f64> {
    let damp = |v: f64| v + lambda * v.max(1e-12);
    if n == 1 {
        return vec![-jtr[0] / damp(jtj[0][0])];
    }
    let a = damp(jtj[0][0]);
    let d = damp(jtj[1][1]);
    let (b, c) = (jtj[0][1], jtj[1][0]);
    let det = a * d - b * c;
    vec![
        -(d * jtr[0] - b * jtr[1]) / det,
        -(a * jtr[1] - c * jtr[0]) / det,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::autocorr::AutocorrBin;

    fn bins_from(shape: &CorrShape, step: f64, max: f64) -> AutocorrEstimate {
        let n = (max / step).round() as i64;
        AutocorrEstimate {
            delta_d_m: step,
            bins: (1..=n)
                .map(|k| {
                    let d = k as f64 * step;
                    AutocorrBin {
                        k,
                        distance_m: d,
                        rho: shape.eval(d),
                        pair_count: 10,
                    }
                })
                .collect(),
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-6;
        for (d1, d2) in [(6.2, 2.8), (25.5, 8.9), (0.7, 40.0)] {
            for d in [0.3, 3.8, 17.0] {
                let s = CorrShape::ExpDecaySinusoid { d1, d2 };
                let g = log_gradient(&s, d);
                let fd1 = (CorrShape::ExpDecaySinusoid { d1: d1 * (1.0 + h), d2 }.eval(d)
                    - CorrShape::ExpDecaySinusoid { d1: d1 * (1.0 - h), d2 }.eval(d))
                    / (2.0 * h);
                let fd2 = (CorrShape::ExpDecaySinusoid { d1, d2: d2 * (1.0 + h) }.eval(d)
                    - CorrShape::ExpDecaySinusoid { d1, d2: d2 * (1.0 - h) }.eval(d))
                    / (2.0 * h);
                assert!((g[0] - fd1).abs() < 1e-6, "{d1} {d2} {d}");
                assert!((g[1] - fd2).abs() < 1e-6, "{d1} {d2} {d}");
            }
        }
    }

    #[test]
    fn recovers_sinusoid_parameters() {
        let truth = CorrShape::exp_decay_sinusoid(25.5, 8.9).unwrap();
        let m = fit_corr_model(
            &bins_from(&truth, 0.5, 40.0),
            CorrFamily::ExpDecaySinusoid,
            &FitOptions::default(),
        )
        .unwrap();
        let CorrShape::ExpDecaySinusoid { d1, d2 } = m.shape else {
            panic!("wrong family")
        };
        assert!((d1 - 25.5).abs() < 0.1, "{d1}");
        assert!((d2 - 8.9).abs() < 0.05, "{d2}");
        assert!(m.rmse.unwrap() < 1e-6);
    }

    #[test]
    fn recovers_exponential() {
        let truth = CorrShape::exponential(10.0).unwrap();
        let m = fit_corr_model(
            &bins_from(&truth, 0.5, 40.0),
            CorrFamily::Exponential,
            &FitOptions::default(),
        )
        .unwrap();
        let CorrShape::Exponential { d0 } = m.shape else {
            panic!("wrong family")
        };
        assert!((d0 - 10.0).abs() < 0.01, "{d0}");
        assert!((m.corr_distance_m - 10.0).abs() < 0.01);
    }

    #[test]
    fn weighted_mode_on_exact_data_agrees() {
        let truth = CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap();
        let mut est = bins_from(&truth, 0.5, 30.0);
        for (i, b) in est.bins.iter_mut().enumerate() {
            b.pair_count = 2 + i % 7;
        }
        let opts = FitOptions {
            weighted: true,
            ..FitOptions::default()
        };
        let m = fit_corr_model(&est, CorrFamily::ExpDecaySinusoid, &opts).unwrap();
        assert!((m.corr_distance_m - truth_cd(&truth)).abs() < 1e-3);
    }

    fn truth_cd(s: &CorrShape) -> f64 {
        CorrModel::new(*s).unwrap().corr_distance_m
    }

    #[test]
    fn too_few_bins() {
        let truth = CorrShape::exponential(10.0).unwrap();
        let mut est = bins_from(&truth, 0.5, 40.0);
        est.bins.truncate(2);
        assert!(matches!(
            fit_corr_model(&est, CorrFamily::Exponential, &FitOptions::default()),
            Err(Error::InsufficientBins(2))
        ));
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let truth = CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap();
        let mut est = bins_from(&truth, 0.5, 30.0);
        for (i, b) in est.bins.iter_mut().enumerate() {
            b.rho += if i % 2 == 0 { 0.05 } else { -0.05 };
        }
        let opts = FitOptions {
            grid_points: 5,
            max_iterations: 1,
            ..FitOptions::default()
        };
        assert!(matches!(
            fit_corr_model(&est, CorrFamily::ExpDecaySinusoid, &opts),
            Err(Error::NonConvergence(1))
        ));
    }

    #[test]
    fn sinusoid_family_does_not_nest_exponential() {
        // zero slope at the origin cannot follow exp(-d/D0) near d = 0
        let est = bins_from(&CorrShape::exponential(10.0).unwrap(), 0.5, 40.0);
        let opts = FitOptions::default();
        let exp = fit_corr_model(&est, CorrFamily::Exponential, &opts).unwrap();
        let sin = fit_corr_model(&est, CorrFamily::ExpDecaySinusoid, &opts).unwrap();
        assert!(exp.rmse.unwrap() < 1e-6);
        assert!(sin.rmse.unwrap() > 1e-2);
    }
}
