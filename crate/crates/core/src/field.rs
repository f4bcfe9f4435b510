//! Spatially correlated Gaussian fields over arbitrary 2D point sets.
//!
//! The correlation matrix comes straight from the analytic correlation
//! function. The sinusoid form is positive definite along a line but can be
//! indefinite over 2D point sets, so the matrix goes through an eigenvalue
//! clamp before factorization.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::Location;
use crate::error::{Error, Result};
use crate::spatial::CorrShape;

/// Eigenvalue floor used by [`nearest_psd`].
pub const EIGEN_FLOOR: f64 = 1e-10;

/// Relative Frobenius repair distance above which a warning is logged.
pub const REPAIR_WARN_FRACTION: f64 = 0.1;

/// 64-bit RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    /// Seed for sub-stream `index`: `splitmix64(seed ^ splitmix64(index))`.
    pub fn derive(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub corr: CorrShape,
    pub mean: f64,
    pub std_dev: f64,
    /// Lower clip applied after correlation.
    pub clip_min: Option<f64>,
}

impl FieldSpec {
    pub fn new(corr: CorrShape, mean: f64, std_dev: f64, clip_min: Option<f64>) -> Result<Self> {
        corr.validate()?;
        if !(std_dev >= 0.0 && std_dev.is_finite() && mean.is_finite()) {
            return Err(Error::invalid(format!(
                "field needs finite mean and std_dev >= 0, got ({mean}, {std_dev})"
            )));
        }
        Ok(Self {
            corr,
            mean,
            std_dev,
            clip_min,
        })
    }
}

/// `R[i][j] = rho(d_ij)` over ground-plane separations.
pub fn correlation_matrix(points: &[Location], model: &CorrShape) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            model.eval(points[i].distance_2d(&points[j]))
        }
    })
}

/// Result of the eigenvalue-clamp repair.
#[derive(Debug, Clone)]
pub struct PsdRepair {
    pub matrix: DMatrix<f64>,
    /// `L` with `L * L^T == matrix`.
    pub factor: DMatrix<f64>,
    /// Frobenius distance between input and repaired matrix.
    pub frobenius_distance: f64,
    /// Same, relative to the input's Frobenius norm.
    pub relative_distance: f64,
    pub min_eigenvalue: f64,
}

/// Symmetrizes, clamps eigenvalues below [`EIGEN_FLOOR`], reconstructs and
/// rescales to unit diagonal.
pub fn repair_psd(r: &DMatrix<f64>) -> PsdRepair {
    let sym = (r + r.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let clamped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));

    // V * sqrt(L), then scale rows so the product has a unit diagonal
    let mut factor = eig.eigenvectors.clone();
    for (j, mut col) in factor.column_iter_mut().enumerate() {
        col *= clamped[j].sqrt();
    }
    for mut row in factor.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let matrix = &factor * factor.transpose();
    let frobenius_distance = (&matrix - r).norm();
    let norm = r.norm();
    PsdRepair {
        relative_distance: if norm > 0.0 { frobenius_distance / norm } else { 0.0 },
        matrix,
        factor,
        frobenius_distance,
        min_eigenvalue,
    }
}

/// Nearest positive semidefinite matrix with unit diagonal, by eigenvalue
/// clamping.
pub fn nearest_psd(r: &DMatrix<f64>) -> DMatrix<f64> {
    repair_psd(r).matrix
}

/// A factorized correlation structure over a fixed point set, reusable across
/// realizations.
#[derive(Debug, Clone)]
pub struct CorrelatedField {
    factor: DMatrix<f64>,
    relative_repair: f64,
}

impl CorrelatedField {
    pub fn new(points: &[Location], model: &CorrShape) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("field generation needs at least one point"));
        }
        let repair = repair_psd(&correlation_matrix(points, model));
        if repair.relative_distance >= REPAIR_WARN_FRACTION {
            log::warn!(
                "correlation matrix repair moved it by {:.1}% of its Frobenius norm",
                100.0 * repair.relative_distance
            );
        }
        Ok(Self {
            factor: repair.factor,
            relative_repair: repair.relative_distance,
        })
    }

    pub fn len(&self) -> usize {
        self.factor.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.factor.nrows() == 0
    }

    /// Frobenius repair distance relative to the raw correlation matrix.
    pub fn relative_repair(&self) -> f64 {
        self.relative_repair
    }

    /// Zero-mean, unit-variance correlated draw.
    pub fn unit_draw(&self, seed: Seed) -> DVector<f64> {
        let mut rng = seed.rng();
        let z = DVector::from_fn(self.factor.ncols(), |_, _| {
            StandardNormal.sample(&mut rng)
        });
        &self.factor * z
    }

    pub fn sample(&self, spec: &FieldSpec, seed: Seed) -> Vec<f64> {
        self.unit_draw(seed)
            .iter()
            .map(|&u| {
                let v = spec.mean + spec.std_dev * u;
                match spec.clip_min {
                    Some(lo) => v.max(lo),
                    None => v,
                }
            })
            .collect()
    }
}

/// One realization of the field described by `spec` at `points`.
pub fn sample_field(points: &[Location], spec: &FieldSpec, seed: Seed) -> Result<Vec<f64>> {
    Ok(CorrelatedField::new(points, &spec.corr)?.sample(spec, seed))
}

fn std_normal_cdf(t: f64) -> f64 {
    0.5 * libm::erfc(-t / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Mean and mean square of `max(0, Z + t)` for standard normal `Z`.
fn rectified_moments(t: f64) -> (f64, f64) {
    let (cdf, pdf) = (std_normal_cdf(t), std_normal_pdf(t));
    (t * cdf + pdf, (t * t + 1.0) * cdf + t * pdf)
}

/// Latent Gaussian `(mean, std)` whose values clipped at zero have the given
/// mean and standard deviation.
///
/// Clipping a Gaussian at zero raises its mean, so a nonnegative parameter
/// generated as `max(0, X)` needs `X` shifted down to keep the target
/// moments.
pub fn rectified_gaussian_latent(mean: f64, std_dev: f64) -> Result<(f64, f64)> {
    if std_dev == 0.0 && mean >= 0.0 {
        return Ok((mean, 0.0));
    }
    if !(mean > 0.0 && std_dev > 0.0 && mean.is_finite() && std_dev.is_finite()) {
        return Err(Error::invalid(format!(
            "clipped field needs mean > 0 and std_dev >= 0, got ({mean}, {std_dev})"
        )));
    }
    let cv = |t: f64| {
        let (m1, m2) = rectified_moments(t);
        (m2 - m1 * m1).max(0.0).sqrt() / m1
    };
    let target = std_dev / mean;
    // cv falls monotonically in t; past `hi` the clip is immaterial
    let (mut lo, mut hi) = (-6.0, mean / std_dev + 10.0);
    if target >= cv(lo) {
        return Err(Error::invalid(format!(
            "std/mean ratio {target} too large for a zero-clipped Gaussian"
        )));
    }
    if target <= cv(hi) {
        return Ok((mean, std_dev));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cv(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    let sigma = mean / rectified_moments(t).0;
    Ok((t * sigma, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::ParamSeries;

    fn line(n: usize, spacing: f64) -> Vec<Location> {
        (0..n)
            .map(|i| Location::new(i as u32, spacing * i as f64, 0.0, 1.5).unwrap())
            .collect()
    }

    fn min_eig(m: &DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn matrix_entries() {
        let one = correlation_matrix(&line(1, 1.0), &CorrShape::exponential(3.0).unwrap());
        assert_eq!(one, DMatrix::from_element(1, 1, 1.0));

        let two = correlation_matrix(&line(2, 4.0), &CorrShape::exponential(4.0).unwrap());
        assert!((two[(0, 1)] - (-1f64).exp()).abs() < 1e-15);

        let pts: Vec<_> = [0.0, 3.0, 24.15]
            .iter()
            .enumerate()
            .map(|(i, &x)| Location::new(i as u32, x, 0.0, 1.5).unwrap())
            .collect();
        let shape = CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap();
        let r = correlation_matrix(&pts, &shape);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { shape.eval((pts[i].x - pts[j].x).abs()) };
                assert!((r[(i, j)] - expect).abs() < 1e-12);
                assert_eq!(r[(i, j)], r[(j, i)]);
            }
        }
    }

    #[test]
    fn identity_is_fixed_point() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert!((nearest_psd(&id) - id).amax() < 1e-12);
    }

    #[test]
    fn exponential_kernel_is_unchanged() {
        let r = correlation_matrix(&line(40, 0.7), &CorrShape::exponential(5.0).unwrap());
        assert!(min_eig(&r) > 0.0);
        assert!((nearest_psd(&r) - &r).amax() < 1e-9);
    }

    #[test]
    fn indefinite_matrix_is_repaired() {
        // eigenvalues 1.6, 1.5, -0.1
        let q = SymmetricEigen::new(DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 1.0, 0.3, 1.0, 3.0, 0.2, 0.3, 0.2, 1.0],
        ))
        .eigenvectors;
        let r = &q * DMatrix::from_diagonal(&DVector::from_vec(vec![1.6, 1.5, -0.1])) * q.transpose();
        assert!(min_eig(&r) < -0.09);
        let rep = repair_psd(&r);
        assert!(min_eig(&rep.matrix) >= -1e-12);
        for i in 0..3 {
            assert!((rep.matrix[(i, i)] - 1.0).abs() < 1e-12);
        }
        assert!((&rep.factor * rep.factor.transpose() - &rep.matrix).amax() < 1e-12);
        assert!(rep.frobenius_distance > 0.0);
    }

    #[test]
    fn zero_std_gives_the_mean() {
        let spec = FieldSpec::new(CorrShape::exponential(5.0).unwrap(), 4.2, 0.0, None).unwrap();
        for s in 0..5 {
            let v = sample_field(&line(10, 1.0), &spec, Seed(s)).unwrap();
            assert!(v.iter().all(|&x| x == 4.2));
        }
    }

    #[test]
    fn same_seed_same_field() {
        let spec =
            FieldSpec::new(CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap(), 0.0, 7.1, None).unwrap();
        let pts = line(30, 0.5);
        let a = sample_field(&pts, &spec, Seed(99)).unwrap();
        let b = sample_field(&pts, &spec, Seed(99)).unwrap();
        let c = sample_field(&pts, &spec, Seed(100)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn clip_floor_applies_after_correlation() {
        let spec =
            FieldSpec::new(CorrShape::exponential(5.0).unwrap(), 0.5, 2.0, Some(0.0)).unwrap();
        let v = sample_field(&line(50, 1.0), &spec, Seed(1)).unwrap();
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!(v.contains(&0.0));
    }

    #[test]
    fn empty_points_rejected() {
        let spec = FieldSpec::new(CorrShape::exponential(5.0).unwrap(), 0.0, 1.0, None).unwrap();
        assert!(sample_field(&[], &spec, Seed(0)).is_err());
    }

    #[test]
    fn single_point_marginal() {
        let spec = FieldSpec::new(CorrShape::exponential(5.0).unwrap(), 0.0, 7.1, None).unwrap();
        let field = CorrelatedField::new(&line(1, 1.0), &spec.corr).unwrap();
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|i| field.sample(&spec, Seed(i))[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((sd - 7.1).abs() / 7.1 < 0.02, "{sd}");
        assert!(mean.abs() < 3.0 * 7.1 / (n as f64).sqrt());
    }

    #[test]
    fn ensemble_marginals_on_a_route() {
        let spec = FieldSpec::new(CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap(), 3.0, 2.0, None)
            .unwrap();
        let pts = line(20, 3.0);
        let field = CorrelatedField::new(&pts, &spec.corr).unwrap();
        let n = 4000;
        let draws: Vec<Vec<f64>> = (0..n).map(|i| field.sample(&spec, Seed(7).derive(i))).collect();
        for p in 0..pts.len() {
            let m = draws.iter().map(|d| d[p]).sum::<f64>() / n as f64;
            assert!((m - 3.0).abs() < 3.0 * 2.0 / (n as f64).sqrt(), "point {p}: {m}");
        }
    }

    #[test]
    fn ensemble_correlation_tracks_target() {
        let shape = CorrShape::exp_decay_sinusoid(6.2, 2.8).unwrap();
        let spec = FieldSpec::new(shape, 0.0, 1.0, None).unwrap();
        let pts = line(121, 0.5);
        let field = CorrelatedField::new(&pts, &shape).unwrap();
        let all: Vec<_> = (0..500)
            .map(|i| {
                let v = field.sample(&spec, Seed(21).derive(i));
                ParamSeries::new(pts.iter().copied().zip(v).collect()).unwrap()
            })
            .collect();
        let ens = crate::spatial::estimate_autocorr_pooled(&all, 0.05, 2).unwrap();
        let worst = ens
            .bins
            .iter()
            .filter(|b| b.distance_m <= 20.0)
            .map(|b| (b.rho - shape.eval(b.distance_m)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.05, "{worst}");
    }

    #[test]
    fn rectified_latent_hits_target_moments() {
        for (m, s) in [(5.7, 8.9), (21.9, 23.9), (0.26, 0.22), (0.65, 0.32)] {
            let (mu, sigma) = rectified_gaussian_latent(m, s).unwrap();
            // independent check by quadrature of max(0, x) under N(mu, sigma)
            let (mut m1, mut m2) = (0.0, 0.0);
            let n = 200_000;
            let (a, b) = (mu - 12.0 * sigma, mu + 12.0 * sigma);
            let h = (b - a) / n as f64;
            for i in 0..n {
                let x = a + (i as f64 + 0.5) * h;
                let w = (-0.5 * ((x - mu) / sigma).powi(2)).exp()
                    / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                    * h;
                let y = x.max(0.0);
                m1 += w * y;
                m2 += w * y * y;
            }
            assert!((m1 - m).abs() < 1e-6 * m, "{m}: {m1}");
            assert!(((m2 - m1 * m1).sqrt() - s).abs() < 1e-6 * s);
        }
        assert_eq!(rectified_gaussian_latent(3.0, 0.0).unwrap(), (3.0, 0.0));
        assert!(rectified_gaussian_latent(-1.0, 1.0).is_err());
    }
}
