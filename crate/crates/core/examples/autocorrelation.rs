// Estimate spatial autocorrelation along a route and fit a correlation
// model to it.
//
// ```bash
// cargo run --example autocorrelation
// ```

use subthz::channel::Location;
use subthz::field::{CorrelatedField, FieldSpec, Seed};
use subthz::spatial::{
    estimate_autocorr, estimate_autocorr_pooled, fit_corr_model, CorrFamily, CorrShape,
    FitOptions, ParamSeries,
};

pub fn run_example() -> subthz::Result<()> {
    let truth = CorrShape::exp_decay_sinusoid(6.2, 2.8)?;
    let points: Vec<Location> = (0..81)
        .map(|i| Location::new(i, 0.5 * i as f64, 0.0, 1.5))
        .collect::<subthz::Result<_>>()?;
    let field = CorrelatedField::new(&points, &truth)?;
    let spec = FieldSpec::new(truth, 0.0, 1.0, None)?;
    let draw = |i: u64| {
        let v = field.sample(&spec, Seed(9).derive(i));
        ParamSeries::new(points.iter().copied().zip(v).collect())
    };

    // one route is noisy
    let single = estimate_autocorr(&draw(0)?, 0.05, 2)?;
    let fit = fit_corr_model(&single, CorrFamily::ExpDecaySinusoid, &FitOptions::default())?;
    println!(
        "single route: {} bins, corr distance {:.2} m, rmse {:.3}",
        single.bins.len(),
        fit.corr_distance_m,
        fit.rmse.unwrap_or(f64::NAN)
    );

    // pooling 200 realizations recovers the generating model
    let series = (0..200).map(draw).collect::<subthz::Result<Vec<_>>>()?;
    let pooled = estimate_autocorr_pooled(&series, 0.05, 2)?;
    let fit = fit_corr_model(&pooled, CorrFamily::ExpDecaySinusoid, &FitOptions::default())?;
    println!("pooled:       {fit:?}");
    for b in pooled.bins.iter().filter(|b| b.k % 40 == 0) {
        println!("  d = {:4.1} m  rho = {:+.3}  model {:+.3}", b.distance_m, b.rho, truth.eval(b.distance_m));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
